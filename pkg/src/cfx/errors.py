"""Error types shared across the package.

Everything derives from CfxError so callers can catch one base class.
The CLI maps CfxError to exit code 1 and threshold failures to exit code 2.
"""


class CfxError(Exception):
    """Base class for all package errors."""


class InvalidSpec(CfxError):
    """Model specification violates a structural or integrability requirement."""


class OutOfRange(CfxError):
    """A time, tenor, or frequency argument lies outside the valid range."""


class QuadratureFail(CfxError):
    """Adaptive quadrature could not reach the requested tolerance."""


class GridError(CfxError):
    """High-frequency grid construction or indexing is inconsistent."""


class DegenerateCF(CfxError):
    """Characteristic function magnitude fell below the usable floor."""


class DegenerateVariance(CfxError):
    """Variance estimate is too close to zero for the requested transform."""


class DomainError(CfxError):
    """Transform applied outside its domain (e.g. log of a negative variance)."""


class ConfigError(CfxError):
    """Experiment configuration file is missing keys or has bad values."""


class InsufficientPoints(CfxError):
    """Slope fitting needs more points or a wider scale range."""


class TailNotDecayed(CfxError):
    """Option curve has not decayed at the strike-grid boundary."""


class UnstableScheme(CfxError):
    """Euler scheme hit the volatility floor too often to be trusted."""
