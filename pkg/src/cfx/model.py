r"""Model layer: mark measures, jump systems, and deep Ito semimartingale specs.

The price model is

    dx_t = alpha_t dt + sigma_t dW_t + (compensated jumps gamma(t, z)),

where sigma has its own drift, W and W-perp loadings, and jump part, and
every first-layer coefficient is itself a semimartingale whose coefficients
("second layer") are user-supplied constants.  Three hidden layers with the
third identically zero is the desk-scale default.

Jumps are driven by a Poisson random measure thinned to stochastic intensity
lambda(t, z) = intensity_scale_t * intensity_base(z) against a fixed mark
measure F.  Time variation of the jump coefficient functions is realized
through scalar carrier processes:

    gamma(t, z)       = gamma_scale_t       * gamma_profile(z)
    gamma_sigma(t, z) = gamma_sigma_scale_t * gamma_sigma_profile(z)
    lambda(t, z)      = intensity_scale_t   * intensity_base(z)

so the diffusive part of gamma is sigma_gamma(z) = gamma_carrier.vol *
gamma_profile(z), the jump-of-jump coefficient is gamma_gamma(z, z') =
gamma_carrier.jump_scale * gamma_carrier.jump_profile(z') * gamma_profile(z),
and the intensity analogues come from the intensity carrier.  A frozen
ModelState records the carrier values at one instant; all spot formulas
take states, never paths.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate as _sciint
from scipy.special import gamma as _gamma_fn, gammainc as _gammainc

from .errors import InvalidSpec, OutOfRange, QuadratureFail

__all__ = [
    "MarkMeasure",
    "PointMass",
    "DoubleExponential",
    "TemperedStable",
    "Carrier",
    "JumpSystem",
    "SecondLayer",
    "ModelSpec",
    "ModelState",
    "Model",
    "build_model",
    "frozen_state",
    "assumption_report",
]

_QUAD_REL_TOL = 1e-9
_QUAD_LIMIT = 200


def _const_one(z: float) -> float:
    return 1.0


def _identity(z: float) -> float:
    return z


# ---------------------------------------------------------------- mark measures


class MarkMeasure:
    """A sigma-finite measure on the mark space (the real line).

    Subclasses provide exact atom evaluation or adaptive quadrature for
    integrate(), plus closed forms for the compensated exponential integral
    used by the Levy-Khintchine oracle.
    """

    is_finite_activity: bool = True

    def integrate(self, fn: Callable[[float], complex], rel_tol: float = _QUAD_REL_TOL):
        """Return (integral of fn dF, error estimate)."""
        raise NotImplementedError

    def total_mass(self) -> float:
        raise NotImplementedError

    def abs_moment(self, p: float) -> float:
        """Integral of |z|^p dF(z); may be math.inf."""
        raise NotImplementedError

    def cexp_integral(self, w: complex) -> complex:
        """Closed form of integral of (e^{iwz} - 1 - iwz) dF(z)."""
        raise NotImplementedError

    def exp1_integral(self, w: complex) -> complex:
        """Closed form of integral of (e^{iwz} - 1) dF(z) (finite activity only)."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n marks from F normalized to a probability law."""
        raise NotImplementedError


class PointMass(MarkMeasure):
    """Single atom: mass `weight` at mark `size`."""

    def __init__(self, size: float, weight: float = 1.0):
        if weight <= 0.0:
            raise InvalidSpec(f"point mass weight must be positive, got {weight}")
        if size == 0.0:
            raise InvalidSpec("point mass at z=0 carries no jump")
        self.size = float(size)
        self.weight = float(weight)

    def integrate(self, fn, rel_tol=_QUAD_REL_TOL):
        return self.weight * complex(fn(self.size)), 0.0

    def total_mass(self):
        return self.weight

    def abs_moment(self, p):
        return self.weight * abs(self.size) ** p

    def cexp_integral(self, w):
        iw = 1j * w
        return self.weight * (np.exp(iw * self.size) - 1.0 - iw * self.size)

    def exp1_integral(self, w):
        return self.weight * (np.exp(1j * w * self.size) - 1.0)

    def sample(self, rng, n):
        return np.full(n, self.size)


class DoubleExponential(MarkMeasure):
    """Two-sided exponential probability density.

    Density p*eta_pos*exp(-eta_pos z) for z > 0 and
    (1-p)*eta_neg*exp(eta_neg z) for z < 0; total mass one.
    """

    def __init__(self, eta_pos: float, eta_neg: float, p: float = 0.5):
        if eta_pos <= 0.0 or eta_neg <= 0.0:
            raise InvalidSpec("double exponential rates must be positive")
        if not 0.0 <= p <= 1.0:
            raise InvalidSpec(f"mixing weight p must lie in [0,1], got {p}")
        self.eta_pos = float(eta_pos)
        self.eta_neg = float(eta_neg)
        self.p = float(p)

    def density(self, z):
        z = np.asarray(z, dtype=float)
        pos = self.p * self.eta_pos * np.exp(-self.eta_pos * np.clip(z, 0.0, None))
        neg = (1.0 - self.p) * self.eta_neg * np.exp(self.eta_neg * np.clip(z, None, 0.0))
        return np.where(z > 0.0, pos, neg)

    def integrate(self, fn, rel_tol=_QUAD_REL_TOL):
        val = 0.0 + 0.0j
        err = 0.0
        for side, weight, rate in ((+1, self.p, self.eta_pos),
                                   (-1, 1.0 - self.p, self.eta_neg)):
            if weight == 0.0:
                continue

            def g(z, _r=rate, _w=weight, _s=side):
                return complex(fn(_s * z)) * _w * _r * math.exp(-_r * z)

            re, re_err = _sciint.quad(lambda z: g(z).real, 0.0, np.inf,
                                      epsabs=1e-15, epsrel=rel_tol, limit=_QUAD_LIMIT)
            im, im_err = _sciint.quad(lambda z: g(z).imag, 0.0, np.inf,
                                      epsabs=1e-15, epsrel=rel_tol, limit=_QUAD_LIMIT)
            val += re + 1j * im
            err += re_err + im_err
        return val, err

    def total_mass(self):
        return 1.0

    def abs_moment(self, p):
        return (self.p * _gamma_fn(p + 1.0) / self.eta_pos ** p
                + (1.0 - self.p) * _gamma_fn(p + 1.0) / self.eta_neg ** p)

    def cexp_integral(self, w):
        iw = 1j * w
        pos = self.eta_pos / (self.eta_pos - iw) - 1.0 - iw / self.eta_pos
        neg = self.eta_neg / (self.eta_neg + iw) - 1.0 + iw / self.eta_neg
        return self.p * pos + (1.0 - self.p) * neg

    def exp1_integral(self, w):
        iw = 1j * w
        return (self.p * (self.eta_pos / (self.eta_pos - iw) - 1.0)
                + (1.0 - self.p) * (self.eta_neg / (self.eta_neg + iw) - 1.0))

    def sample(self, rng, n):
        sign = rng.random(n) < self.p
        pos = rng.exponential(1.0 / self.eta_pos, size=n)
        neg = -rng.exponential(1.0 / self.eta_neg, size=n)
        return np.where(sign, pos, neg)


class TemperedStable(MarkMeasure):
    """Symmetric tempered stable measure c|z|^{-1-alpha} e^{-lam|z|} dz.

    alpha in (1, 2) gives infinite activity and infinite variation of small
    jumps; abs_moment(p) is finite only for p > alpha.
    """

    is_finite_activity = False

    def __init__(self, alpha: float, c: float = 1.0, lam: float = 1.0):
        if not 1.0 < alpha < 2.0:
            raise InvalidSpec(f"tempered stable index must lie in (1,2), got {alpha}")
        if c <= 0.0 or lam <= 0.0:
            raise InvalidSpec("tempered stable scale and tempering rate must be positive")
        self.alpha = float(alpha)
        self.c = float(c)
        self.lam = float(lam)

    def integrate(self, fn, rel_tol=_QUAD_REL_TOL):
        # Below z0 the symmetrized integrand fn(z)+fn(-z) is dominated by
        # floating-point cancellation, yet for alpha near 2 that region still
        # carries O(z0^{2-alpha}) mass.  Estimate the quadratic coefficient
        # q0 = lim (fn(z)+fn(-z))/z^2 by Richardson extrapolation and handle
        # (0, z0) in closed form via the lower incomplete gamma; quadrature
        # covers the rest, where the integrand is numerically trustworthy.
        a, c, lam = self.alpha, self.c, self.lam
        z0 = 1e-3

        def both(z):
            return complex(fn(z)) + complex(fn(-z))

        def weighted(z):
            return both(z) * c * z ** (-1.0 - a) * math.exp(-lam * z)

        q_half = both(0.5 * z0) / (0.25 * z0 * z0)
        q0 = (4.0 * q_half - both(z0) / (z0 * z0)) / 3.0
        moment = c * lam ** (a - 2.0) * _gamma_fn(2.0 - a) * _gammainc(2.0 - a, lam * z0)
        val = q0 * moment
        err = abs(q0 - q_half) * abs(moment)
        # quad's roundoff warnings are routine near the cutoff; the error
        # estimate accumulated here carries the real news.
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", _sciint.IntegrationWarning)
            for lo, hi in ((z0, 1.0), (1.0, np.inf)):
                re, re_err = _sciint.quad(lambda z: weighted(z).real, lo, hi,
                                          epsabs=1e-14, epsrel=rel_tol, limit=_QUAD_LIMIT)
                im, im_err = _sciint.quad(lambda z: weighted(z).imag, lo, hi,
                                          epsabs=1e-14, epsrel=rel_tol, limit=_QUAD_LIMIT)
                val += re + 1j * im
                err += re_err + im_err
        if not np.isfinite(val) or err > 1e-5 * max(1.0, abs(val)):
            raise QuadratureFail("tempered stable integrand did not converge")
        return val, err

    def total_mass(self):
        return math.inf

    def abs_moment(self, p):
        if p <= self.alpha:
            return math.inf
        return 2.0 * self.c * _gamma_fn(p - self.alpha) * self.lam ** (self.alpha - p)

    def cexp_integral(self, w):
        a, c, lam = self.alpha, self.c, self.lam
        g = _gamma_fn(-a)
        one_side = lambda s: (lam - 1j * s * w) ** a - lam ** a + 1j * s * w * a * lam ** (a - 1.0)
        return c * g * (one_side(+1.0) + one_side(-1.0))

    def exp1_integral(self, w):
        raise InvalidSpec("e^{iwz}-1 is not F-integrable for infinite-activity marks")

    def sample(self, rng, n):
        raise InvalidSpec("path simulation supports finite-activity marks only")


# ---------------------------------------------------------------- jump system


@dataclass(frozen=True)
class Carrier:
    """Scalar semimartingale multiplying a z-profile.

    dc_t = drift dt + vol dW_t + jump_scale * jump_profile(z) d(mu - nu);
    init is the time-t value.  Constants only (second layer).
    """

    init: float = 0.0
    drift: float = 0.0
    vol: float = 0.0
    jump_scale: float = 0.0
    jump_profile: Optional[Callable[[float], float]] = None

    def jump_size(self, z: float) -> float:
        if self.jump_scale == 0.0 or self.jump_profile is None:
            return 0.0
        return self.jump_scale * self.jump_profile(z)

    @property
    def is_constant(self) -> bool:
        return self.drift == 0.0 and self.vol == 0.0 and self.jump_scale == 0.0


@dataclass(frozen=True)
class JumpSystem:
    """Mark measure plus the profile/carrier factorization of jump coefficients."""

    mark: MarkMeasure
    gamma_profile: Callable[[float], float] = _identity
    gamma_carrier: Carrier = field(default_factory=lambda: Carrier(init=1.0))
    gamma_sigma_profile: Optional[Callable[[float], float]] = None
    gamma_sigma_carrier: Carrier = field(default_factory=Carrier)
    intensity_base: Callable[[float], float] = _const_one
    intensity_carrier: Carrier = field(default_factory=lambda: Carrier(init=1.0))

    # coefficient functions at a frozen state ------------------------------

    def gamma(self, state: "ModelState", z: float) -> float:
        """Price jump size for mark z."""
        return state.gamma_scale * self.gamma_profile(z)

    def gamma_sigma(self, state: "ModelState", z: float) -> float:
        """Volatility jump size for mark z."""
        if self.gamma_sigma_profile is None:
            return 0.0
        return state.gamma_sigma_scale * self.gamma_sigma_profile(z)

    def sigma_gamma(self, state: "ModelState", z: float) -> float:
        """Diffusive (W) loading of the price jump coefficient at mark z."""
        return self.gamma_carrier.vol * self.gamma_profile(z)

    def gamma_gamma(self, state: "ModelState", z: float, zp: float) -> float:
        """Jump of the price jump coefficient at mark z caused by mark zp."""
        return self.gamma_carrier.jump_size(zp) * self.gamma_profile(z)

    def intensity(self, state: "ModelState", z: float) -> float:
        """Thinning intensity lambda(t, z)."""
        return state.intensity_scale * self.intensity_base(z)

    def sigma_lambda1(self, state: "ModelState", z: float) -> float:
        """W loading of the intensity lambda(., z)."""
        return self.intensity_carrier.vol * self.intensity_base(z)

    def gamma_lambda(self, state: "ModelState", z: float, zp: float) -> float:
        """Jump of lambda(., z) caused by mark zp (uniform coordinate ignored)."""
        return self.intensity_carrier.jump_size(zp) * self.intensity_base(z)

    @property
    def has_vol_jumps(self) -> bool:
        return self.gamma_sigma_profile is not None

    @property
    def time_invariant_gamma(self) -> bool:
        return self.gamma_carrier.is_constant


# ---------------------------------------------------------------- model spec


@dataclass(frozen=True)
class SecondLayer:
    """Constant drift/vol coefficients of the two vol-of-vol processes."""

    ss_drift: float = 0.0
    ss_vol: float = 0.0
    ssp_drift: float = 0.0
    ssp_vol: float = 0.0


@dataclass(frozen=True)
class ModelSpec:
    """Frozen description of the model; see module docstring for dynamics."""

    sigma: float
    alpha: float = 0.0
    drift_mode: str = "constant"  # "constant" or "exp_compensator"
    sigma_drift: float = 0.0
    vol_of_vol: float = 0.0
    vol_of_vol_perp: float = 0.0
    second_layer: SecondLayer = field(default_factory=SecondLayer)
    jumps: Optional[JumpSystem] = None
    activity_r: float = 1.0
    layers: int = 3
    x0: float = 0.0
    sigma_floor: float = 1e-6


@dataclass(frozen=True)
class ModelState:
    """Left-limit values of all coefficient processes at one instant."""

    time: float
    x: float
    sigma: float
    alpha: float
    vol_of_vol: float
    vol_of_vol_perp: float
    intensity_scale: float
    gamma_scale: float
    gamma_sigma_scale: float

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise InvalidSpec(f"state volatility must be positive, got {self.sigma}")
        if self.intensity_scale < 0.0:
            raise InvalidSpec("intensity scale cannot be negative")


class Model:
    """Validated model with precomputed compensator moments.

    Use build_model() rather than constructing directly.
    """

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        self.jumps = spec.jumps
        # compensator moments: integral of profile(z)*base(z) dF(z), used by
        # the Euler scheme to center the compensated jump integrals.
        self.m_gamma = 0.0
        self.m_gamma_sigma = 0.0
        self.m_gamma_jump = 0.0
        self.m_intensity_jump = 0.0
        self.exp_comp = 0.0
        j = self.jumps
        if j is not None:
            base = j.intensity_base
            self.m_gamma = j.mark.integrate(lambda z: j.gamma_profile(z) * base(z))[0].real
            if j.gamma_sigma_profile is not None:
                self.m_gamma_sigma = j.mark.integrate(
                    lambda z: j.gamma_sigma_profile(z) * base(z))[0].real
            if j.gamma_carrier.jump_profile is not None:
                self.m_gamma_jump = j.mark.integrate(
                    lambda z: j.gamma_carrier.jump_profile(z) * base(z))[0].real
            if j.intensity_carrier.jump_profile is not None:
                self.m_intensity_jump = j.mark.integrate(
                    lambda z: j.intensity_carrier.jump_profile(z) * base(z))[0].real
            if spec.drift_mode == "exp_compensator":
                g0 = j.gamma_carrier.init
                self.exp_comp = j.mark.integrate(
                    lambda z: (math.exp(g0 * j.gamma_profile(z)) - 1.0
                               - g0 * j.gamma_profile(z)) * base(z))[0].real

    def initial_state(self) -> ModelState:
        s = self.spec
        j = self.jumps
        ell0 = j.intensity_carrier.init if j is not None else 0.0
        g0 = j.gamma_carrier.init if j is not None else 0.0
        gs0 = j.gamma_sigma_carrier.init if j is not None else 0.0
        return ModelState(
            time=0.0,
            x=s.x0,
            sigma=s.sigma,
            alpha=self.drift_value(s.sigma, ell0),
            vol_of_vol=s.vol_of_vol,
            vol_of_vol_perp=s.vol_of_vol_perp,
            intensity_scale=ell0,
            gamma_scale=g0,
            gamma_sigma_scale=gs0,
        )

    def drift_value(self, sigma: float, intensity_scale: float) -> float:
        """Price drift at the given coefficient values."""
        if self.spec.drift_mode == "constant":
            return self.spec.alpha
        return -0.5 * sigma * sigma - intensity_scale * self.exp_comp


def build_model(spec: ModelSpec) -> Model:
    """Validate a ModelSpec and return a Model.

    Raises InvalidSpec when the activity index is out of range, when the
    mark measure cannot support the requested moment structure, or when the
    exp-compensator drift mode is combined with a moving gamma carrier.
    """
    if spec.sigma <= 0.0:
        raise InvalidSpec(f"initial volatility must be positive, got {spec.sigma}")
    if not 1.0 <= spec.activity_r < 2.0:
        raise InvalidSpec(f"activity index r must lie in [1,2), got {spec.activity_r}")
    if spec.layers < 3:
        raise InvalidSpec(f"need at least three hidden layers, got {spec.layers}")
    if spec.drift_mode not in ("constant", "exp_compensator"):
        raise InvalidSpec(f"unknown drift mode {spec.drift_mode!r}")
    if spec.sigma_floor <= 0.0:
        raise InvalidSpec("sigma floor must be positive")
    j = spec.jumps
    if j is not None:
        if isinstance(j.mark, TemperedStable) and spec.activity_r <= j.mark.alpha:
            raise InvalidSpec(
                f"activity index r={spec.activity_r} does not dominate the "
                f"tempered stable index {j.mark.alpha}; |gamma|^r is not nu-integrable")
        if spec.drift_mode == "exp_compensator" and not j.gamma_carrier.is_constant:
            raise InvalidSpec("exp_compensator drift requires a constant gamma carrier")
        for z in (-1.0, -0.5, 0.5, 1.0):
            if j.intensity_base(z) < 0.0:
                raise InvalidSpec(f"intensity base is negative at z={z}")
    return Model(spec)


def frozen_state(model: Model, path, t: float) -> ModelState:
    """Left-limit state read off a simulated path at calendar time t.

    Values are taken from the last grid node strictly before t (the node at
    t itself for the path start), matching the left limits used by the spot
    expansion formulas.
    """
    times = path.times
    if t < times[0] - 1e-12 or t > times[-1] + 1e-12:
        raise OutOfRange(f"time {t} outside simulated range [{times[0]}, {times[-1]}]")
    idx = int(np.searchsorted(times, t, side="left")) - 1
    if idx < 0:
        idx = 0
    return ModelState(
        time=t,
        x=float(path.x[idx]),
        sigma=float(path.sigma[idx]),
        alpha=float(path.alpha[idx]),
        vol_of_vol=float(path.vol_of_vol[idx]),
        vol_of_vol_perp=float(path.vol_of_vol_perp[idx]),
        intensity_scale=float(path.intensity_scale[idx]),
        gamma_scale=float(path.gamma_scale[idx]),
        gamma_sigma_scale=float(path.gamma_sigma_scale[idx]),
    )


def assumption_report(model: Model) -> dict:
    """Numeric integrability checks behind the expansion formulas.

    Reports the jump moment integrals at the initial state, whether small
    jumps are absolutely summable (the stronger assumption that removes the
    phi/psi rescaling bias terms), and which conditions are structural.
    The smooth intensity approximation condition is proof-side and reported
    as not checked.
    """
    spec = model.spec
    j = model.jumps
    rep = {
        "activity_r": spec.activity_r,
        "layers": spec.layers,
        "special_semimartingale": True,  # ModelSpec carries no big-jump slot
        "smooth_intensity_approx": "not checked",
    }
    if j is None:
        rep.update({
            "has_jumps": False,
            "moment_r": 0.0,
            "moment_2": 0.0,
            "moment_1": 0.0,
            "summable_jumps": True,
            "passes": True,
        })
        return rep
    state = model.initial_state()
    ell = state.intensity_scale
    g = abs(state.gamma_scale)

    def nu_abs_moment(p):
        # integral of |gamma(z)|^p lambda(z) F(dz) at the initial state
        if isinstance(j.mark, TemperedStable) and j.gamma_profile is _identity:
            mom = j.mark.abs_moment(p)  # closed form, may be inf
            if math.isinf(mom):
                return math.inf
            if j.intensity_base is _const_one:
                return ell * g ** p * mom
        val, _ = j.mark.integrate(
            lambda z: abs(j.gamma_profile(z)) ** p * j.intensity_base(z))
        return ell * g ** p * val.real

    m_r = nu_abs_moment(spec.activity_r)
    m_2 = nu_abs_moment(2.0)
    if isinstance(j.mark, TemperedStable) and j.gamma_profile is _identity:
        m_1 = math.inf if j.mark.alpha >= 1.0 else ell * g * j.mark.abs_moment(1.0)
    else:
        m_1 = nu_abs_moment(1.0)
    rep.update({
        "has_jumps": True,
        "finite_activity": j.mark.is_finite_activity,
        "moment_r": m_r,
        "moment_2": m_2,
        "moment_1": m_1,
        "summable_jumps": math.isfinite(m_1),
        "passes": math.isfinite(m_r) and math.isfinite(m_2),
    })
    return rep
