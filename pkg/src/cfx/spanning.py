r"""Option curves and the spanning recovery of the characteristic function.

An OTM option curve on a log-strike grid determines the conditional CF
through the weighted strike integral

    L(u) = 1 - (u^2/T + i u/sqrt(T)) e^{-x} Int e^{(i u /sqrt(T) - 1)(k-x)} O(k) dk

with puts below the log spot and calls above, all at zero rates and
dividends.  The integral is evaluated by trapezoid on the grid plus analytic
exponential tail stubs fitted to the last two points of each wing; the
reported error estimate combines a Simpson-trapezoid difference with the
full stub magnitudes, so it is conservative for smooth curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy.integrate import simpson, trapezoid
from scipy.stats import norm

from .errors import GridError, OutOfRange, TailNotDecayed
from .mcsim import CFGrid, terminal_increments
from .model import Model, ModelState

__all__ = [
    "OptionCurve",
    "strike_grid_design",
    "bs_option_curve",
    "mc_option_curve",
    "span_cf",
]

TAIL_TOL = 1e-8


@dataclass
class OptionCurve:
    """OTM option prices on an ascending log-strike grid."""

    x_t: float
    T: float
    strikes: np.ndarray
    prices: np.ndarray
    source: str
    stderr: Optional[np.ndarray] = None
    wings: np.ndarray = field(default=None)

    def __post_init__(self):
        self.strikes = np.asarray(self.strikes, dtype=float)
        self.prices = np.asarray(self.prices, dtype=float)
        if self.strikes.ndim != 1 or len(self.strikes) < 3:
            raise GridError("strike grid needs at least 3 ascending points")
        if np.any(np.diff(self.strikes) <= 0.0):
            raise GridError("strikes must be strictly ascending")
        if len(self.prices) != len(self.strikes):
            raise GridError("one price per strike required")
        if np.any(self.prices < 0.0):
            raise OutOfRange("option prices must be nonnegative")
        if self.wings is None:
            self.wings = np.where(self.strikes <= self.x_t, "put", "call")

    def to_rows(self) -> List[dict]:
        err = self.stderr if self.stderr is not None else np.zeros(len(self.strikes))
        return [
            {"k": float(k), "price": float(p), "stderr": float(s), "wing": w}
            for k, p, s, w in zip(self.strikes, self.prices, err, self.wings)
        ]


def strike_grid_design(sigma_guess: float, T: float, coverage_sds: float = 10.0,
                       x_t: float = 0.0, spacing_frac: float = 1.0 / 50.0) -> np.ndarray:
    """Uniform log-strike grid covering x_t +- coverage_sds * sigma * sqrt(T).

    Spacing is at most spacing_frac * sigma * sqrt(T); the grid has an odd
    point count and contains x_t exactly.
    """
    if sigma_guess <= 0.0 or T <= 0.0:
        raise OutOfRange("sigma_guess and T must be positive")
    if coverage_sds < 6.0:
        raise GridError(
            f"coverage {coverage_sds} too narrow; at least 6 sds required")
    sd = sigma_guess * math.sqrt(T)
    half_width = coverage_sds * sd
    n_half = max(1, math.ceil(half_width / (spacing_frac * sd)))
    return x_t + (half_width / n_half) * np.arange(-n_half, n_half + 1)


def bs_option_curve(x_t: float, sigma: float, T: float,
                    k_grid: Sequence[float]) -> OptionCurve:
    """Black-Scholes OTM values at zero rates and dividends."""
    if sigma <= 0.0 or T <= 0.0:
        raise OutOfRange("sigma and T must be positive")
    k = np.asarray(k_grid, dtype=float)
    sd = sigma * math.sqrt(T)
    d1 = (x_t - k) / sd + 0.5 * sd
    d2 = d1 - sd
    spot = math.exp(x_t)
    strike = np.exp(k)
    call = spot * norm.cdf(d1) - strike * norm.cdf(d2)
    put = strike * norm.cdf(-d2) - spot * norm.cdf(-d1)
    prices = np.where(k <= x_t, put, call)
    # clip the dust from catastrophic cancellation in the far tails
    prices = np.maximum(prices, 0.0)
    return OptionCurve(x_t=x_t, T=T, strikes=k, prices=prices,
                       source="closed_form")


def mc_option_curve(model: Model, state: ModelState, T: float,
                    k_grid: Sequence[float], n_paths: int,
                    seed: int = 0, dt: Optional[float] = None) -> OptionCurve:
    """Monte Carlo OTM values: per-strike payoff means at zero rates."""
    if n_paths < 2:
        raise OutOfRange("n_paths must be at least 2")
    k = np.asarray(k_grid, dtype=float)
    dx = terminal_increments(model, state, T, n_paths, dt=dt, seed=seed)
    spot_T = np.exp(state.x + dx)
    prices = np.empty(len(k))
    stderr = np.empty(len(k))
    for j, kj in enumerate(k):
        strike = math.exp(kj)
        if kj <= state.x:
            pay = np.maximum(strike - spot_T, 0.0)
        else:
            pay = np.maximum(spot_T - strike, 0.0)
        prices[j] = pay.mean()
        stderr[j] = pay.std(ddof=1) / math.sqrt(n_paths)
    return OptionCurve(x_t=state.x, T=T, strikes=k, prices=prices,
                       source="mc", stderr=stderr)


def _tail_stub(w_inner: float, w_end: float, dk: float, k_end: float,
               x_t: float, wn: float, right: bool) -> complex:
    """Analytic integral of the exponential continuation of one wing.

    Returns zero when no decaying fit exists; the caller's tolerance check
    has already confirmed the endpoint itself is negligible then.
    """
    if w_end <= 0.0 or w_inner <= w_end:
        return 0.0 + 0.0j
    b = math.log(w_inner / w_end) / dk
    phase = complex(np.exp(1j * wn * (k_end - x_t)))
    if right:
        return w_end * phase / (b - 1j * wn)
    return w_end * phase / (b + 1j * wn)


def span_cf(curve: OptionCurve, u_grid: Sequence[float],
            T: Optional[float] = None, tail_tol: float = TAIL_TOL) -> CFGrid:
    """Recover the conditional CF from an OTM curve by the strike integral.

    Requires the weighted integrand to have decayed below tail_tol (relative
    to its peak) at both grid ends; raises TailNotDecayed otherwise, which
    signals the strike grid must be widened.
    """
    tenor = curve.T if T is None else T
    if tenor <= 0.0:
        raise OutOfRange(f"tenor must be positive, got {tenor}")
    u = np.asarray(list(u_grid), dtype=float)
    if np.any(u == 0.0):
        raise OutOfRange("frequency grid must avoid u = 0")
    k = curve.strikes
    rel = k - curve.x_t
    weights = np.exp(-rel) * curve.prices * math.exp(-curve.x_t)
    wmax = weights.max()
    if wmax <= 0.0:
        raise TailNotDecayed("option curve is identically zero")
    if weights[0] > tail_tol * wmax or weights[-1] > tail_tol * wmax:
        raise TailNotDecayed(
            "weighted option curve above tail tolerance at the grid ends; "
            "widen the strike grid")
    dk_lo = k[1] - k[0]
    dk_hi = k[-1] - k[-2]

    values = np.empty(len(u), dtype=complex)
    err = np.empty(len(u))
    for j, uj in enumerate(u):
        wn = uj / math.sqrt(tenor)
        integrand = weights * np.exp(1j * wn * rel)
        total = trapezoid(integrand, k)
        resid = abs(total - complex(simpson(integrand, x=k)))
        stub_lo = _tail_stub(weights[1], weights[0], dk_lo, k[0],
                             curve.x_t, wn, right=False)
        stub_hi = _tail_stub(weights[-2], weights[-1], dk_hi, k[-1],
                             curve.x_t, wn, right=True)
        pref = uj * uj / tenor + 1j * uj / math.sqrt(tenor)
        values[j] = 1.0 - pref * (total + stub_lo + stub_hi)
        err[j] = abs(pref) * (resid + abs(stub_lo) + abs(stub_hi))
    return CFGrid(u=u, T=tenor, values=values, stderr=err,
                  n_paths=0, source="spanning")
