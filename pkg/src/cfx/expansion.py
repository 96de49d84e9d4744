r"""Small-tenor expansions of the conditional characteristic function.

Everything here is formula-layer: functions take frozen states and tenors
and return the analytic objects the theory builds from them.

  * theta_factor       first-order factor Theta = exp(iu_T a T - u_T^2 s^2 T/2 + T phi)
  * eta_correction     the O(sqrt(T)) correction 1 - eta multiplying Theta
  * lambda_expansion   the two-time refinement Lambda with the T^2 block
  * increment_cf_expansion
                       decomposition of a CF increment along the
                       double-shrinking grid into the leading Lambda
                       difference, the five itemized correction lines, and
                       the tenor boundary term
  * bias_terms_phi_psi / increment_variance_expansion /
    increment_transform_expansion
                       the corresponding spot-variance and transform-level
                       increment reports, with the two-maturity debias
                       combination applied term by term

Frequencies: a Freq(u, T) pairs the raw frequency with a tenor; the
normalized value u/sqrt(T) is what all spot formulas consume.  The itemized
increment lines are written in the raw frequency u with their explicit
sqrt(T) factors, exactly as the expansion orders them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import DegenerateCF, DomainError, GridError, OutOfRange
from .jumpcalc import chi, phi, psi_terms, xi
from .model import JumpSystem, ModelState

__all__ = [
    "Freq",
    "HFGrid",
    "theta_factor",
    "eta_correction",
    "cf_first_order",
    "lambda_expansion",
    "IncrementDecomposition",
    "increment_cf_expansion",
    "bias_terms_phi_psi",
    "ExpansionReport",
    "increment_variance_expansion",
    "increment_transform_expansion",
    "TRANSFORMS",
    "canonical_transform",
]

CF_FLOOR = 1e-12


@dataclass(frozen=True)
class Freq:
    """Raw frequency u paired with the tenor T it will be normalized by."""

    u: float
    T: float

    def __post_init__(self):
        if self.u == 0.0:
            raise OutOfRange("frequency u must be nonzero")
        if self.T <= 0.0:
            raise OutOfRange(f"tenor must be positive, got {self.T}")

    @property
    def u_T(self) -> float:
        return self.u / math.sqrt(self.T)


@dataclass(frozen=True)
class HFGrid:
    """Backward-in-time observation grid with forward-growing tenors.

    Node i sits at t - i*step with tenor T + i*step (and tau*T + i*step for
    the second maturity); increments are first differences from node i to
    node i-1.  The asymptotic regime keeps step/T small.
    """

    t: float
    step: float
    T: float
    tau: float = 1.5
    i_max: int = 1

    def __post_init__(self):
        if self.step <= 0.0 or self.T <= 0.0:
            raise GridError("grid step and tenor must be positive")
        if self.tau <= 1.0:
            raise GridError(f"second-maturity ratio tau must exceed 1, got {self.tau}")
        if self.i_max < 1:
            raise GridError("grid needs at least one increment")
        if self.step >= self.T:
            raise GridError(
                f"grid step {self.step} must be smaller than the tenor {self.T}")
        if self.t - self.i_max * self.step < -1e-12:
            raise GridError("grid reaches back before time zero")

    def _check(self, i: int, lo: int = 0):
        if not lo <= i <= self.i_max:
            raise GridError(f"node index {i} outside 0..{self.i_max}")

    def t_node(self, i: int) -> float:
        self._check(i)
        return self.t - i * self.step

    def tenor(self, i: int) -> float:
        self._check(i)
        return self.T + i * self.step

    def tenor2(self, i: int) -> float:
        self._check(i)
        return self.tau * self.T + i * self.step

    def freq(self, u: float, i: int) -> Freq:
        return Freq(u, self.tenor(i))


# ---------------------------------------------------------------- spot level


def theta_factor(js: Optional[JumpSystem], state: ModelState, f: Freq) -> complex:
    """First-order CF factor at a frozen state."""
    w = f.u_T
    T = f.T
    expo = (1j * w * state.alpha * T
            - 0.5 * w * w * state.sigma ** 2 * T
            + T * phi(js, state, state, w))
    return complex(np.exp(expo))


def eta_correction(js: Optional[JumpSystem], state: ModelState, f: Freq) -> complex:
    """Relative O(sqrt(T)) correction eta; Theta*(1 - eta) refines Theta."""
    w = f.u_T
    T = f.T
    lead = 0.5j * w ** 3 * T * T * state.sigma ** 2 * state.vol_of_vol
    p, pb, pt = psi_terms(js, state, state, w)
    return lead - T * T * (p + pb + pt)


def cf_first_order(js: Optional[JumpSystem], state: ModelState, f: Freq) -> complex:
    """Theta*(1 - eta): the CF up to a model-specific O(T) remainder.

    The O(T) coefficient itself is existence-only and is not computed here.
    """
    return theta_factor(js, state, f) * (1.0 - eta_correction(js, state, f))


def lambda_expansion(js: Optional[JumpSystem], state_t: ModelState,
                     state_s: ModelState, f: Freq) -> complex:
    """Two-time refinement Lambda_{t,T}(s, u_T).

    The coefficient state t drives the drift/vol/jump coefficients, the
    measure state s freezes the jump intensity; on the diagonal s = t this
    is Theta * exp(-eta-type T^2 block).
    """
    w = f.u_T
    T = f.T
    p, pb, pt = psi_terms(js, state_t, state_s, w)
    expo = (1j * w * state_t.alpha * T
            - 0.5 * w * w * state_t.sigma ** 2 * T
            + T * phi(js, state_t, state_s, w)
            - 0.5j * w ** 3 * state_t.sigma ** 2 * state_t.vol_of_vol * T * T
            + T * T * (p + pb + pt))
    return complex(np.exp(expo))


# ---------------------------------------------------------------- increments


@dataclass
class IncrementDecomposition:
    """CF increment split into leading difference, itemized lines, boundary.

    leading        Lambda difference across the two nodes (own tenors and
                   normalized frequencies, measure state frozen at node i)
    corrections    the five correction lines keyed by their power of the raw
                   frequency; each multiplies the Theta prefactor
    boundary       tenor boundary term (Theta-ratio line plus the explicit
                   vol-of-vol step correction), also Theta-multiplied
    theta_prefactor Theta at the node-i state and the longer tenor
    """

    i: int
    u: float
    leading: complex
    corrections: Dict[str, complex]
    boundary: complex
    theta_prefactor: complex

    def correction_total(self) -> complex:
        return sum(self.corrections.values(), start=0.0 + 0.0j)

    def reconstruction(self) -> complex:
        """Theta * (correction lines + boundary): the modeled CF increment."""
        return self.theta_prefactor * (self.correction_total() + self.boundary)

    def leading_with_boundary(self) -> complex:
        """Leading Lambda difference plus the Theta-weighted boundary term."""
        return self.leading + self.theta_prefactor * self.boundary


def increment_cf_expansion(js: Optional[JumpSystem], grid: HFGrid, i: int,
                           state_prev: ModelState, state_curr: ModelState,
                           u: float) -> IncrementDecomposition:
    """Decompose the CF increment between grid nodes i and i-1.

    state_prev is the node i-1 (later time, longer tenor) state, state_curr
    the node i state; all jump functionals are evaluated at node i with the
    longer tenor's normalized frequency, per the expansion's bookkeeping.
    """
    grid._check(i, lo=1)
    T_prev = grid.tenor(i - 1)
    T_curr = grid.tenor(i)
    f_prev = Freq(u, T_prev)
    f_curr = Freq(u, T_curr)
    w = f_prev.u_T
    rt = math.sqrt(T_prev)

    theta_prev = theta_factor(js, state_curr, f_prev)
    theta_curr = theta_factor(js, state_curr, f_curr)
    if abs(theta_prev) < CF_FLOOR or abs(theta_curr) < CF_FLOOR:
        raise DegenerateCF("first-order CF magnitude below floor on the grid")

    leading = (lambda_expansion(js, state_prev, state_curr, f_prev)
               - lambda_expansion(js, state_curr, state_curr, f_curr))

    sig = state_curr.sigma
    vov = state_curr.vol_of_vol
    d_alpha = state_prev.alpha - state_curr.alpha
    d_sigma = state_prev.sigma - state_curr.sigma
    d_vov = state_prev.vol_of_vol - state_curr.vol_of_vol

    chis = {k: chi(js, k, state_curr, w) for k in (1, 2, 3, 4)}
    dxi = {}
    for j in (1, 2, 3, 4, 5, 6, 7, 8):
        dxi[j] = (xi(js, j, state_prev, state_curr, w)
                  - xi(js, j, state_curr, state_curr, w))

    one_plus = 1.0 + 0.5 * T_prev * T_prev * chis[4]
    lines = {
        "freq1": 1j * u * rt * (
            d_alpha
            + one_plus * dxi[1]
            + 0.5 * T_prev * chis[3] * d_sigma
            + 0.5 * T_prev * (dxi[2] + dxi[7] + dxi[8])),
        "freq2": -0.5 * u * u * (
            (2.0 * sig * one_plus + T_prev * chis[1]) * d_sigma
            + T_prev * T_prev * (chis[2] + sig * chis[3]) * dxi[1]
            + T_prev * dxi[3]
            + T_prev * sig * (dxi[4] + dxi[6])),
        "freq3": -0.5j * u ** 3 * rt * sig * (
            (2.0 * vov + T_prev * chis[2] + T_prev * chis[3] * sig) * d_sigma
            + sig * d_vov
            + T_prev * chis[1] * dxi[1]
            + dxi[5]),
        "freq4": 0.5 * u ** 4 * T_prev * sig * sig * (
            chis[1] * d_sigma + vov * dxi[1]),
        "freq5": 0.5j * u ** 5 * rt * sig ** 3 * vov * d_sigma,
    }

    boundary = (1.0 - theta_curr / theta_prev
                + 0.25j * u ** 3 * sig * sig * vov * grid.step / rt)

    return IncrementDecomposition(
        i=i, u=u, leading=leading, corrections=lines,
        boundary=boundary, theta_prefactor=theta_prev)


def bias_terms_phi_psi(js: Optional[JumpSystem], grid: HFGrid, i: int,
                       state_prev: ModelState, state_curr: ModelState,
                       u: float) -> Tuple[float, float]:
    """Frequency-rescaling bias increments of the variance expansion.

    These are the real parts of the compensated jump transform and of the
    second-order tenor block, rescaled to variance units and differenced
    across the two nodes at their own normalized frequencies.  Under
    absolutely summable jumps both are absorbed by the remainder.
    """
    grid._check(i, lo=1)
    out = []
    for which in ("phi", "psi"):
        vals = []
        for state, T in ((state_prev, grid.tenor(i - 1)),
                         (state_curr, grid.tenor(i))):
            w = u / math.sqrt(T)
            if which == "phi":
                v = -2.0 / (w * w) * phi(js, state, state_curr, w).real
            else:
                p, pb, pt = psi_terms(js, state, state_curr, w)
                v = -2.0 * T / (w * w) * (p + pb + pt).real
            vals.append(v)
        out.append(vals[0] - vals[1])
    return out[0], out[1]


# ---------------------------------------------------------------- reports


@dataclass
class ExpansionReport:
    """Itemized increment expansion of a variance or transform estimator.

    terms holds the computable lines in estimator units; order_tags records
    the size of whatever is left in each opaque bucket.  The debiased report
    applies the two-maturity combination line by line, so exact algebraic
    cancellations show up as zeros rather than annotations.
    """

    i: int
    u: float
    transform: str
    debias: bool
    terms: Dict[str, float] = field(default_factory=dict)
    order_tags: Dict[str, str] = field(default_factory=dict)
    meta: Dict[str, float] = field(default_factory=dict)

    def total(self) -> float:
        return float(sum(self.terms.values()))


def _check_cf_floor(js, state_prev, state_curr, grid, i, u):
    for state, T in ((state_prev, grid.tenor(i - 1)), (state_curr, grid.tenor(i))):
        if abs(theta_factor(js, state, Freq(u, T))) < CF_FLOOR:
            raise DegenerateCF("first-order CF magnitude below floor on the grid")


def increment_variance_expansion(js: Optional[JumpSystem], grid: HFGrid, i: int,
                                 state_prev: ModelState, state_curr: ModelState,
                                 u: float,
                                 summable_jumps: bool = True) -> ExpansionReport:
    """Expansion of a spot-variance estimator increment along the grid."""
    grid._check(i, lo=1)
    _check_cf_floor(js, state_prev, state_curr, grid, i, u)
    d_var = state_prev.sigma ** 2 - state_curr.sigma ** 2
    d_phi, d_psi = bias_terms_phi_psi(js, grid, i, state_prev, state_curr, u)
    rep = ExpansionReport(i=i, u=u, transform="var", debias=False)
    rep.terms["spot_var_increment"] = d_var
    rep.terms["phi_rescaling_bias"] = d_phi
    rep.terms["psi_rescaling_bias"] = d_psi
    if summable_jumps:
        rep.order_tags["phi_psi_rescaling"] = "absorbed: O(sqrt(step*T))"
    rep.order_tags["dynamics_bias_bucket"] = "present: O(T) per coefficient-increment unit"
    rep.order_tags["remainder"] = "O(T^{N/2}) + o(sqrt(step*T) + step/sqrt(T))"
    return rep


TRANSFORMS = {
    "var": (lambda v: v, lambda v: 1.0),
    "vol": (lambda v: math.sqrt(v), lambda v: 0.5 / math.sqrt(v)),
    "logvar": (lambda v: math.log(v), lambda v: 1.0 / v),
    "logvol": (lambda v: 0.5 * math.log(v), lambda v: 0.5 / v),
}

# generic math names accepted on the config surface
_TRANSFORM_ALIASES = {
    "x": "var", "sqrt": "vol", "log": "logvar", "logsqrt": "logvol",
    "var": "var", "vol": "vol", "logvar": "logvar", "logvol": "logvol",
}


def canonical_transform(name: str) -> str:
    try:
        return _TRANSFORM_ALIASES[name]
    except KeyError:
        raise DomainError(f"unknown transform {name!r}") from None


def _gamma_sigma_bias_line(js: Optional[JumpSystem], tenor: float,
                           state_prev: ModelState, state_curr: ModelState) -> float:
    """Explicit vol-jump drift line -tenor * sigma * integral of
    (gamma_sigma increment) * lambda dF, present for finite-activity models
    with a time-invariant price jump size."""
    if js is None or not js.mark.is_finite_activity:
        return 0.0
    if not js.time_invariant_gamma or js.gamma_sigma_profile is None:
        return 0.0
    d_gs = state_prev.gamma_sigma_scale - state_curr.gamma_sigma_scale
    if d_gs == 0.0:
        return 0.0
    integral, _ = js.mark.integrate(
        lambda z: js.gamma_sigma_profile(z) * js.intensity_base(z))
    return (-tenor * state_curr.sigma * d_gs
            * state_curr.intensity_scale * integral.real)


def increment_transform_expansion(js: Optional[JumpSystem], grid: HFGrid, i: int,
                                  state_prev: ModelState, state_curr: ModelState,
                                  u: float, transform: str = "var",
                                  debias: bool = False) -> ExpansionReport:
    """Expansion of a transform-level estimator increment along the grid.

    The transform derivative is evaluated at the node-i spot variance.  With
    debias=True every tenor-linear line is passed through the two-maturity
    combination; the explicit vol-jump drift line of finite-activity models
    cancels exactly there, while the transform-of-spot increment is
    tenor-free and survives unchanged.
    """
    grid._check(i, lo=1)
    transform = canonical_transform(transform)
    _check_cf_floor(js, state_prev, state_curr, grid, i, u)
    F, Fp = TRANSFORMS[transform]
    v_curr = state_curr.sigma ** 2
    v_prev = state_prev.sigma ** 2
    if transform != "var" and (v_curr <= 0.0 or v_prev <= 0.0):
        raise DomainError("transform needs strictly positive variance")
    fprime = Fp(v_curr)

    rep = ExpansionReport(i=i, u=u, transform=transform, debias=debias)
    rep.terms["transform_increment"] = F(v_prev) - F(v_curr)

    T_a = grid.tenor(i - 1)
    T_b = grid.tenor2(i - 1)
    if debias:
        denom = T_b - T_a  # equals (tau - 1) * T at every node
        line = (T_b * _gamma_sigma_bias_line(js, T_a, state_prev, state_curr)
                - T_a * _gamma_sigma_bias_line(js, T_b, state_prev, state_curr)) / denom
        rep.terms["vol_jump_drift_bias"] = fprime * line
        rep.order_tags["dynamics_bias_bucket"] = "cancelled by two-maturity combination"
    else:
        rep.terms["vol_jump_drift_bias"] = fprime * _gamma_sigma_bias_line(
            js, T_a, state_prev, state_curr)
        rep.order_tags["dynamics_bias_bucket"] = (
            "present: O(T) per coefficient-increment unit")
    rep.order_tags["phi_rescaling"] = "O(step) + o(step/sqrt(T)) by Riemann-Lebesgue"
    rep.order_tags["remainder"] = "O(T^{N/2} + sqrt(step*T)) + o(step/sqrt(T))"
    rep.meta["fprime"] = fprime
    return rep
