r"""Spot-variance estimators built from conditional characteristic functions.

The core map is v = -(2/u^2) * log|L_{t,T}(u)| where u is the raw frequency
(the sqrt(T) normalization inside the CF and the u^2 rescaling outside
cancel by construction, so no tenor appears in the formula).  On top of it:

  * the two-maturity linear combination (T2*v_T - T*v_T2)/(T2 - T) with
    T2 = tau*T, which removes any bias affine in the tenor,
  * monotone transforms (x, sqrt, log, logsqrt of the variance) with the
    same combination applied at transform level: F per maturity first, then
    combine.  Combining first and transforming after is a different (wrong)
    ordering and is guarded against in the tests.

Raw estimates can dip below zero when noise pushes |CF| above 1; plain
estimates clamp to zero and set a flag, while debias combinations are formed
from unclamped inputs so the algebra stays exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

from .errors import DegenerateCF, DomainError, GridError, OutOfRange
from .expansion import CF_FLOOR, HFGrid, TRANSFORMS, canonical_transform

__all__ = [
    "VarianceEstimate",
    "spot_var",
    "debias_pair",
    "spot_var_debiased",
    "transform_estimate",
    "transform_debiased",
    "debiased_estimate",
    "estimator_increments",
    "canonical_transform",
]

@dataclass
class VarianceEstimate:
    """A variance-scale estimate plus the provenance used to form it."""

    value: float
    u: float
    T: float
    debiased: bool = False
    tau: Optional[float] = None
    transform: str = "var"
    clamped: bool = False
    cf: Optional[complex] = None
    source: str = "cf"
    meta: Dict[str, float] = field(default_factory=dict)


def _raw(cf_value: complex, u: float) -> float:
    if u == 0.0:
        raise OutOfRange("frequency u must be nonzero")
    mod = abs(cf_value)
    if mod < CF_FLOOR:
        raise DegenerateCF(
            f"|CF| = {mod:.3e} below floor {CF_FLOOR}; estimator undefined")
    return -2.0 / (u * u) * math.log(mod)


def spot_var(cf_value: complex, u: float, T: float,
             source: str = "cf") -> VarianceEstimate:
    """Single-maturity spot variance from one CF value at raw frequency u."""
    if T <= 0.0:
        raise OutOfRange(f"tenor must be positive, got {T}")
    raw = _raw(cf_value, u)
    est = VarianceEstimate(value=max(raw, 0.0), u=u, T=T,
                           cf=complex(cf_value), source=source)
    est.clamped = raw < 0.0
    est.meta["raw"] = raw
    return est


def debias_pair(f_T: float, f_Tp: float, T: float, T2: float) -> float:
    """Two-maturity combination (T2*f_T - T*f_T2)/(T2 - T) for any pair."""
    if T <= 0.0 or T2 <= T:
        raise OutOfRange(f"need 0 < T < T2, got T={T}, T2={T2}")
    return (T2 * f_T - T * f_Tp) / (T2 - T)


def spot_var_debiased(var_T: float, var_Tp: float, T: float,
                      tau: float) -> float:
    """The combination for the standard pair (T, tau*T)."""
    if tau <= 1.0:
        raise OutOfRange(f"tau must exceed 1, got {tau}")
    return debias_pair(var_T, var_Tp, T, tau * T)


def transform_estimate(var: float, transform: str = "var") -> float:
    """Monotone transform F of a variance value."""
    kind = canonical_transform(transform)
    if kind == "var":
        return var
    if var <= 0.0:
        raise DomainError(
            f"transform {transform!r} needs positive variance, got {var:.3e}")
    return TRANSFORMS[kind][0](var)


def transform_debiased(var_T: float, var_Tp: float, T: float, tau: float,
                       transform: str = "var") -> float:
    """F per maturity first, then the two-maturity combination.

    This is the ordering that removes affine-in-tenor bias inside F; it does
    not equal F applied to the debiased variance except for F = identity.
    """
    if tau <= 1.0:
        raise OutOfRange(f"tau must exceed 1, got {tau}")
    f1 = transform_estimate(var_T, transform)
    f2 = transform_estimate(var_Tp, transform)
    return debias_pair(f1, f2, T, tau * T)


def debiased_estimate(cf_T: complex, cf_Tp: complex, u: float, T: float,
                      tau: float, transform: str = "var") -> VarianceEstimate:
    """Full pipeline: CFs at (T, tau*T) to a debiased transform estimate.

    Unclamped single-maturity values feed the combination; only the final
    identity-transform value is clamped (and flagged) at the end.
    """
    if T <= 0.0:
        raise OutOfRange(f"tenor must be positive, got {T}")
    kind = canonical_transform(transform)
    v1 = _raw(cf_T, u)
    v2 = _raw(cf_Tp, u)
    raw = transform_debiased(v1, v2, T, tau, kind)
    est = VarianceEstimate(value=raw, u=u, T=T, debiased=True, tau=tau,
                           transform=kind, cf=complex(cf_T))
    if kind == "var" and raw < 0.0:
        est.value = 0.0
        est.clamped = True
    est.meta.update(raw=raw, var_T=v1, var_Tp=v2)
    return est


def estimator_increments(cf_rows: List[Dict[str, complex]], grid: HFGrid,
                         u: float, transform: str = "var",
                         debias: bool = False) -> List[float]:
    """First differences of per-node estimates along the backward grid.

    cf_rows[i] holds the node-i CF value under key "cf" (and "cf2" for the
    tau-scaled tenor when debiasing), for i = 0..i_max with node-correct
    tenors; the result lists the node i -> i-1 differences for i = 1..i_max.
    Unclamped values are differenced so the series telescopes.
    """
    if len(cf_rows) != grid.i_max + 1:
        raise GridError(
            f"need one CF row per grid node, got {len(cf_rows)} rows "
            f"for {grid.i_max + 1} nodes")
    kind = canonical_transform(transform)
    vals = []
    for i, row in enumerate(cf_rows):
        if debias:
            if "cf2" not in row:
                raise GridError("debiasing needs the second-tenor CF per node")
            f1 = transform_estimate(_raw(row["cf"], u), kind)
            f2 = transform_estimate(_raw(row["cf2"], u), kind)
            # node tenors keep T2 - T fixed across i, which is what lets the
            # tenor-linear bias cancel in the differences
            vals.append(debias_pair(f1, f2, grid.tenor(i), grid.tenor2(i)))
        elif kind == "var":
            vals.append(_raw(row["cf"], u))
        else:
            vals.append(transform_estimate(_raw(row["cf"], u), kind))
    return [vals[i - 1] - vals[i] for i in range(1, len(vals))]
