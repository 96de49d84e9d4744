r"""Levy-measure functionals feeding the characteristic function expansions.

All functionals integrate against the thinned jump measure
nu_s(dz) = intensity_scale_s * intensity_base(z) F(dz) or against the raw
mark measure F.  Two time arguments appear throughout: the *measure state* s
freezes nu and the exponential carriers, while the *coefficient state* t
supplies whichever coefficient the surrounding expansion differences in time.
On the diagonal t = s these collapse to the spot quantities.

With the carrier/profile factorization of the jump coefficients every double
integral separates into a product of single mark integrals, which is what the
implementations below use.
"""

from __future__ import annotations

from typing import Callable, Optional, Tuple

import numpy as np

from .errors import QuadratureFail
from .model import JumpSystem, ModelState

__all__ = ["integrate", "phi", "chi", "xi", "psi_terms"]


def integrate(fn: Callable[[float], complex], mark, rel_tol: float = 1e-9):
    """Integrate a complex-valued function against a mark measure.

    Point masses are evaluated exactly; continuous families use adaptive
    quadrature split at the activity singularity.  Returns (value, err).
    """
    val, err = mark.integrate(fn, rel_tol=rel_tol)
    if not (np.isfinite(val.real) and np.isfinite(val.imag)):
        raise QuadratureFail("mark integral did not evaluate to a finite value")
    return val, err


def _nu(js: JumpSystem, state_s: ModelState, fn) -> complex:
    """Integral of fn against nu_s = intensity * base * F."""
    if state_s.intensity_scale == 0.0:
        return 0.0 + 0.0j
    base = js.intensity_base
    val, _ = integrate(lambda z: fn(z) * base(z), js.mark)
    return state_s.intensity_scale * val


def _F(js: JumpSystem, fn) -> complex:
    """Integral of fn against the raw mark measure F."""
    val, _ = integrate(fn, js.mark)
    return val


def phi(js: Optional[JumpSystem], state_t: ModelState, state_s: ModelState,
        u: float) -> complex:
    """Compensated jump transform: integral of (e^{iu gamma(t,z)}-1-iu gamma(t,z)) d nu_s."""
    if js is None:
        return 0.0 + 0.0j
    g = state_t.gamma_scale
    prof = js.gamma_profile

    def f(z):
        a = 1j * u * g * prof(z)
        return np.exp(a) - 1.0 - a

    return _nu(js, state_s, f)


def chi(js: Optional[JumpSystem], k: int, state: ModelState, u: float) -> complex:
    """Spot (diagonal-time) jump functionals, k in {1, 2, 3, 4}.

    1: carries the covariation of jumps with the diffusive/jump moves of the
       jump coefficient and of volatility;
    2: second-order jump-of-jump-coefficient cross term;
    3: diffusive intensity feedback (against F, not nu);
    4: jump intensity feedback (double integral against F x F).
    """
    if js is None:
        return 0.0 + 0.0j
    if k not in (1, 2, 3, 4):
        raise ValueError(f"chi index must be 1..4, got {k}")
    g = state.gamma_scale
    prof = js.gamma_profile
    ew = lambda z: np.exp(1j * u * g * prof(z)) - 1.0
    cew = lambda z: np.exp(1j * u * g * prof(z)) - 1.0 - 1j * u * g * prof(z)

    if k == 1:
        sg_vol = js.gamma_carrier.vol
        gs = state.gamma_sigma_scale
        gs_prof = js.gamma_sigma_profile

        def f(z):
            coeff = sg_vol * prof(z)
            if gs_prof is not None:
                coeff += gs * gs_prof(z)
            return ew(z) * coeff

        return _nu(js, state, f)

    if k == 2:
        jump = js.gamma_carrier
        if jump.jump_scale == 0.0 or jump.jump_profile is None:
            return 0.0 + 0.0j
        a = _nu(js, state, lambda z: ew(z) * prof(z))
        b = _nu(js, state, lambda z: ew(z) * jump.jump_profile(z))
        return jump.jump_scale * a * b

    if k == 3:
        ivol = js.intensity_carrier.vol
        if ivol == 0.0:
            return 0.0 + 0.0j
        return ivol * _F(js, lambda z: cew(z) * js.intensity_base(z))

    # k == 4: jump of the intensity caused by an accepted mark z', collapsed
    # over the uniform thinning coordinate to a lambda(t, z') factor.
    ij = js.intensity_carrier
    if ij.jump_scale == 0.0 or ij.jump_profile is None:
        return 0.0 + 0.0j
    a = _F(js, lambda z: cew(z) * js.intensity_base(z))
    b = _nu(js, state, lambda z: ew(z) * ij.jump_profile(z))
    return ij.jump_scale * a * b


def xi(js: Optional[JumpSystem], j: int, state_t: ModelState,
       state_s: ModelState, u: float) -> complex:
    """Cross-time jump functionals, j in 1..8.

    The exponential carriers e^{iu gamma(s, z)} and the measure are frozen at
    the state s; the state t enters only through the coefficient whose time
    increment the surrounding expansion tracks (gamma for 1, 3, 5, 6, 7, 8;
    the jump-of-jump coefficient for 2; the vol-jump/diffusive-jump pair
    for 4).
    """
    if js is None:
        return 0.0 + 0.0j
    if j not in range(1, 9):
        raise ValueError(f"xi index must be 1..8, got {j}")
    gs_ = state_s.gamma_scale
    gt = state_t.gamma_scale
    prof = js.gamma_profile
    ew = lambda z: np.exp(1j * u * gs_ * prof(z)) - 1.0
    e0 = lambda z: np.exp(1j * u * gs_ * prof(z))
    cew = lambda z: np.exp(1j * u * gs_ * prof(z)) - 1.0 - 1j * u * gs_ * prof(z)

    if j == 1:
        return _nu(js, state_s, lambda z: ew(z) * gt * prof(z))

    if j == 2:
        jump = js.gamma_carrier
        if jump.jump_scale == 0.0 or jump.jump_profile is None:
            return 0.0 + 0.0j
        a = _nu(js, state_s, lambda z: ew(z) * prof(z))
        b = _nu(js, state_s, lambda z: ew(z) * jump.jump_profile(z))
        return jump.jump_scale * a * b

    if j == 3:
        jump = js.gamma_carrier
        if jump.jump_scale == 0.0 or jump.jump_profile is None:
            return 0.0 + 0.0j
        q = jump.jump_profile
        a1 = _nu(js, state_s, lambda z: ew(z) * prof(z))
        b1 = _nu(js, state_s, lambda z: e0(z) * q(z) * gt * prof(z))
        a2 = _nu(js, state_s, lambda z: ew(z) * q(z))
        b2 = _nu(js, state_s, lambda z: e0(z) * prof(z) * gt * prof(z))
        return jump.jump_scale * (a1 * b1 + a2 * b2)

    if j == 4:
        sg_vol = js.gamma_carrier.vol
        gs_scale = state_t.gamma_sigma_scale
        gs_prof = js.gamma_sigma_profile

        def f(z):
            coeff = sg_vol * prof(z)
            if gs_prof is not None:
                coeff += gs_scale * gs_prof(z)
            return ew(z) * coeff

        return _nu(js, state_s, f)

    if j == 5:
        sg_vol = js.gamma_carrier.vol
        gs_scale = state_s.gamma_sigma_scale
        gs_prof = js.gamma_sigma_profile

        def f(z):
            coeff = sg_vol * prof(z)
            if gs_prof is not None:
                coeff += gs_scale * gs_prof(z)
            return e0(z) * coeff * gt * prof(z)

        return _nu(js, state_s, f)

    if j == 6:
        ivol = js.intensity_carrier.vol
        if ivol == 0.0:
            return 0.0 + 0.0j
        return ivol * _F(js, lambda z: ew(z) * js.intensity_base(z) * gt * prof(z))

    ij = js.intensity_carrier
    if ij.jump_scale == 0.0 or ij.jump_profile is None:
        return 0.0 + 0.0j

    if j == 7:
        a = _F(js, lambda z: ew(z) * js.intensity_base(z) * gt * prof(z))
        b = _nu(js, state_s, lambda z: ew(z) * ij.jump_profile(z))
        return ij.jump_scale * a * b

    # j == 8
    a = _F(js, lambda z: cew(z) * js.intensity_base(z))
    b = _nu(js, state_s, lambda z: e0(z) * gt * prof(z) * ij.jump_profile(z))
    return ij.jump_scale * a * b


def psi_terms(js: Optional[JumpSystem], state_t: ModelState,
              state_s: ModelState, u: float) -> Tuple[complex, complex, complex]:
    """Second-order tenor coefficients (psi, psi_bar, psi_tilde).

    psi couples jumps to the diffusive moves of volatility and of the jump
    coefficient; psi_bar is the jump-of-jump-coefficient term; psi_tilde
    collects the diffusive and jump feedback of the intensity.  Unlike the
    xi family, the exponential carriers here sit at the coefficient state t;
    only the measure (and the intensity coefficients) are frozen at s.
    """
    if js is None:
        return 0.0 + 0.0j, 0.0 + 0.0j, 0.0 + 0.0j
    gt = state_t.gamma_scale
    prof = js.gamma_profile
    ew = lambda z: np.exp(1j * u * gt * prof(z)) - 1.0
    cew = lambda z: np.exp(1j * u * gt * prof(z)) - 1.0 - 1j * u * gt * prof(z)
    sig_t = state_t.sigma

    # psi
    sg_vol = js.gamma_carrier.vol
    gs_scale = state_t.gamma_sigma_scale
    gs_prof = js.gamma_sigma_profile

    def f_psi(z):
        coeff = sg_vol * prof(z)
        if gs_prof is not None:
            coeff += gs_scale * gs_prof(z)
        return ew(z) * coeff

    psi = -0.5 * u * u * sig_t * _nu(js, state_s, f_psi)

    # psi_bar
    jump = js.gamma_carrier
    if jump.jump_scale != 0.0 and jump.jump_profile is not None:
        a = _nu(js, state_s, lambda z: ew(z) * prof(z))
        b = _nu(js, state_s, lambda z: ew(z) * jump.jump_profile(z))
        psi_bar = 0.5j * u * jump.jump_scale * a * b
    else:
        psi_bar = 0.0 + 0.0j

    # psi_tilde
    psi_tilde = 0.0 + 0.0j
    ivol = js.intensity_carrier.vol
    if ivol != 0.0:
        psi_tilde += (0.5j * u * sig_t * ivol
                      * _F(js, lambda z: cew(z) * js.intensity_base(z)))
    ij = js.intensity_carrier
    if ij.jump_scale != 0.0 and ij.jump_profile is not None:
        a = _F(js, lambda z: cew(z) * js.intensity_base(z))
        b = _nu(js, state_s, lambda z: ew(z) * ij.jump_profile(z))
        psi_tilde += 0.5 * ij.jump_scale * a * b
    return psi, psi_bar, psi_tilde
