"""Randomized invariants: CF symmetry, modulus bounds, scaling, round trips.

Each test draws its cases from a seeded generator so failures replay
exactly.  Together the loops cover 200 sampled configurations.
"""

import numpy as np
import pytest

from cfx import (
    Freq,
    ModelSpec,
    build_model,
    cf_first_order,
    chi,
    conditional_cf_mc,
    model_from_dict,
    phi,
    spot_var,
    terminal_increments,
    theta_factor,
)


def random_jump_dict(rng):
    kind = rng.choice(["none", "point_mass", "double_exp", "tempered_stable"])
    if kind == "none":
        return None
    if kind == "point_mass":
        return {"mark": "point_mass",
                "size": float(rng.uniform(0.02, 0.4)) * rng.choice([-1, 1]),
                "weight": float(rng.uniform(0.2, 3.0)),
                "intensity": float(rng.uniform(0.2, 2.0))}
    if kind == "double_exp":
        return {"mark": "double_exp",
                "eta_pos": float(rng.uniform(3.0, 20.0)),
                "eta_neg": float(rng.uniform(3.0, 20.0)),
                "p": float(rng.uniform(0.1, 0.9)),
                "intensity": float(rng.uniform(0.2, 2.0))}
    return {"mark": "tempered_stable",
            "alpha": float(rng.uniform(1.05, 1.7)),
            "c": float(rng.uniform(0.05, 0.5)),
            "lam": float(rng.uniform(3.0, 12.0)),
            "intensity": float(rng.uniform(0.2, 2.0))}


def random_model(rng):
    d = {"sigma": float(rng.uniform(0.05, 0.6)),
         "alpha": float(rng.uniform(-0.3, 0.3)),
         "vol_of_vol": float(rng.uniform(0.0, 0.8))}
    jumps = random_jump_dict(rng)
    if jumps is not None:
        d["jumps"] = jumps
        if jumps["mark"] == "tempered_stable":
            d["activity_r"] = min(1.95, jumps["alpha"] + 0.2)
    return model_from_dict(d)


class TestCFSymmetry:
    def test_conjugate_in_u(self):
        """L(-u) is the complex conjugate of L(u) for real increments."""
        rng = np.random.default_rng(91001)
        for _ in range(50):
            model = random_model(rng)
            st = model.initial_state()
            u = float(rng.uniform(0.2, 4.0))
            T = float(rng.uniform(0.02, 0.5))
            for fn in (theta_factor, cf_first_order):
                plus = fn(model.jumps, st, Freq(u, T))
                minus = fn(model.jumps, st, Freq(-u, T))
                assert minus == pytest.approx(np.conj(plus), rel=1e-12)

    def test_modulus_bounded_by_one(self):
        """A CF of a real variable never exceeds modulus one."""
        rng = np.random.default_rng(91002)
        for _ in range(50):
            model = random_model(rng)
            st = model.initial_state()
            u = float(rng.uniform(0.1, 5.0))
            T = float(rng.uniform(0.02, 0.5))
            assert abs(theta_factor(model.jumps, st, Freq(u, T))) <= 1 + 1e-12

    def test_phi_real_part_nonpositive(self):
        """Re(phi) <= 0 because |e^{iuz} - 1 - iu gamma| cos term is <= 0."""
        rng = np.random.default_rng(91003)
        for _ in range(40):
            model = random_model(rng)
            if model.jumps is None:
                continue
            st = model.initial_state()
            u = float(rng.uniform(0.1, 5.0))
            assert phi(model.jumps, st, st, u).real <= 1e-13


class TestScaling:
    def test_phi_linear_chi2_quadratic_in_intensity(self):
        """Doubling the thinning intensity doubles phi, quadruples chi_2."""
        rng = np.random.default_rng(91004)
        for _ in range(20):
            jumps = random_jump_dict(rng)
            if jumps is None or jumps["mark"] == "tempered_stable":
                continue
            jumps["gamma_carrier"] = {"init": 1.0, "jump_scale": 0.3}
            ell = jumps.get("intensity", 1.0)
            base = model_from_dict({"sigma": 0.2, "jumps": jumps})
            jumps2 = dict(jumps)
            jumps2["intensity"] = 2.0 * ell
            doubled = model_from_dict({"sigma": 0.2, "jumps": jumps2})
            s1, s2 = base.initial_state(), doubled.initial_state()
            u = float(rng.uniform(0.3, 3.0))
            assert phi(doubled.jumps, s2, s2, u) == pytest.approx(
                2.0 * phi(base.jumps, s1, s1, u), rel=1e-10)
            c1 = chi(base.jumps, 2, s1, u)
            if abs(c1) > 1e-14:
                assert chi(doubled.jumps, 2, s2, u) == pytest.approx(
                    4.0 * c1, rel=1e-10)


class TestSpotVarRoundTrip:
    def test_gaussian_inversion(self):
        """spot_var inverts |L(u)| = exp(-u^2 v / 2) regardless of phase."""
        rng = np.random.default_rng(91005)
        for _ in range(30):
            v = float(rng.uniform(1e-3, 1.0))
            u = float(rng.uniform(0.2, 3.0))
            T = float(rng.uniform(0.01, 0.5))
            cf = np.exp(-0.5 * u * u * v + 1j * rng.uniform(-0.2, 0.2))
            est = spot_var(cf, u, T)
            assert est.value == pytest.approx(v, rel=1e-12)


class TestReproducibility:
    def test_terminal_increments_bitwise(self):
        """Identical seeds give identical draws, different seeds do not."""
        rng = np.random.default_rng(91006)
        model = build_model(ModelSpec(sigma=0.2, vol_of_vol=0.3))
        st = model.initial_state()
        for _ in range(5):
            seed = int(rng.integers(0, 2 ** 31))
            a = terminal_increments(model, st, 0.1, 512, seed=seed)
            b = terminal_increments(model, st, 0.1, 512, seed=seed)
            c = terminal_increments(model, st, 0.1, 512, seed=seed + 1)
            assert np.array_equal(a, b)
            assert not np.array_equal(a, c)

    def test_conditional_cf_mc_bitwise(self):
        """The MC CF estimate is a pure function of (model, seed)."""
        rng = np.random.default_rng(91007)
        model = build_model(ModelSpec(sigma=0.2, vol_of_vol=0.3))
        st = model.initial_state()
        for _ in range(5):
            seed = int(rng.integers(0, 2 ** 31))
            g1 = conditional_cf_mc(model, st, 0.1, [1.0, 2.0], 1024, seed=seed)
            g2 = conditional_cf_mc(model, st, 0.1, [1.0, 2.0], 1024, seed=seed)
            assert np.array_equal(g1.values, g2.values)
