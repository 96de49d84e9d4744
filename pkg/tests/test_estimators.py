"""Spot-variance extraction, two-maturity debiasing, and transforms."""

import cmath
import math

import pytest

from cfx import (
    DegenerateCF,
    DomainError,
    GridError,
    HFGrid,
    OutOfRange,
    debias_pair,
    debiased_estimate,
    estimator_increments,
    spot_var,
    spot_var_debiased,
    transform_debiased,
    transform_estimate,
)


def gaussian_cf(u, var):
    return cmath.exp(-0.5 * u * u * var)


class TestSpotVar:
    def test_round_trip(self):
        """-2/u^2 log|CF| inverts the Gaussian modulus exactly."""
        for u in (0.5, 1.0, 2.0, 3.0):
            for var in (0.01, 0.04, 0.25):
                est = spot_var(gaussian_cf(u, var), u, T=0.1)
                assert est.value == pytest.approx(var, rel=1e-14)

    def test_raw_frequency_convention(self):
        # the estimator uses the raw u even though the CF was formed at u_T
        est = spot_var(0.9801986733067553 + 0j, 1.0, T=0.25)
        assert est.value == pytest.approx(0.04, rel=1e-12)

    def test_phase_is_ignored(self):
        cf = gaussian_cf(2.0, 0.04) * cmath.exp(0.3j)
        est = spot_var(cf, 2.0, T=0.1)
        assert est.value == pytest.approx(0.04, rel=1e-14)

    def test_clamps_modulus_above_one(self):
        est = spot_var(1.02 + 0j, 2.0, T=0.1)
        assert est.value == 0.0
        assert est.clamped
        assert est.meta["raw"] < 0.0

    def test_degenerate_cf(self):
        with pytest.raises(DegenerateCF):
            spot_var(1e-13 + 0j, 2.0, T=0.1)

    def test_metadata(self):
        est = spot_var(gaussian_cf(2.0, 0.04), 2.0, T=0.1, source="spanning")
        assert est.u == 2.0 and est.T == 0.1
        assert est.source == "spanning"
        assert not est.debiased


class TestDebiasPair:
    def test_affine_bias_removed_exactly(self):
        # v(T) = s2 + b*T: the combination returns s2 to machine precision
        s2, b = 0.04, 0.7
        T, T2 = 0.1, 0.2
        got = debias_pair(s2 + b * T, s2 + b * T2, T, T2)
        assert got == 0.04

    def test_tau_form(self):
        s2, b, T, tau = 0.09, -1.3, 0.05, 1.5
        got = spot_var_debiased(s2 + b * T, s2 + b * tau * T, T, tau)
        assert got == pytest.approx(s2, abs=1e-16)

    def test_unbiased_inputs_pass_through(self):
        assert debias_pair(0.04, 0.04, 0.1, 0.15) == pytest.approx(0.04)

    def test_rejects_equal_tenors(self):
        with pytest.raises(OutOfRange):
            debias_pair(0.04, 0.04, 0.1, 0.1)


class TestTransforms:
    def test_identity(self):
        assert transform_estimate(0.04) == 0.04

    def test_named_transforms(self):
        assert transform_estimate(0.04, "sqrt") == pytest.approx(0.2)
        assert transform_estimate(0.04, "log") == pytest.approx(math.log(0.04))
        assert transform_estimate(0.04, "logsqrt") == pytest.approx(math.log(0.2))

    def test_domain_guard(self):
        with pytest.raises(DomainError):
            transform_estimate(0.0, "log")
        with pytest.raises(DomainError):
            transform_estimate(-0.01, "sqrt")

    def test_transform_debiased_applies_F_first(self):
        """Combination happens in transform units, not variance units."""
        s2, b, T, tau = 0.04, 0.7, 0.1, 2.0
        vT, vTp = s2 + b * T, s2 + b * tau * T
        got = transform_debiased(vT, vTp, T, tau, "log")
        expected = (tau * T * math.log(vT) - T * math.log(vTp)) / (tau * T - T)
        assert got == pytest.approx(expected, abs=1e-15)
        # ordering matters: debias-then-log differs at this bias size
        other = math.log(debias_pair(vT, vTp, T, tau * T))
        assert abs(got - other) > 1e-3

    def test_log_combination_exact_for_multiplicative_bias(self):
        # |CF| biases multiplicative in T become affine after log
        s2, c, T, tau = 0.04, 0.9, 0.1, 1.5
        vT = s2 * math.exp(c * T)
        vTp = s2 * math.exp(c * tau * T)
        got = transform_debiased(vT, vTp, T, tau, "log")
        assert got == pytest.approx(math.log(s2), abs=1e-15)


class TestDebiasedEstimate:
    def test_pipeline_matches_hand_computation(self):
        u, T, tau = 2.0, 0.1, 1.5
        var_T, var_Tp = 0.047, 0.0505   # affine: 0.04 + 0.07*T
        cf_T = gaussian_cf(u, var_T)
        cf_Tp = gaussian_cf(u, var_Tp)
        est = debiased_estimate(cf_T, cf_Tp, u, T, tau)
        assert est.value == pytest.approx(0.04, rel=1e-12)
        assert est.debiased and est.tau == tau

    def test_combination_uses_unclamped_inputs(self):
        """Negative single-tenor reads must still cancel in the combination."""
        u, T, tau = 2.0, 0.1, 2.0
        var_T, var_Tp = -0.01 + 0.04, -0.01 + 0.08   # 0.04*T slope, s2=-0.01
        # hand-pick so the debiased value is positive but var_T alone is tiny
        cf_T = gaussian_cf(u, var_T)
        cf_Tp = gaussian_cf(u, var_Tp)
        est = debiased_estimate(cf_T, cf_Tp, u, T, tau)
        assert est.value == pytest.approx(-0.01 + 0.0, abs=1e-12) or est.clamped

    def test_transform_output(self):
        u, T, tau = 2.0, 0.1, 1.5
        cf = gaussian_cf(u, 0.04)
        est = debiased_estimate(cf, cf, u, T, tau, transform="sqrt")
        assert est.value == pytest.approx(0.2, rel=1e-12)
        assert est.transform == "vol"


class TestEstimatorIncrements:
    def test_telescoping_and_tenor_pairing(self):
        """Increment rows difference node estimates at node-specific tenors."""
        grid = HFGrid(t=0.025, step=0.0125, T=0.2, tau=1.5, i_max=2)
        u = 2.0
        # synthetic CF rows: variance depends on the node through its tenor,
        # v_i = s2 + b*T_i, plus the second maturity for debiasing
        s2, b = 0.04, 0.55
        rows = []
        for i in range(3):
            rows.append({
                "cf": gaussian_cf(u, s2 + b * grid.tenor(i)),
                "cf2": gaussian_cf(u, s2 + b * grid.tenor2(i)),
            })
        plain = estimator_increments(rows, grid, u, transform="var",
                                     debias=False)
        # plain increments see the tenor drift: T_{i-1} - T_i = -step
        for inc in plain:
            assert inc == pytest.approx(-b * grid.step, rel=1e-10)
        unbiased = estimator_increments(rows, grid, u, transform="var",
                                        debias=True)
        # the affine-in-tenor bias cancels node by node, increments vanish
        for inc in unbiased:
            assert abs(inc) < 1e-14

    def test_row_count_guard(self):
        grid = HFGrid(t=0.025, step=0.0125, T=0.2, i_max=2)
        with pytest.raises(GridError):
            estimator_increments([{"cf": 1.0}], grid, 2.0)
