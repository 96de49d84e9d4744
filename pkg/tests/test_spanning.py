"""Option curves and CF recovery through the strike integral."""

import cmath
import math

import numpy as np
import pytest

from cfx import (
    GridError,
    ModelSpec,
    OptionCurve,
    OutOfRange,
    TailNotDecayed,
    bs_option_curve,
    build_model,
    mc_option_curve,
    span_cf,
    spot_var,
    strike_grid_design,
)


def gaussian_cf(u, sigma, alpha, T):
    w = u / math.sqrt(T)
    return cmath.exp(1j * w * alpha * T - 0.5 * w * w * sigma * sigma * T)


class TestStrikeGridDesign:
    def test_basic_shape(self):
        k = strike_grid_design(0.2, 0.25, coverage_sds=10.0)
        assert len(k) % 2 == 1
        assert 0.0 in k
        assert k[0] == pytest.approx(-1.0)   # 10 * 0.2 * 0.5
        assert k[-1] == pytest.approx(1.0)
        assert np.max(np.diff(k)) <= 0.2 * 0.5 / 50 + 1e-15

    def test_centered_elsewhere(self):
        k = strike_grid_design(0.2, 0.25, x_t=1.3)
        assert 1.3 in k

    def test_coverage_floor(self):
        with pytest.raises(GridError):
            strike_grid_design(0.2, 0.25, coverage_sds=5.0)

    def test_positive_inputs(self):
        with pytest.raises(OutOfRange):
            strike_grid_design(-0.2, 0.25)


class TestOptionCurves:
    def test_bs_atm_value(self):
        curve = bs_option_curve(0.0, 0.2, 0.25, [-0.2, 0.0, 0.2])
        assert curve.prices[1] == pytest.approx(0.03987761167674497, abs=1e-12)

    def test_wing_assignment(self):
        curve = bs_option_curve(0.0, 0.2, 0.25, [-0.2, 0.0, 0.2])
        assert list(curve.wings) == ["put", "put", "call"]

    def test_put_call_symmetry_at_zero_log_spot(self):
        # lognormal symmetry: put(-k) = e^{-k} call(k) at x_t = 0
        curve = bs_option_curve(0.0, 0.2, 0.25, [-0.3, 0.0, 0.3])
        assert curve.prices[0] == pytest.approx(
            math.exp(-0.3) * curve.prices[2], rel=1e-10)

    def test_validation(self):
        with pytest.raises(GridError):
            OptionCurve(0.0, 0.25, [0.0, 0.1], [1.0, 1.0], "test")
        with pytest.raises(GridError):
            OptionCurve(0.0, 0.25, [0.0, 0.1, 0.05], [1.0, 1.0, 1.0], "test")
        with pytest.raises(OutOfRange):
            OptionCurve(0.0, 0.25, [0.0, 0.1, 0.2], [1.0, -1.0, 1.0], "test")

    def test_rows_export(self):
        curve = bs_option_curve(0.0, 0.2, 0.25, [-0.2, 0.0, 0.2])
        rows = curve.to_rows()
        assert len(rows) == 3
        assert rows[0]["wing"] == "put"


class TestSpanCF:
    def setup_method(self):
        self.sigma, self.T = 0.2, 0.25
        self.alpha = -0.5 * self.sigma ** 2   # martingale spot
        k = strike_grid_design(self.sigma, self.T)
        curve = bs_option_curve(0.0, self.sigma, self.T, k)
        self.curve = curve
        self.u = np.linspace(0.5, 3.0, 11)

    def exact(self, u):
        return gaussian_cf(u, self.sigma, self.alpha, self.T)

    def test_round_trip_accuracy(self):
        cf = span_cf(self.curve, self.u)
        errs = [abs(cf.value_at(u) - self.exact(u)) for u in self.u]
        assert max(errs) < 1e-3

    def test_variance_recovery(self):
        cf = span_cf(self.curve, [2.0])
        est = spot_var(cf.value_at(2.0), 2.0, self.T)
        assert abs(est.value - 0.04) < 1e-4

    def test_second_order_in_spacing(self):
        """Halving the strike spacing cuts the CF error at least 3x."""
        k_half = strike_grid_design(self.sigma, self.T, spacing_frac=1.0 / 100.0)
        curve_half = bs_option_curve(0.0, self.sigma, self.T, k_half)
        u_probe = [1.0, 2.0, 3.0]
        err = max(abs(span_cf(self.curve, u_probe).value_at(u) - self.exact(u))
                  for u in u_probe)
        err_half = max(abs(span_cf(curve_half, u_probe).value_at(u) - self.exact(u))
                       for u in u_probe)
        assert err_half < err / 3.0

    def test_small_u_limit(self):
        cf = span_cf(self.curve, [1e-6])
        assert abs(cf.value_at(1e-6) - 1.0) < 1e-6

    def test_off_center_log_spot(self):
        """The recovery is invariant under shifting the log-spot."""
        x_t = 0.7
        k = strike_grid_design(self.sigma, self.T, x_t=x_t)
        curve = bs_option_curve(x_t, self.sigma, self.T, k)
        cf = span_cf(curve, [2.0])
        assert abs(cf.value_at(2.0) - self.exact(2.0)) < 1e-4

    def test_error_estimate_positive_and_small(self):
        cf = span_cf(self.curve, [2.0])
        actual = abs(cf.value_at(2.0) - self.exact(2.0))
        assert cf.stderr[0] > 0.0
        assert cf.stderr[0] < 1e-3
        # the estimate may undershoot, but not by orders of magnitude
        assert actual < 100 * cf.stderr[0]

    def test_narrow_grid_rejected(self):
        k = np.linspace(-0.2, 0.2, 41)   # only 2 sds wide
        curve = bs_option_curve(0.0, self.sigma, self.T, k)
        with pytest.raises(TailNotDecayed):
            span_cf(curve, [2.0])

    def test_zero_frequency_rejected(self):
        with pytest.raises(OutOfRange):
            span_cf(self.curve, [0.0])


class TestMCOptionCurve:
    def test_matches_closed_form_within_noise(self):
        model = build_model(ModelSpec(sigma=0.2, alpha=-0.02))
        state = model.initial_state()
        k = np.array([-0.1, 0.0, 0.1])
        curve = mc_option_curve(model, state, 0.25, k, n_paths=40_000,
                                seed=11, dt=0.25 / 64)
        ref = bs_option_curve(0.0, 0.2, 0.25, k)
        for got, want, se in zip(curve.prices, ref.prices, curve.stderr):
            # discretization of the sigma path is exact for constant sigma,
            # so 4 standard errors is a fair band
            assert abs(got - want) < 4 * se + 1e-4
