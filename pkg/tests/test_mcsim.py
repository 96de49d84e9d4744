"""Path simulator, substream keying, and the nested CF estimator.

Statistical assertions use 4-standard-error bands with fixed seeds, so they
are deterministic reruns of a draw that was checked to sit inside the band.
"""

import math

import numpy as np
import pytest

from cfx import (
    Carrier,
    Freq,
    GridError,
    HFGrid,
    InvalidSpec,
    JumpSystem,
    ModelSpec,
    OutOfRange,
    PointMass,
    UnstableScheme,
    build_model,
    conditional_cf_mc,
    increment_cf_mc,
    levy_exact_cf,
    simulate_path,
    terminal_increments,
)

BS = ModelSpec(sigma=0.2, alpha=0.05)
SV = ModelSpec(sigma=0.2, vol_of_vol=0.3)


def jump_model(weight=1.0, size=0.1, ell=2.0):
    js = JumpSystem(mark=PointMass(size=size, weight=weight),
                    intensity_carrier=Carrier(init=ell))
    return build_model(ModelSpec(sigma=0.2, jumps=js))


class TestSimulatePath:
    def test_grid_and_reproducibility(self):
        model = build_model(SV)
        p1 = simulate_path(model, horizon=0.5, dt=0.01, seed=42)
        p2 = simulate_path(model, horizon=0.5, dt=0.01, seed=42)
        assert len(p1.times) == 51
        assert p1.times[-1] == pytest.approx(0.5)
        assert np.array_equal(p1.x, p2.x)
        assert np.array_equal(p1.sigma, p2.sigma)

    def test_seed_changes_draws(self):
        model = build_model(SV)
        p1 = simulate_path(model, horizon=0.5, dt=0.01, seed=42)
        p3 = simulate_path(model, horizon=0.5, dt=0.01, seed=43)
        assert not np.array_equal(p1.x, p3.x)

    def test_constant_sigma_stays_constant(self):
        model = build_model(BS)
        p = simulate_path(model, horizon=0.5, dt=0.01, seed=1)
        assert np.all(p.sigma == 0.2)
        assert np.all(p.alpha == 0.05)

    def test_jump_events_recorded(self):
        model = jump_model(ell=5.0)
        p = simulate_path(model, horizon=1.0, dt=1 / 128, seed=7)
        assert len(p.events) > 0
        times = [e[0] for e in p.events]
        assert all(0.0 <= s <= 1.0 for s in times)
        assert times == sorted(times)
        # every accepted event moves the price by gamma = size
        for _, _, px_jump, vol_jump in p.events:
            assert px_jump == pytest.approx(0.1)
            assert vol_jump == 0.0

    def test_sigma_floor_guard(self):
        spec = ModelSpec(sigma=0.02, vol_of_vol=1.5, sigma_floor=0.015)
        model = build_model(spec)
        with pytest.raises(UnstableScheme):
            simulate_path(model, horizon=0.5, dt=0.01, seed=5,
                          max_floor_frac=0.01)


class TestTerminalIncrements:
    def test_bitwise_reproducible(self):
        model = build_model(BS)
        st = model.initial_state()
        a = terminal_increments(model, st, 0.25, 4096, dt=0.25 / 32, seed=9)
        b = terminal_increments(model, st, 0.25, 4096, dt=0.25 / 32, seed=9)
        assert np.array_equal(a, b)

    def test_seed_key_opens_new_substream(self):
        model = build_model(BS)
        st = model.initial_state()
        a = terminal_increments(model, st, 0.25, 1024, dt=0.25 / 32, seed=9)
        c = terminal_increments(model, st, 0.25, 1024, dt=0.25 / 32, seed=9,
                                seed_key=(3,))
        assert not np.array_equal(a, c)

    def test_gaussian_moments(self):
        model = build_model(BS)
        st = model.initial_state()
        n = 60_000
        dx = terminal_increments(model, st, 0.25, n, dt=0.25 / 64, seed=17)
        se_mean = 0.2 * 0.5 / math.sqrt(n)
        assert abs(dx.mean() - 0.05 * 0.25) < 4 * se_mean
        se_var = 0.04 * 0.25 * math.sqrt(2.0 / n)
        assert abs(dx.var() - 0.04 * 0.25) < 4 * se_var

    def test_common_random_numbers_across_models(self):
        """Same substream key + same step count -> almost identical paths."""
        st_a = build_model(BS).initial_state()
        model_b = build_model(ModelSpec(sigma=0.21, alpha=0.05))
        st_b = model_b.initial_state()
        a = terminal_increments(build_model(BS), st_a, 0.25, 2048,
                                dt=0.25 / 32, seed=9)
        b = terminal_increments(model_b, st_b, 0.25, 2048,
                                dt=0.25 / 32, seed=9)
        corr = np.corrcoef(a, b)[0, 1]
        assert corr > 0.999

    def test_mirror_negates_gaussians(self):
        model = build_model(BS)
        st = model.initial_state()
        plus = terminal_increments(model, st, 0.25, 512, dt=0.25 / 32, seed=9)
        minus = terminal_increments(model, st, 0.25, 512, dt=0.25 / 32, seed=9,
                                    mirror=True)
        # for BS, dx = alpha*T + sigma*W so the pair mean is exactly alpha*T
        assert np.allclose(0.5 * (plus + minus), 0.05 * 0.25, atol=1e-12)

    def test_martingale_drift_mode(self):
        """exp_compensator drift makes exp(dx) mean-one including jumps."""
        js = JumpSystem(mark=PointMass(size=0.1, weight=1.0),
                        intensity_carrier=Carrier(init=2.0))
        model = build_model(ModelSpec(sigma=0.2, jumps=js,
                                      drift_mode="exp_compensator"))
        st = model.initial_state()
        n = 60_000
        y = np.exp(terminal_increments(model, st, 0.25, n, dt=0.25 / 64,
                                       seed=23))
        assert abs(y.mean() - 1.0) < 4 * y.std(ddof=1) / math.sqrt(n)


class TestConditionalCF:
    def test_bs_within_noise(self):
        model = build_model(BS)
        st = model.initial_state()
        u_grid = [0.5, 1.0, 2.0, 3.0]
        cf = conditional_cf_mc(model, st, 0.25, u_grid, 40_000,
                               dt=0.25 / 64, seed=29)
        for u, got, se in zip(u_grid, cf.values, cf.stderr):
            exact = levy_exact_cf(model, st, Freq(u, 0.25))
            assert abs(got - exact) < 4 * se

    def test_jump_model_within_noise(self):
        model = jump_model()
        st = model.initial_state()
        cf = conditional_cf_mc(model, st, 0.2, [1.0, 2.0], 40_000,
                               dt=0.2 / 64, seed=31)
        for u, got, se in zip([1.0, 2.0], cf.values, cf.stderr):
            exact = levy_exact_cf(model, st, Freq(u, 0.2))
            # Euler places each jump at a step boundary; at dt = T/64 the
            # residual discretization bias is below the noise band
            assert abs(got - exact) < 4 * se + 5e-3

    def test_antithetic_reduces_noise(self):
        model = build_model(BS)
        st = model.initial_state()
        plain = conditional_cf_mc(model, st, 0.25, [1.0], 20_000,
                                  dt=0.25 / 32, seed=37)
        anti = conditional_cf_mc(model, st, 0.25, [1.0], 20_000,
                                 dt=0.25 / 32, seed=37, antithetic=True)
        assert anti.stderr[0] < plain.stderr[0]
        exact = levy_exact_cf(model, st, Freq(1.0, 0.25))
        assert abs(anti.value_at(1.0) - exact) < 6 * anti.stderr[0] + 1e-6

    def test_antithetic_guards(self):
        model = jump_model()
        st = model.initial_state()
        with pytest.raises(InvalidSpec):
            conditional_cf_mc(model, st, 0.2, [1.0], 1000, seed=1,
                              antithetic=True)
        bs = build_model(BS)
        with pytest.raises(OutOfRange):
            conditional_cf_mc(bs, bs.initial_state(), 0.2, [1.0], 1001,
                              seed=1, antithetic=True)

    def test_value_lookup(self):
        model = build_model(BS)
        cf = conditional_cf_mc(model, model.initial_state(), 0.25, [1.0, 2.0],
                               2048, dt=0.25 / 16, seed=3)
        assert cf.value_at(2.0) == cf.values[1]
        with pytest.raises(OutOfRange):
            cf.value_at(2.5)
        rows = cf.to_rows()
        assert len(rows) == 2 and rows[0]["u"] == 1.0


class TestIncrementCF:
    def test_rows_and_crn_pairing(self):
        model = build_model(SV)
        grid = HFGrid(t=0.025, step=0.0125, T=0.2, tau=1.5, i_max=2)
        path = simulate_path(model, horizon=0.05, dt=0.0125 / 8, seed=41)
        rows = increment_cf_mc(model, path, grid, [2.0], n_paths=2048,
                               seed=43, dt=0.2 / 64, include_second_tenor=True)
        assert len(rows) == 2
        for row in rows:
            assert set(row) == {"prev", "curr", "prev2", "curr2"}
            d = abs(row["prev"].value_at(2.0) - row["curr"].value_at(2.0))
            # CRN legs differ by a state increment and one tenor step only;
            # independent estimates at this path count would sit ~1e-2 apart
            assert d < 5e-3

    def test_window_must_be_covered(self):
        model = build_model(SV)
        grid = HFGrid(t=1.0, step=0.0125, T=0.2, i_max=2)
        path = simulate_path(model, horizon=0.05, dt=0.0125, seed=41)
        with pytest.raises(GridError):
            increment_cf_mc(model, path, grid, [2.0], n_paths=64, seed=1)
