r"""Monte Carlo engine: path simulation and conditional CF estimation.

Euler-Maruyama on the full state vector (x, sigma, second-layer
coefficients, carrier scales), jump times by thinning against a dominating
intensity bound, acceptance test against the left-limit intensity.  The
price and vol jump integrals are compensated (their expected flow is
subtracted from the drift); the carrier scale processes evolve as plain
jump-diffusions and the intensity scale is floored at zero.

Randomness is counter-based: every (seed, chunk, role) triple maps to an
independent Philox substream, so runs are bitwise reproducible and two
estimators called with the same seed, n_paths and dt consume identical
Gaussian draws step by step (common random numbers; jump draws live on a
separate substream so they cannot desynchronize the Gaussians).

sigma positivity uses reflection at the configured floor with incident
counting; a run whose floor-hit fraction exceeds max_floor_frac raises
UnstableScheme instead of returning silently biased output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import GridError, InvalidSpec, OutOfRange, UnstableScheme
from .expansion import HFGrid
from .model import JumpSystem, Model, ModelState, frozen_state, _const_one

__all__ = [
    "Path",
    "CFGrid",
    "simulate_path",
    "terminal_increments",
    "conditional_cf_mc",
    "increment_cf_mc",
]

_CHUNK = 1 << 17
_PROBE_SEED = 0x5eed
_BOUND_MARGIN = 1.25


@dataclass
class Path:
    """One simulated trajectory of the full model state.

    Arrays share the times grid; events holds accepted jumps as
    (time, mark, price_jump, vol_jump) with times spread inside their Euler
    step so they stay strictly increasing.
    """

    times: np.ndarray
    x: np.ndarray
    sigma: np.ndarray
    alpha: np.ndarray
    vol_of_vol: np.ndarray
    vol_of_vol_perp: np.ndarray
    intensity_scale: np.ndarray
    gamma_scale: np.ndarray
    gamma_sigma_scale: np.ndarray
    events: List[Tuple[float, float, float, float]] = field(default_factory=list)
    floor_hits: int = 0
    seed: int = 0


@dataclass
class CFGrid:
    """Conditional CF estimates on a frequency grid at one tenor."""

    u: np.ndarray
    T: float
    values: np.ndarray
    stderr: np.ndarray
    n_paths: int
    source: str = "mc"
    T2: Optional[float] = None
    meta: Dict[str, float] = field(default_factory=dict)

    def value_at(self, u: float) -> complex:
        idx = np.nonzero(np.isclose(self.u, u))[0]
        if idx.size == 0:
            raise OutOfRange(f"u={u} not on the CF grid")
        return complex(self.values[int(idx[0])])

    def to_rows(self) -> List[Dict[str, float]]:
        return [
            {"u": float(uu), "T": self.T, "re": float(v.real),
             "im": float(v.imag), "stderr": float(s), "n": self.n_paths}
            for uu, v, s in zip(self.u, self.values, self.stderr)
        ]


def _substream(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def _intensity_sup(js: JumpSystem) -> float:
    """Upper bound for the intensity base profile used by thinning."""
    if js.intensity_base is _const_one:
        return 1.0
    probe = _substream(_PROBE_SEED, 0)
    zs = np.concatenate([js.mark.sample(probe, 512),
                         np.array([-2.0, -1.0, -0.5, -0.25, 0.25, 0.5, 1.0, 2.0])])
    vals = [js.intensity_base(float(z)) for z in zs]
    top = max(vals)
    if top <= 0.0:
        raise InvalidSpec("intensity base profile vanishes on all probes")
    return top * _BOUND_MARGIN


def _profile_values(fn, zs: np.ndarray) -> np.ndarray:
    return np.fromiter((fn(float(z)) for z in zs), dtype=float, count=len(zs))


class _Euler:
    """Vectorized Euler stepper for a block of paths from one start state."""

    def __init__(self, model: Model, state: ModelState, n: int):
        self.model = model
        self.spec = model.spec
        self.js = model.jumps
        if self.js is not None and not self.js.mark.is_finite_activity:
            raise InvalidSpec("simulation supports finite-activity marks only")
        self.n = n
        self.x = np.full(n, state.x)
        self.sig = np.full(n, state.sigma)
        self.vov = np.full(n, state.vol_of_vol)
        self.vovp = np.full(n, state.vol_of_vol_perp)
        self.ell = np.full(n, state.intensity_scale)
        self.g = np.full(n, state.gamma_scale)
        self.gs = np.full(n, state.gamma_sigma_scale)
        self.floor_hits = 0
        self.steps_done = 0
        if self.js is not None:
            self.mass = self.js.mark.total_mass()
            self.bsup = _intensity_sup(self.js)
            self.flat_base = self.js.intensity_base is _const_one

    def alpha_now(self) -> np.ndarray:
        if self.spec.drift_mode == "constant":
            return np.full(self.n, self.spec.alpha)
        return -0.5 * self.sig ** 2 - self.ell * self.model.exp_comp

    def step(self, h: float, grng: np.random.Generator,
             jrng: Optional[np.random.Generator],
             events: Optional[list] = None, t_left: float = 0.0):
        n = self.n
        sqh = math.sqrt(h)
        z1 = grng.standard_normal(n)
        z2 = grng.standard_normal(n)

        drift_x = self.alpha_now()
        drift_sig = np.full(n, self.spec.sigma_drift)
        jump_dx = jump_dsig = jump_dell = jump_dg = jump_dgs = 0.0
        if self.js is not None:
            js = self.js
            drift_x = drift_x - self.ell * self.g * self.model.m_gamma
            drift_sig = drift_sig - self.ell * self.gs * self.model.m_gamma_sigma
            rate = np.maximum(self.ell, 0.0) * self.mass * self.bsup * h
            counts = jrng.poisson(rate)
            tot = int(counts.sum())
            if tot:
                zs = js.mark.sample(jrng, tot)
                owners = np.repeat(np.arange(n), counts)
                if self.flat_base:
                    acc = np.ones(tot, dtype=bool)
                else:
                    ratio = _profile_values(js.intensity_base, zs) / self.bsup
                    if ratio.max() > 1.0 + 1e-12:
                        raise UnstableScheme(
                            "thinning bound violated; intensity base profile "
                            "exceeds its probed supremum")
                    acc = jrng.random(tot) < ratio
                if acc.any():
                    zs, owners = zs[acc], owners[acc]
                    pv = _profile_values(js.gamma_profile, zs)
                    dx_ev = self.g[owners] * pv
                    jump_dx = np.bincount(owners, weights=dx_ev, minlength=n)
                    if js.gamma_sigma_profile is not None:
                        rv = _profile_values(js.gamma_sigma_profile, zs)
                        dsig_ev = self.gs[owners] * rv
                        jump_dsig = np.bincount(owners, weights=dsig_ev,
                                                minlength=n)
                    else:
                        dsig_ev = np.zeros(len(zs))
                    for carr, slot in ((js.intensity_carrier, "dell"),
                                       (js.gamma_carrier, "dg"),
                                       (js.gamma_sigma_carrier, "dgs")):
                        if carr.jump_scale != 0.0 and carr.jump_profile is not None:
                            vals = carr.jump_scale * _profile_values(
                                carr.jump_profile, zs)
                            agg = np.bincount(owners, weights=vals, minlength=n)
                            if slot == "dell":
                                jump_dell = agg
                            elif slot == "dg":
                                jump_dg = agg
                            else:
                                jump_dgs = agg
                    if events is not None:
                        m = len(zs)
                        for k in range(m):
                            events.append((t_left + (k + 1) * h / (m + 1),
                                           float(zs[k]), float(dx_ev[k]),
                                           float(dsig_ev[k])))

        self.x = self.x + drift_x * h + self.sig * sqh * z1 + jump_dx
        sig_new = (self.sig + drift_sig * h + self.vov * sqh * z1
                   + self.vovp * sqh * z2 + jump_dsig)
        below = sig_new < self.spec.sigma_floor
        nb = int(below.sum())
        if nb:
            sig_new[below] = 2.0 * self.spec.sigma_floor - sig_new[below]
            self.floor_hits += nb
        self.sig = sig_new
        sl = self.spec.second_layer
        if sl.ss_drift or sl.ss_vol:
            self.vov = self.vov + sl.ss_drift * h + sl.ss_vol * sqh * z1
        if sl.ssp_drift or sl.ssp_vol:
            self.vovp = self.vovp + sl.ssp_drift * h + sl.ssp_vol * sqh * z1
        if self.js is not None:
            ic = self.js.intensity_carrier
            gc = self.js.gamma_carrier
            gsc = self.js.gamma_sigma_carrier
            self.ell = np.maximum(
                self.ell + ic.drift * h + ic.vol * sqh * z1 + jump_dell, 0.0)
            self.g = self.g + gc.drift * h + gc.vol * sqh * z1 + jump_dg
            self.gs = self.gs + gsc.drift * h + gsc.vol * sqh * z1 + jump_dgs
        self.steps_done += 1


def _plan_steps(horizon: float, dt: float) -> Tuple[int, float]:
    if dt <= 0.0 or horizon < dt:
        raise OutOfRange(f"need 0 < dt <= horizon, got dt={dt}, horizon={horizon}")
    n_steps = max(1, int(round(horizon / dt)))
    return n_steps, horizon / n_steps


def simulate_path(model: Model, horizon: float, dt: float, seed: int = 0,
                  start: Optional[ModelState] = None,
                  max_floor_frac: float = 0.25) -> Path:
    """Simulate one trajectory of the full state over [t0, t0 + horizon]."""
    state = start if start is not None else model.initial_state()
    n_steps, h = _plan_steps(horizon, dt)
    eng = _Euler(model, state, 1)
    grng = _substream(seed, 0, 0)
    jrng = _substream(seed, 0, 1)
    rec = {k: [] for k in ("x", "sigma", "alpha", "vol_of_vol",
                           "vol_of_vol_perp", "intensity_scale",
                           "gamma_scale", "gamma_sigma_scale")}
    events: List[Tuple[float, float, float, float]] = []

    def snap():
        rec["x"].append(eng.x[0])
        rec["sigma"].append(eng.sig[0])
        rec["alpha"].append(eng.alpha_now()[0])
        rec["vol_of_vol"].append(eng.vov[0])
        rec["vol_of_vol_perp"].append(eng.vovp[0])
        rec["intensity_scale"].append(eng.ell[0])
        rec["gamma_scale"].append(eng.g[0])
        rec["gamma_sigma_scale"].append(eng.gs[0])

    snap()
    for i in range(n_steps):
        eng.step(h, grng, jrng, events=events, t_left=state.time + i * h)
        snap()
    if eng.floor_hits > max_floor_frac * n_steps:
        raise UnstableScheme(
            f"sigma floor hit on {eng.floor_hits}/{n_steps} steps")
    times = state.time + h * np.arange(n_steps + 1)
    return Path(times=times, seed=seed, floor_hits=eng.floor_hits,
                events=events, **{k: np.array(v) for k, v in rec.items()})


def _chunk_ranges(n: int) -> List[Tuple[int, int, int]]:
    out = []
    start = 0
    idx = 0
    while start < n:
        stop = min(start + _CHUNK, n)
        out.append((idx, start, stop))
        idx += 1
        start = stop
    return out


class _Mirror:
    """Gaussian-negating wrapper: the antithetic leg of a substream."""

    def __init__(self, gen: np.random.Generator):
        self._gen = gen

    def standard_normal(self, n: int) -> np.ndarray:
        return -self._gen.standard_normal(n)


def terminal_increments(model: Model, state: ModelState, T: float,
                        n_paths: int, dt: Optional[float] = None,
                        seed: int = 0, seed_key: Sequence[int] = (),
                        max_floor_frac: float = 0.25,
                        mirror: bool = False) -> np.ndarray:
    """Simulate x_{t+T} - x_t over n_paths forward paths from state.

    Chunked internally; the substream of chunk c is keyed (seed, *seed_key,
    c, role), so results are bitwise reproducible and two calls with equal
    (seed, seed_key, n_paths, dt) share their Gaussian draws step for step.
    mirror=True negates every Gaussian draw (the antithetic leg).
    """
    if n_paths < 1:
        raise OutOfRange("n_paths must be at least 1")
    n_steps, h = _plan_steps(T, T / 512 if dt is None else dt)
    out = np.empty(n_paths)
    floor_hits = 0
    for idx, start, stop in _chunk_ranges(n_paths):
        eng = _Euler(model, state, stop - start)
        grng = _substream(seed, *seed_key, idx, 0)
        if mirror:
            grng = _Mirror(grng)
        jrng = _substream(seed, *seed_key, idx, 1)
        for _ in range(n_steps):
            eng.step(h, grng, jrng)
        out[start:stop] = eng.x - state.x
        floor_hits += eng.floor_hits
    if floor_hits > max_floor_frac * n_steps * n_paths:
        raise UnstableScheme(
            f"sigma floor hit fraction {floor_hits / (n_steps * n_paths):.3f} "
            f"exceeds {max_floor_frac}")
    return out


def conditional_cf_mc(model: Model, state: ModelState, T: float,
                      u_grid: Sequence[float], n_paths: int,
                      dt: Optional[float] = None, seed: int = 0,
                      seed_key: Sequence[int] = (), antithetic: bool = False,
                      max_floor_frac: float = 0.25) -> CFGrid:
    """Estimate L_{t,T}(u) = E[exp(i u_T (x_{t+T} - x_t))] from state.

    The frequency is normalized by sqrt(T) inside, so u_grid carries raw
    frequencies.  With antithetic=True (continuous models only) paths are
    simulated in mirrored Gaussian pairs and the stderr is computed across
    pair means.
    """
    if n_paths < 2:
        raise OutOfRange("n_paths must be at least 2")
    u = np.asarray(list(u_grid), dtype=float)
    if np.any(u == 0.0):
        raise OutOfRange("frequency grid must avoid u = 0")
    if antithetic:
        if model.jumps is not None:
            raise InvalidSpec("antithetic pairing implemented for continuous "
                              "models only")
        if n_paths % 2:
            raise OutOfRange("antithetic pairing needs an even n_paths")
    w = u / math.sqrt(T)
    values = np.empty(len(u), dtype=complex)
    var = np.empty(len(u))
    if antithetic:
        half = n_paths // 2
        dxp = terminal_increments(model, state, T, half, dt, seed, seed_key,
                                  max_floor_frac)
        dxm = terminal_increments(model, state, T, half, dt, seed, seed_key,
                                  max_floor_frac, mirror=True)
        for j, wj in enumerate(w):
            pair = 0.5 * (np.exp(1j * wj * dxp) + np.exp(1j * wj * dxm))
            values[j] = pair.mean()
            var[j] = (np.abs(pair) ** 2).mean() - abs(values[j]) ** 2
        n_eff = half
    else:
        dx = terminal_increments(model, state, T, n_paths, dt, seed, seed_key,
                                 max_floor_frac)
        for j, wj in enumerate(w):
            values[j] = np.exp(1j * wj * dx).mean()
            var[j] = 1.0 - abs(values[j]) ** 2
        n_eff = n_paths
    stderr = np.sqrt(np.maximum(var, 0.0) / n_eff)
    return CFGrid(u=u, T=T, values=values, stderr=stderr,
                  n_paths=n_paths, source="mc")


def increment_cf_mc(model: Model, base_path: Path, grid: HFGrid,
                    u_grid: Sequence[float], n_paths: int, seed: int = 0,
                    dt: Optional[float] = None,
                    include_second_tenor: bool = False,
                    max_floor_frac: float = 0.25) -> List[Dict[str, CFGrid]]:
    """Nested-MC CF estimates for each grid increment i = 1..i_max.

    Per increment the pair of estimates is conditioned on the frozen path
    states at the two nodes and shares common random numbers (same substream
    key and dt for both legs), so their difference has far lower variance
    than independent runs.  With include_second_tenor the tau-scaled tenor
    legs are added under keys "prev2"/"curr2", CRN-paired the same way.
    """
    lo = grid.t_node(grid.i_max)
    if base_path.times[0] > lo + 1e-12 or base_path.times[-1] < grid.t - 1e-12:
        raise GridError("base path does not cover the observation window")
    step_dt = grid.T / 512 if dt is None else dt
    rows: List[Dict[str, CFGrid]] = []
    for i in range(1, grid.i_max + 1):
        s_prev = frozen_state(model, base_path, grid.t_node(i - 1))
        s_curr = frozen_state(model, base_path, grid.t_node(i))
        row = {
            "prev": conditional_cf_mc(model, s_prev, grid.tenor(i - 1), u_grid,
                                      n_paths, step_dt, seed, (i, 0),
                                      max_floor_frac=max_floor_frac),
            "curr": conditional_cf_mc(model, s_curr, grid.tenor(i), u_grid,
                                      n_paths, step_dt, seed, (i, 0),
                                      max_floor_frac=max_floor_frac),
        }
        if include_second_tenor:
            row["prev2"] = conditional_cf_mc(model, s_prev, grid.tenor2(i - 1),
                                             u_grid, n_paths, step_dt, seed,
                                             (i, 0),
                                             max_floor_frac=max_floor_frac)
            row["curr2"] = conditional_cf_mc(model, s_curr, grid.tenor2(i),
                                             u_grid, n_paths, step_dt, seed,
                                             (i, 0),
                                             max_floor_frac=max_floor_frac)
        rows.append(row)
    return rows
