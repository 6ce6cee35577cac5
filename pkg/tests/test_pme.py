from __future__ import annotations

import math

import numpy as np
import pytest

from pmelab import elliptic, pme
from pmelab.errors import (ConfigError, LevelNotFoundError, PmelabError,
                           SupportBoundaryError)
from pmelab.numerics import rk4_path
from pmelab.reaction import bistable_quadratic

from _oracles import barenblatt, discrete_equilibrium

MODEL = bistable_quadratic(0.25)


def step_profile(left, right, height=1.0):
    return lambda xs: np.where((xs > left) & (xs < right), height, 0.0)


def make_state(n=256, m=8.0, span=(-4.0, 12.0), length=6.0):
    grid = pme.Grid1D(*span, n)
    return pme.init_from_pressure(grid, step_profile(0.0, length), m)


def test_grid_invariants():
    with pytest.raises(ConfigError):
        pme.Grid1D(0.0, 1.0, 4)
    with pytest.raises(ConfigError):
        pme.Grid1D(1.0, 0.0, 64)
    grid = pme.Grid1D(0.0, 1.0, 64)
    centers = grid.centers()
    assert centers[0] == pytest.approx(grid.dx / 2)
    assert centers.size == 64


def test_init_zero_pressure_gives_zero_density():
    grid = pme.Grid1D(-1.0, 1.0, 32)
    state = pme.init_from_pressure(grid, lambda xs: np.zeros_like(xs), 4.0)
    assert np.all(state.rho == 0.0)
    assert pme.mass(state) == 0.0
    assert pme.front_position(state) == -math.inf


def test_init_step_inversion_m2():
    grid = pme.Grid1D(-2.0, 8.0, 200)
    state = pme.init_from_pressure(grid, step_profile(0.0, 4.0), 2.0)
    inside = (grid.centers() > 0.0) & (grid.centers() < 4.0)
    assert np.allclose(state.rho[inside], 0.5)      # ((m-1)/m) p = p/2 at m=2
    assert np.all(state.rho[~inside] == 0.0)


def test_init_step_density_approaches_indicator_at_large_m():
    grid = pme.Grid1D(-2.0, 8.0, 200)
    lo = pme.init_from_pressure(grid, step_profile(0.0, 4.0), 16.0)
    hi = pme.init_from_pressure(grid, step_profile(0.0, 4.0), 4096.0)
    inside = (grid.centers() > 0.0) & (grid.centers() < 4.0)
    assert np.max(np.abs(hi.rho[inside] - 1.0)) < 1e-3
    assert np.max(np.abs(hi.rho[inside] - 1.0)) < np.max(np.abs(lo.rho[inside] - 1.0))


def test_init_rejects_support_touching_boundary():
    grid = pme.Grid1D(0.0, 4.0, 64)
    with pytest.raises(ConfigError):
        pme.init_from_pressure(grid, lambda xs: np.ones_like(xs), 8.0)


def test_mass_conservation_without_reaction():
    state = make_state(m=2.0)
    config = pme.SolverConfig(model=None, t_end=0.5, pressure_ceiling=1.0)
    final = pme.run(state, config)[-1]
    assert abs(pme.mass(final) - pme.mass(state)) <= 1e-12 * pme.mass(state)


def test_uniform_carrying_pressure_interior_stationary():
    # f(p_max) = 0: away from the drained edges, the plateau does not move
    state = make_state(n=128, m=8.0)
    config = pme.SolverConfig(model=MODEL, t_end=0.0)
    advanced = state
    for _ in range(3):
        advanced = pme.step(advanced, config)
    inside = slice(40, 60)    # deep interior of the support
    assert np.array_equal(advanced.rho[inside], state.rho[inside])


def test_barenblatt_tracking():
    m, c0 = 2.0, 0.5
    grid = pme.Grid1D(-10.0, 10.0, 400)
    x = grid.centers()
    state = pme.State(grid=grid, rho=barenblatt(x, 1.0, m, c0), m=m, t=1.0)
    config = pme.SolverConfig(model=None, t_end=2.0,
                              pressure_ceiling=float(state.pressure().max()))
    final = pme.run(state, config)[-1]
    err = np.abs(final.rho - barenblatt(x, 2.0, m, c0)).sum() * grid.dx
    assert err < 5e-4


def test_run_t_end_zero_returns_initial():
    state = make_state(n=64)
    traj = pme.run(state, pme.SolverConfig(model=MODEL, t_end=0.0))
    assert len(traj) == 1
    assert np.array_equal(traj[0].rho, state.rho)
    assert traj[0].t == 0.0


def test_run_determinism_bitwise():
    state = make_state(n=128)
    config = pme.SolverConfig(model=MODEL, t_end=0.05, snapshot_times=(0.02,))
    t1 = pme.run(state, config)
    t2 = pme.run(state, config)
    assert len(t1) == len(t2) == 2
    for a, b in zip(t1, t2):
        assert np.array_equal(a.rho, b.rho) and a.t == b.t


def test_run_restart_matches_single_run():
    state = make_state(n=128)
    half = pme.run(state, pme.SolverConfig(model=MODEL, t_end=0.04))[-1]
    full = pme.run(half, pme.SolverConfig(model=MODEL, t_end=0.08))[-1]
    direct = pme.run(state, pme.SolverConfig(model=MODEL, t_end=0.08,
                                             snapshot_times=(0.04,)))[-1]
    assert np.array_equal(full.rho, direct.rho)
    assert full.t == direct.t


def test_run_snapshots_land_exactly():
    state = make_state(n=128)
    times = (0.01, 0.03)
    traj = pme.run(state, pme.SolverConfig(model=MODEL, t_end=0.05,
                                           snapshot_times=times))
    assert [s.t for s in traj] == [0.01, 0.03, 0.05]


def test_comparison_principle_seeded_pairs():
    rng = np.random.default_rng(42)
    grid = pme.Grid1D(-4.0, 10.0, 192)
    x = grid.centers()
    for _ in range(10):
        bumps = rng.uniform(0.2, 0.9, size=3)
        width = rng.uniform(2.0, 5.0)
        base = np.where((x > 0) & (x < width),
                        bumps[0] + bumps[1] * np.sin(np.pi * x / width) ** 2, 0.0)
        p_lo = np.minimum(base, MODEL.p_max)
        p_hi = np.minimum(p_lo + bumps[2] * np.where(p_lo > 0, 1.0, 0.0), MODEL.p_max)
        m = float(rng.choice([4.0, 8.0, 16.0]))
        lo = pme.init_from_pressure(grid, lambda _x: p_lo, m)
        hi = pme.init_from_pressure(grid, lambda _x: p_hi, m)
        config = pme.SolverConfig(model=MODEL, t_end=0.05)
        final_lo = pme.run(lo, config)[-1]
        final_hi = pme.run(hi, config)[-1]
        assert np.all(final_lo.rho <= final_hi.rho + 1e-12)


def test_maximum_principle_pressure_bounded():
    state = make_state(n=256, m=16.0)
    traj = pme.run(state, pme.SolverConfig(model=MODEL, t_end=0.2,
                                           snapshot_times=(0.05, 0.1, 0.15)))
    for snap in traj:
        assert float(snap.pressure().max()) <= MODEL.p_max + 1e-9


def test_mass_growth_bound():
    state = make_state(n=256, m=8.0, length=8.0)
    sup_rate = MODEL.sup_rate()
    traj = pme.run(state, pme.SolverConfig(model=MODEL, t_end=0.5,
                                           snapshot_times=(0.1, 0.25, 0.4)))
    m0 = pme.mass(traj[0])
    for snap in traj:
        assert pme.mass(snap) <= m0 * math.exp(sup_rate * snap.t) * (1.0 + 1e-6)


def test_clip_diagnostic_negligible():
    state = make_state(n=256, m=16.0)
    final = pme.run(state, pme.SolverConfig(model=MODEL, t_end=0.2))[-1]
    assert final.clipped_mass <= 1e-10 * pme.mass(final)


def test_positivity_after_clipping():
    state = make_state(n=256, m=32.0)
    final = pme.run(state, pme.SolverConfig(model=MODEL, t_end=0.05))[-1]
    assert float(final.rho.min()) >= 0.0


def test_grid_refinement_l1_contraction():
    # solutions at dx and dx/2 move closer by a factor >= 1.7
    diffs = {}
    for n in (128, 256, 512):
        grid = pme.Grid1D(-4.0, 12.0, n)
        state = pme.init_from_pressure(grid, step_profile(0.0, 6.0), 8.0)
        final = pme.run(state, pme.SolverConfig(model=MODEL, t_end=0.3))[-1]
        diffs[n] = final
    def l1_gap(coarse, fine):
        ratio = fine.rho.reshape(-1, 2).mean(axis=1)
        return float(np.abs(coarse.rho - ratio).sum()) * coarse.grid.dx
    gap_coarse = l1_gap(diffs[128], diffs[256])
    gap_fine = l1_gap(diffs[256], diffs[512])
    assert gap_coarse / gap_fine >= 1.7


def test_front_and_level_positions():
    state = make_state(n=256, m=8.0, length=6.0)
    front = pme.front_position(state, tol=1e-8)
    assert abs(front - 6.0) < 2 * state.grid.dx
    level = pme.level_position(state, 0.5 * float(state.rho.max()))
    assert 5.5 < level < 6.5
    with pytest.raises(LevelNotFoundError):
        pme.level_position(state, 2.0)
    with pytest.raises(LevelNotFoundError):
        pme.level_position(state, -1.0)


def test_level_position_interpolates():
    grid = pme.Grid1D(0.0, 10.0, 100)
    rho = np.clip(1.0 - grid.centers() / 8.0, 0.0, 1.0)
    rho[-1] = 0.0
    state = pme.State(grid=grid, rho=rho, m=2.0, t=0.0)
    x_half = pme.level_position(state, 0.5)
    assert abs(x_half - 4.0) < 1e-10


def test_level_position_rightmost_crossing():
    # two bumps: the crossing of the right bump wins
    grid = pme.Grid1D(0.0, 10.0, 200)
    x = grid.centers()
    rho = np.exp(-((x - 2.0) / 0.7) ** 2) + 0.8 * np.exp(-((x - 7.0) / 0.7) ** 2)
    rho[rho < 1e-6] = 0.0
    state = pme.State(grid=grid, rho=rho, m=2.0, t=0.0)
    assert pme.level_position(state, 0.4) > 7.0


def test_hele_shaw_residual_closed_form_at_init():
    for m in (16.0, 128.0):
        state = make_state(n=512, m=m, length=6.0)
        n_support = int(np.count_nonzero(state.rho))
        rho_plateau = ((m - 1.0) / m) ** (1.0 / (m - 1.0))
        expected = n_support * state.grid.dx * 1.0 * (1.0 - rho_plateau)
        assert pme.hele_shaw_residual(state) == pytest.approx(expected, rel=1e-12)
    assert pme.hele_shaw_residual(
        pme.State(pme.Grid1D(0, 1, 8), np.zeros(8), 2.0)) == 0.0


def test_hele_shaw_residual_decreases_with_m():
    vals = {}
    for m in (16.0, 128.0):
        state = make_state(n=256, m=m, length=6.0)
        traj = pme.run(state, pme.SolverConfig(
            model=MODEL, t_end=0.3, snapshot_times=(0.1, 0.2)))
        vals[m] = max(pme.hele_shaw_residual(s) for s in traj)
    assert vals[128.0] < vals[16.0]


def test_saturated_pressure_residual_consistency():
    # pressure sampled from the elliptic solution, rho saturated: the
    # residual of -p_xx = f(p) on interior saturated cells is O(dx^2)
    prof = elliptic.solve_bvp(MODEL, 9.0, n=512)[0]

    def rhs(_x, y):
        return np.array([y[1], -float(MODEL.rate(max(y[0], 0.0)))])

    xs_f, ys_f = rk4_path(rhs, 0.0, 4.5, np.array([0.0, prof.gamma]), 100000)

    def u_of(x):
        xm = np.where(x <= 4.5, x, 9.0 - x)
        return np.where((x > 0) & (x < 9.0),
                        np.interp(xm, xs_f, ys_f[:, 0]), 0.0)

    res = {}
    for n in (256, 512):
        grid = pme.Grid1D(-2.0, 11.0, n)
        state = pme.init_from_pressure(grid, lambda x: np.maximum(u_of(x), 0.0), 64.0)
        res[n] = pme.saturated_pressure_residual(state, MODEL, sat_tol=0.2)
        assert res[n] <= 0.1 * grid.dx ** 2
    assert 3.0 < res[256] / res[512] < 5.0


def test_saturated_pressure_residual_empty_set():
    state = make_state(n=64, m=2.0)      # plateau density 0.5, never saturated
    assert pme.saturated_pressure_residual(state, MODEL, sat_tol=1e-3) == 0.0


def test_monotone_pressure_for_discrete_equilibrium_data():
    grid = pme.Grid1D(-4.0, 13.0, 512)
    prof = elliptic.solve_bvp(MODEL, 9.0, n=512)[0]
    seed = pme.init_from_pressure(
        grid, lambda xs: np.interp(xs, prof.xs, prof.us, left=0.0, right=0.0), 32.0)
    state = discrete_equilibrium(MODEL, seed, tol=1e-11, max_iter=200)
    traj = pme.run(state, pme.SolverConfig(
        model=MODEL, t_end=0.3, snapshot_times=(0.1, 0.2)))
    assert pme.monotone_pressure_check(traj, MODEL)


def test_monotone_pressure_after_step_data_relaxation():
    # sharp step data first sheds its corners, then grows monotonically
    grid = pme.Grid1D(-4.0, 14.0, 256)
    state = pme.init_from_pressure(grid, step_profile(0.0, 9.0), 64.0)
    traj = pme.run(state, pme.SolverConfig(
        model=MODEL, t_end=1.0, snapshot_times=(0.4, 0.6, 0.8)))
    assert pme.monotone_pressure_check(traj[1:], MODEL)


def test_monotone_pressure_false_for_pure_diffusion():
    m, c0 = 2.0, 0.5
    grid = pme.Grid1D(-10.0, 10.0, 200)
    x = grid.centers()
    state = pme.State(grid=grid, rho=barenblatt(x, 1.0, m, c0), m=m, t=1.0)
    traj = pme.run(state, pme.SolverConfig(model=None, t_end=2.0,
                                           snapshot_times=(1.5,),
                                           pressure_ceiling=1.0))
    assert not pme.monotone_pressure_check(traj)


def test_run_aborts_when_support_reaches_boundary():
    grid = pme.Grid1D(-0.5, 6.5, 128)
    state = pme.init_from_pressure(grid, step_profile(0.0, 6.0), 8.0)
    with pytest.raises(SupportBoundaryError):
        pme.run(state, pme.SolverConfig(model=MODEL, t_end=5.0))


def test_blowup_guard_raises():
    # an unstable time step (forced through a bogus pressure ceiling) must
    # surface as an error, not silently produce garbage
    state = make_state(n=128, m=8.0)
    bad = pme.SolverConfig(model=None, t_end=5000.0, pressure_ceiling=1e-6)
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(PmelabError):
            pme.run(state, bad)


def test_solver_config_validation():
    with pytest.raises(ConfigError):
        pme.SolverConfig(model=MODEL, t_end=1.0, cfl=0.7)
    with pytest.raises(ConfigError):
        pme.SolverConfig(model=MODEL, t_end=-1.0)
    with pytest.raises(ConfigError):
        pme.SolverConfig(model=MODEL, t_end=1.0, snapshot_times=(0.5, 0.2))
    with pytest.raises(ConfigError):
        pme.SolverConfig(model=MODEL, t_end=1.0, snapshot_times=(2.0,))
    with pytest.raises(ConfigError):
        pme.SolverConfig(model=None, t_end=1.0)   # needs a pressure ceiling
