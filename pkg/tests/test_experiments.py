from __future__ import annotations

import math

import numpy as np
import pytest

from pmelab import elliptic, experiments, pme
from pmelab.errors import LevelNotFoundError, RegimeViolationError
from pmelab.reaction import bistable_quadratic

BISTABLE = bistable_quadratic(0.25)


def synthetic_trajectory(speed, n_snaps=11, t_end=2.0):
    grid = pme.Grid1D(-2.0, 10.0, 400)
    x = grid.centers()
    out = []
    for t in np.linspace(0.0, t_end, n_snaps):
        rho = np.clip(1.0 - (x - speed * t), 0.0, 1.0) * (x < 6.0 + speed * t)
        state = pme.State(grid=grid, rho=rho, m=2.0, t=float(t))
        out.append(state)
    return out


def test_front_speed_estimate_exact_translation():
    traj = synthetic_trajectory(1.0)
    speed, stderr = experiments.front_speed_estimate(traj, 0.5)
    assert abs(speed - 1.0) < 1e-6
    assert stderr < 1e-8


def test_front_speed_estimate_stationary():
    traj = synthetic_trajectory(0.0)
    speed, _ = experiments.front_speed_estimate(traj, 0.5)
    assert abs(speed) < 1e-10


def test_front_speed_estimate_level_never_crossed():
    traj = synthetic_trajectory(1.0)
    with pytest.raises(LevelNotFoundError):
        experiments.front_speed_estimate(traj, 5.0)


def test_sweep_incompressible_structure_and_trend():
    grid = pme.Grid1D(-6.0, 24.0, 384)
    report = experiments.sweep_incompressible(
        BISTABLE, [8.0, 16.0], grid, t_end=3.0, length=10.6)
    assert report.scenario == "sweep_incompressible"
    assert len(report.records) == 2
    for row in report.records:
        assert row["status"] == "ok"
        assert row["rel_gap"] < 0.05
    assert report.summary["residual_decreasing"]
    assert report.summary["limit_speed"] == pytest.approx(math.sqrt(1.0 / 12.0))


def test_sweep_serial_matches_threaded():
    grid = pme.Grid1D(-6.0, 24.0, 256)
    serial = experiments.sweep_incompressible(
        BISTABLE, [8.0, 16.0], grid, t_end=2.0, length=10.6, threads=1)
    threaded = experiments.sweep_incompressible(
        BISTABLE, [8.0, 16.0], grid, t_end=2.0, length=10.6, threads=2)
    assert serial.records == threaded.records
    assert serial.summary == threaded.summary


def test_sweep_rejects_unsorted_m_list():
    grid = pme.Grid1D(-6.0, 24.0, 256)
    with pytest.raises(ValueError):
        experiments.sweep_incompressible(BISTABLE, [16.0, 8.0], grid, 1.0)


def test_sweep_marks_failed_rows():
    # the domain is too tight for the larger exponent run to finish
    grid = pme.Grid1D(-1.0, 12.0, 256)
    report = experiments.sweep_incompressible(
        BISTABLE, [8.0], grid, t_end=8.0, length=10.6)
    assert report.records[0]["status"] == "failed"
    assert "error" in report.records[0]


def test_threshold_scan_bisects_invasion_boundary():
    l0 = 7.067887105342196
    grid = pme.Grid1D(-6.0, 16.0, 256)
    report = experiments.threshold_scan(
        BISTABLE, 32.0, [0.8 * l0, 1.5 * l0], horizon=6.0, grid=grid,
        bisect_steps=3)
    labels = [r["classification"] for r in report.records[:2]]
    assert labels[1] == "Invasion"
    assert labels[0] != "Invasion"
    assert report.summary["monotone"]
    est = report.summary["threshold_estimate"]
    assert est is not None
    assert 0.8 * l0 < est < 1.5 * l0


def test_invasion_front_speed_above_energy_bound():
    # an invading front must outrun half the normal-velocity bound set by
    # the peak of the stationary solution on the initial support
    length = 10.6
    grid = pme.Grid1D(-6.0, 24.0, 384)
    traj = experiments._step_data_run(BISTABLE, 32.0, grid, length, 4.0)
    speed, _ = experiments.front_speed_estimate(traj, 0.5)
    peak = max(p.peak for p in elliptic.solve_bvp(BISTABLE, length, n=128))
    bound = math.sqrt(2.0 * float(BISTABLE.potential(peak)))
    assert speed >= 0.5 * bound


def test_extinction_decay_requires_short_support():
    grid = pme.Grid1D(-3.0, 9.0, 128)
    with pytest.raises(ValueError):
        experiments.extinction_decay_check(BISTABLE, 16.0, 6.0, 1.0, grid)


def test_extinction_decay_monostable_mass_stagnates():
    model = bistable_quadratic(0.0)
    grid = pme.Grid1D(-2.0, 4.5, 192)
    dev = experiments.extinction_decay_check(model, 64.0, 2.0, 2.0, grid)
    assert dev < 0.05       # f(0) = 0: the mass stays within the band


def test_receding_fit_slope_and_quality():
    model = bistable_quadratic(0.4)
    report = experiments.receding_fit(model, [16.0, 32.0, 64.0, 128.0])
    assert all(r["c_star"] < 0.0 for r in report.records)
    assert report.summary["eta"] > 0.0
    assert report.summary["r2"] > 0.9
    assert len(report.summary["fit_exponents"]) == 3


def test_receding_fit_eta_stable_without_smallest():
    model = bistable_quadratic(0.4)
    full = experiments.receding_fit(model, [16.0, 32.0, 64.0, 128.0])
    trimmed = experiments.receding_fit(model, [32.0, 64.0, 96.0, 128.0])
    eta_a, eta_b = full.summary["eta"], trimmed.summary["eta"]
    assert abs(eta_a - eta_b) / eta_a < 0.2


def test_receding_fit_input_validation():
    model = bistable_quadratic(0.4)
    with pytest.raises(ValueError):
        experiments.receding_fit(model, [16.0, 32.0])
    with pytest.raises(RegimeViolationError):
        experiments.receding_fit(BISTABLE, [16.0, 32.0, 64.0, 128.0])


def test_report_reproducible_from_provenance():
    grid = pme.Grid1D(-6.0, 24.0, 256)
    first = experiments.sweep_incompressible(
        BISTABLE, [8.0], grid, t_end=2.0, length=10.6)
    prov = first.provenance
    again = experiments.sweep_incompressible(
        bistable_quadratic(prov["model"]["alpha"]),
        prov["m_list"],
        pme.Grid1D(*prov["grid"][:2], int(prov["grid"][2])),
        prov["t_end"], length=prov["length"], level=prov["level"])
    assert first.records == again.records
    assert first.summary == again.summary
