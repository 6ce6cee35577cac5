"""Multi-run studies: stiff-exponent sweeps, invasion thresholds, extinction
decay, and recession-rate fits.

Every experiment returns an ExperimentReport whose records carry one row per
run with full (m, grid, cfl) provenance; re-running from the echoed
provenance reproduces the report bit for bit. Rows are independent, so scans
map over a worker pool, with results assembled in input order.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import elliptic, pme, waves
from .errors import LevelNotFoundError, PmelabError, RegimeViolationError
from .reaction import ReactionModel

BURN_IN_FRACTION = 0.3
DEFAULT_LEVEL = 0.5
INVASION_SPEED_SLACK = 0.25
INVASION_MASS_FACTOR = 1.2
EXTINCTION_MASS_SLACK = 1.05
STAGNATION_BAND = 0.05


@dataclass
class ExperimentReport:
    scenario: str
    model: dict
    records: list[dict]
    summary: dict
    provenance: dict

    def as_dict(self) -> dict:
        return {"scenario": self.scenario, "model": self.model,
                "records": self.records, "summary": self.summary,
                "provenance": self.provenance}


def _pmap(fn: Callable, items: Sequence, threads: int | None) -> list:
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _model_descriptor(model: ReactionModel) -> dict:
    return {"kind": model.kind, "alpha": model.alpha, "p_max": model.p_max,
            "coeffs": list(model.coeffs)}


def front_speed_estimate(trajectory: list, level: float,
                         burn_in: float = BURN_IN_FRACTION) -> tuple[float, float]:
    """Least-squares front speed from the level-crossing position series.

    Discards the first `burn_in` fraction of the time span (relaxation to
    the traveling profile), then fits a line through (t, position). Returns
    (speed, residual standard error).
    """
    if len(trajectory) < 2:
        raise ValueError("need a trajectory with at least two snapshots")
    t0, t1 = trajectory[0].t, trajectory[-1].t
    cut = t0 + burn_in * (t1 - t0)
    ts, xs = [], []
    for snap in trajectory:
        if snap.t < cut:
            continue
        try:
            xs.append(pme.level_position(snap, level))
            ts.append(snap.t)
        except LevelNotFoundError:
            continue
    if len(ts) < 5:
        raise LevelNotFoundError(
            f"level {level} crossed in only {len(ts)} snapshots after burn-in")
    t_arr = np.asarray(ts)
    x_arr = np.asarray(xs)
    slope, intercept = np.polyfit(t_arr, x_arr, 1)
    resid = x_arr - (slope * t_arr + intercept)
    dof = max(len(ts) - 2, 1)
    stderr = math.sqrt(float(resid @ resid) / dof)
    return float(slope), stderr


def _step_data_run(model: ReactionModel, m: float, grid: pme.Grid1D, length: float,
                   t_end: float, n_snapshots: int = 41, cfl: float = 0.4) -> list:
    p_in = lambda xs: np.where((xs > 0.0) & (xs < length), model.p_max, 0.0)
    state = pme.init_from_pressure(grid, p_in, m)
    times = tuple(np.linspace(0.0, t_end, n_snapshots)[1:-1])
    config = pme.SolverConfig(model=model, t_end=t_end, cfl=cfl, snapshot_times=times)
    return pme.run(state, config)


def sweep_incompressible(model: ReactionModel, m_list: Sequence[float],
                         grid: pme.Grid1D, t_end: float,
                         length: float | None = None,
                         level: float = DEFAULT_LEVEL,
                         threads: int | None = None) -> ExperimentReport:
    """Per-exponent comparison of shooting speed, PDE front speed, and the
    saturation residual, against the stiff-limit speed."""
    if list(m_list) != sorted(m_list) or any(m <= 1 for m in m_list):
        raise ValueError("m_list must be ascending with every entry > 1")
    c_limit = model.limit_wave_speed()
    if length is None:
        length = 1.5 * elliptic.find_l0(model).l0

    def one(m: float) -> dict:
        row = {"m": m, "grid": [grid.x_min, grid.x_max, grid.n_cells], "cfl": 0.4,
               "status": "ok"}
        try:
            row["c_shooting"] = waves.wave_speed_m(model, m)
            traj = _step_data_run(model, m, grid, length, t_end)
            speed, stderr = front_speed_estimate(traj, level)
            row["c_pde"] = speed
            row["c_pde_stderr"] = stderr
            row["rel_gap"] = abs(row["c_shooting"] - speed) / abs(row["c_shooting"])
            row["hs_residual_max"] = max(pme.hele_shaw_residual(s) for s in traj)
        except PmelabError as exc:
            row["status"] = "failed"
            row["error"] = str(exc)
        return row

    records = _pmap(one, list(m_list), threads)
    ok = [r for r in records if r["status"] == "ok"]
    residuals = [r["hs_residual_max"] for r in ok]
    summary = {
        "limit_speed": c_limit,
        "speeds_shooting": [r.get("c_shooting") for r in records],
        "speeds_pde": [r.get("c_pde") for r in records],
        "residual_decreasing": all(b < a for a, b in zip(residuals, residuals[1:])),
        "final_speed": ok[-1]["c_shooting"] if ok else None,
    }
    provenance = {"model": _model_descriptor(model), "m_list": list(m_list),
                  "grid": [grid.x_min, grid.x_max, grid.n_cells],
                  "t_end": t_end, "length": length, "level": level}
    return ExperimentReport("sweep_incompressible", _model_descriptor(model),
                            records, summary, provenance)


def classify_run(model: ReactionModel, m: float, grid: pme.Grid1D, length: float,
                 horizon: float) -> dict:
    """One threshold-scan row: Invasion / Extinction / Undecided."""
    traj = _step_data_run(model, m, grid, length, horizon, n_snapshots=11)
    final = traj[-1]
    mass0 = pme.mass(traj[0])
    mass1 = pme.mass(final)
    front = pme.front_position(final, tol=1e-8)
    c_limit = model.limit_wave_speed()
    front_needed = length + 2.0 * c_limit * horizon * INVASION_SPEED_SLACK

    if front > front_needed and mass1 > INVASION_MASS_FACTOR * mass0:
        label = "Invasion"
    elif model.monostable:
        label = "Extinction" if abs(mass1 - mass0) <= STAGNATION_BAND * mass0 else "Undecided"
    else:
        decay = mass0 * math.exp(float(model.rate(0.0)) * horizon)
        label = "Extinction" if mass1 <= decay * EXTINCTION_MASS_SLACK else "Undecided"
    return {"m": m, "L": length, "grid": [grid.x_min, grid.x_max, grid.n_cells],
            "cfl": 0.4, "status": "ok", "classification": label,
            "mass0": mass0, "mass_final": mass1, "front_final": front}


def threshold_scan(model: ReactionModel, m: float, l_list: Sequence[float],
                   horizon: float, grid: pme.Grid1D,
                   threads: int | None = None,
                   bisect_steps: int = 5) -> ExperimentReport:
    """Scan support lengths for the invasion/extinction dichotomy.

    After the scan, the empirical threshold is refined by bisecting the
    invasion boundary: the largest non-invading length (Extinction or
    Undecided) below the smallest invading one bounds it from below.
    """
    records = _pmap(lambda L: classify_run(model, m, grid, L, horizon),
                    list(l_list), threads)

    # monotone in L: no invasion below an extinction, whatever the scan order
    monotone = True
    seen_invasion = False
    for row in sorted(records, key=lambda r: r["L"]):
        if row["classification"] == "Invasion":
            seen_invasion = True
        elif row["classification"] == "Extinction" and seen_invasion:
            monotone = False

    inv = [r["L"] for r in records if r["classification"] == "Invasion"]
    below = [r["L"] for r in records
             if r["classification"] != "Invasion" and (not inv or r["L"] < min(inv))]
    threshold = None
    bisect_records: list[dict] = []
    if below and inv and monotone:
        # refine the invasion boundary; non-invading rows (Extinction or
        # Undecided) bound it from below
        lo, hi = max(below), min(inv)
        for _ in range(bisect_steps):
            mid = 0.5 * (lo + hi)
            row = classify_run(model, m, grid, mid, horizon)
            bisect_records.append(row)
            if row["classification"] == "Invasion":
                hi = mid
            else:
                lo = mid
        threshold = 0.5 * (lo + hi)

    l0 = elliptic.find_l0(model).l0 if float(model.potential(model.p_max)) > 0 else None
    summary = {"threshold_estimate": threshold, "monotone": monotone,
               "limit_threshold_l0": l0,
               "inconclusive": threshold is None,
               "relative_gap_to_l0": (abs(threshold - l0) / l0
                                      if threshold is not None and l0 else None)}
    provenance = {"model": _model_descriptor(model), "m": m,
                  "l_list": list(l_list), "horizon": horizon,
                  "grid": [grid.x_min, grid.x_max, grid.n_cells],
                  "bisect_steps": bisect_steps}
    return ExperimentReport("threshold_scan", _model_descriptor(model),
                            records + bisect_records, summary, provenance)


def extinction_decay_check(model: ReactionModel, m: float, length: float,
                           horizon: float, grid: pme.Grid1D,
                           n_snapshots: int = 21) -> float:
    """Max relative deviation of the mass from exp(f(0) t) decay."""
    crit = model.critical_lengths()
    if length >= 0.9 * crit.l_star:
        raise ValueError(
            f"length {length} not below 0.9 * l_star = {0.9 * crit.l_star:.6g}")
    traj = _step_data_run(model, m, grid, length, horizon, n_snapshots=n_snapshots)
    mass0 = pme.mass(traj[0])
    rate0 = float(model.rate(0.0))
    worst = 0.0
    for snap in traj:
        expected = mass0 * math.exp(rate0 * snap.t)
        worst = max(worst, abs(pme.mass(snap) - expected) / mass0)
    return worst


def receding_fit(model: ReactionModel, m_list: Sequence[float],
                 threads: int | None = None) -> ExperimentReport:
    """Least-squares slope of the receding speeds over the largest exponents.

    Uses the largest max(ceil(n/2), 3) entries so the fit quality statistic
    is meaningful. All speeds must be negative in this regime.
    """
    if len(m_list) < 4 or max(m_list) < 64:
        raise ValueError("need at least 4 exponents with max >= 64")
    if float(model.potential(model.p_max)) >= 0.0:
        raise RegimeViolationError("rate integral must be negative for a receding fit")

    ms = sorted(m_list)
    speeds = _pmap(lambda m: waves.wave_speed_m(model, m), ms, threads)
    records = [{"m": m, "c_star": c, "grid": None, "cfl": None, "status": "ok"}
               for m, c in zip(ms, speeds)]
    for c in speeds:
        if c >= 0.0:
            raise RegimeViolationError(f"non-negative speed {c} in the receding regime")

    k = min(len(ms), max(-(-len(ms) // 2), 3))
    m_fit = np.asarray(ms[-k:], dtype=float)
    c_fit = np.asarray(speeds[-k:])
    slope, intercept = np.polyfit(m_fit, c_fit, 1)
    pred = slope * m_fit + intercept
    ss_res = float(np.sum((c_fit - pred) ** 2))
    ss_tot = float(np.sum((c_fit - np.mean(c_fit)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0

    summary = {"eta": -float(slope), "intercept": float(intercept), "r2": r2,
               "fit_exponents": [float(v) for v in m_fit]}
    provenance = {"model": _model_descriptor(model), "m_list": list(m_list)}
    return ExperimentReport("receding_fit", _model_descriptor(model),
                            records, summary, provenance)
