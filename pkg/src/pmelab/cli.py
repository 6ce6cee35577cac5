"""Command-line entry point.

    pmelab <command> --config CONFIG.json [--out DIR] [--threads N]

Commands: simulate | bvp | timemap | tw-shoot | tw-speed | tw-limit |
sweep-m | threshold | extinction | receding. Exit codes: 0 success,
2 config error, 3 numerical failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import elliptic, experiments, pme, waves
from .config import COMMANDS, Config, parse_config
from .errors import ConfigError, PmelabError
from .output import write_csv, write_report, write_rows_csv, write_snapshot


def _step_profile(scenario: dict):
    ip = scenario["initial_pressure"]
    left, right, height = ip["x_left"], ip["x_right"], ip["height"]
    return lambda xs: np.where((xs > left) & (xs < right), height, 0.0)


def _run_simulate(cfg: Config, out: Path, threads: int | None) -> None:
    state = pme.init_from_pressure(cfg.grid, _step_profile(cfg.scenario),
                                   cfg.scenario["m"])
    solver = pme.SolverConfig(model=cfg.reaction, t_end=cfg.solver["t_end"],
                              cfl=cfg.solver["cfl"],
                              snapshot_times=tuple(cfg.solver["snapshot_times"]),
                              support_tol=cfg.solver["support_tol"],
                              pressure_ceiling=cfg.solver["pressure_ceiling"])
    trajectory = pme.run(state, solver)
    for i, snap in enumerate(trajectory):
        write_snapshot(snap, out / f"snapshot_{i:04d}.csv")
    meta = {
        "m": cfg.scenario["m"],
        "alpha": cfg.reaction.alpha,
        "grid": [cfg.grid.x_min, cfg.grid.x_max, cfg.grid.n_cells],
        "cfl": cfg.solver["cfl"],
        "t_end": cfg.solver["t_end"],
        "times": [s.t for s in trajectory],
        "mass_series": [pme.mass(s) for s in trajectory],
        "front_series": [pme.front_position(s, cfg.solver["support_tol"])
                         for s in trajectory],
        "hs_residual_series": [pme.hele_shaw_residual(s) for s in trajectory],
        "clipped_mass": trajectory[-1].clipped_mass,
        "provenance": cfg.echo,
    }
    write_report(meta, out / "metadata.json")


def _elliptic_summary(cfg: Config) -> dict:
    model = cfg.reaction
    crit = model.critical_lengths()
    summary = {"l_star": crit.l_star, "L_c": None, "l0": None, "gamma_min": None}
    if float(model.potential(model.p_max)) > 0.0:
        found = elliptic.find_l0(model)
        summary["l0"] = found.l0
        summary["gamma_min"] = found.gamma_min
        if not model.monostable:
            summary["L_c"] = elliptic.periodic_length(model)
    return summary


def _run_timemap(cfg: Config, out: Path, threads: int | None) -> None:
    model = cfg.reaction
    fractions = cfg.scenario["gamma_fractions"]
    if fractions is None:
        gammas = elliptic._gamma_grid(model, cfg.scenario["count"])
    else:
        gammas = np.asarray(fractions) * math.sqrt(2.0 * float(model.potential(model.p_max)))
    rows = []
    for g in gammas:
        try:
            s = elliptic.time_map(model, float(g))
            rows.append((s.gamma, s.s0, s.length))
        except PmelabError:
            continue
    cols = list(zip(*rows)) if rows else ([], [], [])
    write_csv(out / "timemap.csv", ("gamma", "s0", "L"), cols)
    summary = _elliptic_summary(cfg)
    summary["provenance"] = cfg.echo
    write_report(summary, out / "summary.json")


def _run_bvp(cfg: Config, out: Path, threads: int | None) -> None:
    profiles = elliptic.solve_bvp(cfg.reaction, cfg.scenario["length"],
                                  n=cfg.scenario["n"])
    for i, prof in enumerate(profiles):
        write_csv(out / f"profile_{i:02d}.csv", ("x", "u"), (prof.xs, prof.us))
    summary = _elliptic_summary(cfg)
    summary.update({
        "length": cfg.scenario["length"],
        "solution_count": len(profiles),
        "gammas": [p.gamma for p in profiles],
        "peaks": [p.peak for p in profiles],
        "tangential": [p.tangential for p in profiles],
        "provenance": cfg.echo,
    })
    write_report(summary, out / "summary.json")


def _run_tw_shoot(cfg: Config, out: Path, threads: int | None) -> None:
    scenario = cfg.scenario
    outcome = waves.shoot_q(cfg.reaction, scenario["m"], scenario["c"],
                            eps=scenario["eps"], keep_trace=scenario["trace"])
    report = {"m": scenario["m"], "c": scenario["c"],
              "kind": type(outcome).__name__, "provenance": cfg.echo}
    if isinstance(outcome, waves.ReachedOrigin):
        report["q0"] = outcome.q0
    else:
        report["p_star"] = outcome.p_star
    if scenario["trace"] and outcome.trace is not None:
        write_csv(out / "trace.csv", ("p", "q"),
                  (outcome.trace[:, 0], outcome.trace[:, 1]))
    write_report(report, out / "shoot.json")


def _run_tw_speed(cfg: Config, out: Path, threads: int | None) -> None:
    m = cfg.scenario["m"]
    eps = cfg.scenario["eps"]
    c_star = waves.wave_speed_m(cfg.reaction, m, eps=eps)
    eps_val = eps if eps is not None else waves.EPS_FRACTION * cfg.reaction.p_max
    c_half = waves.wave_speed_m(cfg.reaction, m, eps=0.5 * eps_val)
    sharp = True
    if c_star > 0:
        outcome = waves.shoot_q(cfg.reaction, m, c_star, eps=eps)
        sharp = (isinstance(outcome, waves.ReachedOrigin)
                 and abs(outcome.q0 - c_star) <= 1e-3 * max(1.0, abs(c_star)))
    report = {"m": m, "c_star": c_star, "sharp_front": sharp,
              "eps_robust": abs(c_half - c_star) <= 1e-6 * max(1.0, abs(c_star)),
              "provenance": cfg.echo}
    write_report(report, out / "speed.json")


def _run_tw_limit(cfg: Config, out: Path, threads: int | None) -> None:
    prof = waves.limit_profile_h(cfg.reaction, cfg.scenario["x_extent"],
                                 n_steps=cfg.scenario["n_steps"])
    write_csv(out / "profile.csv", ("x", "p"), (prof.xs, prof.ps))
    write_report({"speed": prof.speed, "sharp_front": prof.sharp_front,
                  "provenance": cfg.echo}, out / "summary.json")


def _run_sweep(cfg: Config, out: Path, threads: int | None) -> None:
    report = experiments.sweep_incompressible(
        cfg.reaction, cfg.scenario["m_list"], cfg.grid, cfg.scenario["t_end"],
        length=cfg.scenario["length"], level=cfg.scenario["level"], threads=threads)
    report.provenance["config"] = cfg.echo
    write_report(report, out / "report.json")
    write_rows_csv(out / "report.csv", report.records)


def _run_threshold(cfg: Config, out: Path, threads: int | None) -> None:
    report = experiments.threshold_scan(
        cfg.reaction, cfg.scenario["m"], cfg.scenario["l_list"],
        cfg.scenario["horizon"], cfg.grid, threads=threads,
        bisect_steps=cfg.scenario["bisect_steps"])
    report.provenance["config"] = cfg.echo
    write_report(report, out / "report.json")
    write_rows_csv(out / "report.csv", report.records)


def _run_extinction(cfg: Config, out: Path, threads: int | None) -> None:
    deviation = experiments.extinction_decay_check(
        cfg.reaction, cfg.scenario["m"], cfg.scenario["length"],
        cfg.scenario["horizon"], cfg.grid, n_snapshots=cfg.scenario["n_snapshots"])
    write_report({"max_relative_mass_deviation": deviation, "provenance": cfg.echo},
                 out / "report.json")


def _run_receding(cfg: Config, out: Path, threads: int | None) -> None:
    report = experiments.receding_fit(cfg.reaction, cfg.scenario["m_list"],
                                      threads=threads)
    report.provenance["config"] = cfg.echo
    write_report(report, out / "report.json")
    write_rows_csv(out / "report.csv", report.records)


_HANDLERS = {
    "simulate": _run_simulate,
    "bvp": _run_bvp,
    "timemap": _run_timemap,
    "tw-shoot": _run_tw_shoot,
    "tw-speed": _run_tw_speed,
    "tw-limit": _run_tw_limit,
    "sweep-m": _run_sweep,
    "threshold": _run_threshold,
    "extinction": _run_extinction,
    "receding": _run_receding,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="pmelab", description=__doc__)
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="path to the JSON config")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--threads", type=int, default=os.cpu_count(),
                        help="worker pool size for experiment scans")
    args = parser.parse_args(argv)

    try:
        cfg = parse_config(args.config, args.command)
        out = Path(cfg.echo.get("output_dir") or args.out)
        out.mkdir(parents=True, exist_ok=True)
        _HANDLERS[args.command](cfg, out, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (PmelabError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
