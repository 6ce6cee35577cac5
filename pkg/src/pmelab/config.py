"""Config-file parsing and validation for the command-line entry point.

One JSON document per invocation, no prompts. Every numeric field is
checked against the preconditions of the module that will consume it, with
field-path diagnostics; unknown keys are rejected with a suggestion.
Defaults are filled in and echoed back so a run can be reproduced from its
own provenance record.
"""

from __future__ import annotations

import difflib
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError
from .pme import Grid1D
from .reaction import ReactionModel, reaction_from_config

SOLVER_DEFAULTS = {"cfl": 0.4, "snapshot_times": [], "support_tol": 1e-8,
                   "boundary": "zero_density", "pressure_ceiling": None}

COMMANDS = ("simulate", "bvp", "timemap", "tw-shoot", "tw-speed", "tw-limit",
            "sweep-m", "threshold", "extinction", "receding")

_NEEDS_GRID = {"simulate", "sweep-m", "threshold", "extinction"}

_SCENARIO_FIELDS = {
    "simulate": {"m": None, "initial_pressure": None},
    "bvp": {"length": None, "n": 512},
    "timemap": {"count": 200, "gamma_fractions": None},
    "tw-shoot": {"m": None, "c": None, "eps": None, "trace": False},
    "tw-speed": {"m": None, "eps": None},
    "tw-limit": {"x_extent": 40.0, "n_steps": 10000},
    "sweep-m": {"m_list": None, "t_end": None, "length": None, "level": 0.5},
    "threshold": {"m": None, "l_list": None, "horizon": None, "bisect_steps": 5},
    "extinction": {"m": None, "length": None, "horizon": None, "n_snapshots": 21},
    "receding": {"m_list": None},
}


@dataclass
class Config:
    command: str
    reaction: ReactionModel
    grid: Grid1D | None
    solver: dict
    scenario: dict
    echo: dict        # effective config with defaults applied


def _reject_unknown(section: dict, allowed, path: str) -> None:
    for key in section:
        if key not in allowed:
            hint = difflib.get_close_matches(key, list(allowed), n=1)
            suffix = f" (did you mean '{hint[0]}'?)" if hint else ""
            raise ConfigError(f"{path}.{key}: unknown key{suffix}")


def _require(section: dict, key: str, path: str):
    if key not in section or section[key] is None:
        raise ConfigError(f"{path}.{key}: required")
    return section[key]


def _number(value, path: str, lo=None, hi=None, lo_open=False, hi_open=False) -> float:
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    v = float(value)
    if lo is not None and (v <= lo if lo_open else v < lo):
        raise ConfigError(f"{path}: must be {'>' if lo_open else '>='} {lo}, got {v}")
    if hi is not None and (v >= hi if hi_open else v > hi):
        raise ConfigError(f"{path}: must be {'<' if hi_open else '<='} {hi}, got {v}")
    return v


def _number_list(value, path: str, min_len: int = 1) -> list[float]:
    if not isinstance(value, list) or len(value) < min_len:
        raise ConfigError(f"{path}: expected a list of at least {min_len} numbers")
    return [_number(v, f"{path}[{i}]") for i, v in enumerate(value)]


def _parse_grid(doc: dict) -> Grid1D:
    section = doc.get("grid")
    if not isinstance(section, dict):
        raise ConfigError("grid: required mapping with x_min, x_max, n_cells")
    _reject_unknown(section, ("x_min", "x_max", "n_cells"), "grid")
    x_min = _number(_require(section, "x_min", "grid"), "grid.x_min")
    x_max = _number(_require(section, "x_max", "grid"), "grid.x_max")
    n = _require(section, "n_cells", "grid")
    if not isinstance(n, int) or n < 8:
        raise ConfigError(f"grid.n_cells: expected an integer >= 8, got {n!r}")
    if x_max <= x_min:
        raise ConfigError("grid.x_max: must exceed grid.x_min")
    return Grid1D(x_min, x_max, n)


def _parse_solver(doc: dict, command: str) -> dict:
    section = dict(doc.get("solver", {}))
    allowed = tuple(SOLVER_DEFAULTS) + ("t_end",)
    _reject_unknown(section, allowed, "solver")
    out = dict(SOLVER_DEFAULTS)
    out.update(section)
    out["cfl"] = _number(out["cfl"], "solver.cfl", lo=0.0, hi=0.5, lo_open=True)
    out["support_tol"] = _number(out["support_tol"], "solver.support_tol", lo=0.0, lo_open=True)
    if out["boundary"] != "zero_density":
        raise ConfigError("solver.boundary: only 'zero_density' is supported")
    out["snapshot_times"] = _number_list(out["snapshot_times"], "solver.snapshot_times", 0) \
        if out["snapshot_times"] else []
    if out["snapshot_times"] != sorted(out["snapshot_times"]):
        raise ConfigError("solver.snapshot_times: must be sorted ascending")
    if out["pressure_ceiling"] is not None:
        out["pressure_ceiling"] = _number(out["pressure_ceiling"],
                                          "solver.pressure_ceiling", lo=0.0, lo_open=True)
    if command == "simulate":
        out["t_end"] = _number(_require(section, "t_end", "solver"), "solver.t_end", lo=0.0)
        if out["snapshot_times"] and out["snapshot_times"][-1] > out["t_end"]:
            raise ConfigError("solver.snapshot_times: must not exceed t_end")
    return out


def _parse_scenario(doc: dict, command: str, model: ReactionModel) -> dict:
    fields = _SCENARIO_FIELDS[command]
    section = dict(doc.get("scenario", {}))
    _reject_unknown(section, tuple(fields), "scenario")
    out = {k: section.get(k, v) for k, v in fields.items()}

    def need(key):
        return _require(out, key, "scenario")

    if "m" in fields:
        out["m"] = _number(need("m"), "scenario.m", lo=1.0, lo_open=True)
    if command == "simulate":
        ip = need("initial_pressure")
        if not isinstance(ip, dict):
            raise ConfigError("scenario.initial_pressure: expected a mapping")
        _reject_unknown(ip, ("kind", "x_left", "x_right", "height"), "scenario.initial_pressure")
        if ip.get("kind") != "step":
            raise ConfigError("scenario.initial_pressure.kind: only 'step' is supported")
        left = _number(_require(ip, "x_left", "scenario.initial_pressure"),
                       "scenario.initial_pressure.x_left")
        right = _number(_require(ip, "x_right", "scenario.initial_pressure"),
                        "scenario.initial_pressure.x_right")
        if right <= left:
            raise ConfigError("scenario.initial_pressure.x_right: must exceed x_left")
        height = _number(ip.get("height", model.p_max), "scenario.initial_pressure.height",
                         lo=0.0, lo_open=True)
        if height > model.p_max:
            raise ConfigError("scenario.initial_pressure.height: must not exceed p_max")
        out["initial_pressure"] = {"kind": "step", "x_left": left, "x_right": right,
                                   "height": height}
    elif command == "bvp":
        out["length"] = _number(need("length"), "scenario.length", lo=0.0, lo_open=True)
        if not isinstance(out["n"], int) or out["n"] < 8:
            raise ConfigError(f"scenario.n: expected an integer >= 8, got {out['n']!r}")
    elif command == "timemap":
        if not isinstance(out["count"], int) or out["count"] < 2:
            raise ConfigError("scenario.count: expected an integer >= 2")
        if out["gamma_fractions"] is not None:
            fr = _number_list(out["gamma_fractions"], "scenario.gamma_fractions")
            for i, v in enumerate(fr):
                if not 0.0 < v < 1.0:
                    raise ConfigError(f"scenario.gamma_fractions[{i}]: must lie in (0, 1)")
            out["gamma_fractions"] = fr
    elif command == "tw-shoot":
        out["c"] = _number(need("c"), "scenario.c")
        if not isinstance(out["trace"], bool):
            raise ConfigError("scenario.trace: expected true or false")
    elif command == "tw-limit":
        out["x_extent"] = _number(out["x_extent"], "scenario.x_extent", lo=0.0, lo_open=True)
        if not isinstance(out["n_steps"], int) or out["n_steps"] < 100:
            raise ConfigError("scenario.n_steps: expected an integer >= 100")
    elif command in ("sweep-m", "receding"):
        ms = _number_list(need("m_list"), "scenario.m_list")
        if ms != sorted(ms) or any(m <= 1.0 for m in ms):
            raise ConfigError("scenario.m_list: must be ascending with entries > 1")
        out["m_list"] = ms
        if command == "sweep-m":
            out["t_end"] = _number(need("t_end"), "scenario.t_end", lo=0.0, lo_open=True)
            out["level"] = _number(out["level"], "scenario.level", lo=0.0, lo_open=True)
            if out["length"] is not None:
                out["length"] = _number(out["length"], "scenario.length", lo=0.0, lo_open=True)
    elif command == "threshold":
        out["l_list"] = _number_list(need("l_list"), "scenario.l_list")
        out["horizon"] = _number(need("horizon"), "scenario.horizon", lo=0.0, lo_open=True)
        if not isinstance(out["bisect_steps"], int) or out["bisect_steps"] < 0:
            raise ConfigError("scenario.bisect_steps: expected a non-negative integer")
    elif command == "extinction":
        out["length"] = _number(need("length"), "scenario.length", lo=0.0, lo_open=True)
        out["horizon"] = _number(need("horizon"), "scenario.horizon", lo=0.0, lo_open=True)
        if not isinstance(out["n_snapshots"], int) or out["n_snapshots"] < 3:
            raise ConfigError("scenario.n_snapshots: expected an integer >= 3")

    for key, default in fields.items():
        if default is None and key not in ("eps", "length", "gamma_fractions") and out.get(key) is None:
            raise ConfigError(f"scenario.{key}: required")
    return out


def parse_config(path: str | Path, command: str) -> Config:
    """Load, validate, and echo a config document for the given subcommand."""
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}")
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root: expected a mapping")

    top_allowed = ("reaction", "grid", "solver", "scenario", "output_dir")
    _reject_unknown(doc, top_allowed, "config")

    if "reaction" not in doc:
        raise ConfigError("reaction: required")
    model = reaction_from_config(doc["reaction"])

    grid = _parse_grid(doc) if command in _NEEDS_GRID or "grid" in doc else None
    solver = _parse_solver(doc, command)
    scenario = _parse_scenario(doc, command, model)

    echo = {"command": command,
            "reaction": dict(doc["reaction"]),
            "solver": {k: v for k, v in solver.items()},
            "scenario": {k: v for k, v in scenario.items()},
            "output_dir": doc.get("output_dir")}
    if grid is not None:
        echo["grid"] = {"x_min": grid.x_min, "x_max": grid.x_max, "n_cells": grid.n_cells}
    return Config(command=command, reaction=model, grid=grid, solver=solver,
                  scenario=scenario, echo=echo)
