"""Persistence of snapshots, profiles, and reports.

CSV values carry 15 significant digits with LF line endings; JSON reports
use sorted keys. Both are byte-stable across repeated runs.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .pme import State


def _fmt(value: float) -> str:
    return f"{value:.15g}"


def write_csv(path: str | Path, header: Sequence[str], columns: Sequence) -> None:
    """Columns of equal length; header-only file when columns are empty."""
    cols = [np.asarray(c, dtype=float) for c in columns]
    lines = [",".join(header)]
    n_rows = cols[0].size if cols else 0
    for i in range(n_rows):
        lines.append(",".join(_fmt(float(c[i])) for c in cols))
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("ascii"))


def read_csv(path: str | Path) -> dict[str, np.ndarray]:
    text = Path(path).read_text()
    lines = [ln for ln in text.split("\n") if ln]
    names = lines[0].split(",")
    rows = [ln.split(",") for ln in lines[1:]]
    return {name: np.array([float(r[j]) for r in rows])
            for j, name in enumerate(names)}


def write_snapshot(state: State, path: str | Path) -> None:
    write_csv(path, ("x", "rho", "p"),
              (state.grid.centers(), state.rho, state.pressure()))


def read_snapshot(path: str | Path) -> dict[str, np.ndarray]:
    return read_csv(path)


def write_report(report, path: str | Path) -> None:
    """JSON with stable key order; accepts dicts or objects with as_dict()."""
    obj = report.as_dict() if hasattr(report, "as_dict") else report
    Path(path).write_bytes(
        (json.dumps(obj, sort_keys=True, indent=2) + "\n").encode("ascii"))


def read_report(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


def write_rows_csv(path: str | Path, rows: Sequence[dict]) -> None:
    """Flat one-row-per-run CSV for external plotting; columns sorted by name."""
    keys = sorted({k for row in rows for k in row})
    lines = [",".join(keys)]
    for row in rows:
        cells = []
        for k in keys:
            v = row.get(k, "")
            if isinstance(v, float):
                cells.append(_fmt(v))
            elif isinstance(v, (list, tuple)):
                cells.append(";".join(str(x) for x in v))
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    Path(path).write_bytes(("\n".join(lines) + "\n").encode("ascii"))
