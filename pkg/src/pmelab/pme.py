"""Conservative explicit finite-volume solver for degenerate reaction-diffusion.

The density rho on a uniform 1-D grid evolves by

    rho_t = (rho^m)_xx + rho * f(p),    p = m/(m-1) * rho^(m-1),

with zero density imposed in ghost cells and compact support kept strictly
inside the domain. The time step obeys

    dt = cfl * dx^2 / ((m-1) * P + dx * max|f| * P)

where P is the pressure ceiling: the diffusion coefficient of rho^m is
m rho^(m-1) = (m-1) p <= (m-1) P, so cfl <= 0.5 gives a monotone update.
Negative round-off values are clipped to zero and the clipped mass is
accumulated as a diagnostic, never silently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import (ConfigError, LevelNotFoundError, NumericalBlowupError,
                     SupportBoundaryError)
from .reaction import ReactionModel


@dataclass(frozen=True)
class Grid1D:
    x_min: float
    x_max: float
    n_cells: int

    def __post_init__(self):
        if self.n_cells < 8:
            raise ConfigError("grid.n_cells: need at least 8 cells")
        if not self.x_max > self.x_min:
            raise ConfigError("grid.x_max must exceed grid.x_min")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_cells

    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx


@dataclass
class State:
    grid: Grid1D
    rho: np.ndarray
    m: float
    t: float = 0.0
    clipped_mass: float = 0.0   # cumulative |negative round-off| removed, times dx

    def pressure(self) -> np.ndarray:
        return (self.m / (self.m - 1.0)) * _ipow(self.rho, self.m - 1.0)

    def copy(self) -> "State":
        return State(grid=self.grid, rho=self.rho.copy(), m=self.m, t=self.t,
                     clipped_mass=self.clipped_mass)


@dataclass(frozen=True)
class SolverConfig:
    model: ReactionModel | None
    t_end: float
    cfl: float = 0.4
    snapshot_times: tuple[float, ...] = ()
    support_tol: float = 1e-8
    boundary: str = "zero_density"
    pressure_ceiling: float | None = None   # required when model is None

    def __post_init__(self):
        if not 0.0 < self.cfl <= 0.5:
            raise ConfigError("solver.cfl: must lie in (0, 0.5]")
        if self.t_end < 0.0:
            raise ConfigError("solver.t_end: must be non-negative")
        if self.boundary != "zero_density":
            raise ConfigError("solver.boundary: only 'zero_density' is supported")
        if list(self.snapshot_times) != sorted(self.snapshot_times):
            raise ConfigError("solver.snapshot_times: must be sorted ascending")
        if self.snapshot_times and self.snapshot_times[-1] > self.t_end:
            raise ConfigError("solver.snapshot_times: must not exceed t_end")
        if self.model is None and self.pressure_ceiling is None:
            raise ConfigError("solver.pressure_ceiling: required when no reaction model is set")


Trajectory = list  # list[State], ordered by time


def _ipow(base: np.ndarray, expo: float, work: tuple[np.ndarray, np.ndarray] | None = None) -> np.ndarray:
    """base**expo with a binary-exponentiation fast path for integer expo.

    `work` supplies two scratch buffers (result, square) so the hot loop can
    run allocation-free; the arithmetic is identical either way.
    """
    n = int(expo)
    if n != expo or n < 1:
        return np.power(base, expo)
    if work is None:
        result_buf = np.empty_like(base)
        square_buf = np.empty_like(base)
    else:
        result_buf, square_buf = work
    result = None
    square = base
    while n:
        if n & 1:
            if result is None:
                np.copyto(result_buf, square)
                result = result_buf
            else:
                np.multiply(result, square, out=result)
        n >>= 1
        if n:
            if square is base:
                np.multiply(base, base, out=square_buf)
                square = square_buf
            else:
                np.multiply(square, square, out=square)
    return result


def init_from_pressure(grid: Grid1D, p_profile: Callable[[np.ndarray], np.ndarray],
                       m: float) -> State:
    """State with p = p_profile at cell centers, inverted to density."""
    if m <= 1.0:
        raise ConfigError("m must exceed 1")
    p = np.asarray(p_profile(grid.centers()), dtype=float)
    if p.shape != (grid.n_cells,):
        raise ConfigError("pressure profile must return one value per cell")
    if p.size and float(p.min()) < 0.0:
        raise ConfigError("initial pressure must be non-negative")
    rho = _ipow(((m - 1.0) / m) * p, 1.0 / (m - 1.0))
    if rho[0] > 0.0 or rho[-1] > 0.0:
        raise ConfigError("initial support touches the domain boundary")
    return State(grid=grid, rho=rho, m=m, t=0.0)


def stable_dt(state: State, config: SolverConfig) -> float:
    """CFL-limited step; constant over a run, so restarts replay identically."""
    if config.pressure_ceiling is not None:
        ceiling = config.pressure_ceiling
    else:
        ceiling = config.model.p_max
    max_rate = config.model.max_abs_rate() if config.model is not None else 0.0
    dx = state.grid.dx
    return config.cfl * dx * dx / ((state.m - 1.0) * ceiling + dx * max_rate * ceiling)


def _advance(state: State, config: SolverConfig, dt: float,
             work: dict | None = None) -> State:
    rho = state.rho
    m = state.m
    dx = state.grid.dx
    if work is None:
        work = {"pow": (np.empty_like(rho), np.empty_like(rho)),
                "lap": np.empty_like(rho)}

    rho_pow = _ipow(rho, m - 1.0, work["pow"])
    u = rho_pow * rho
    lap = work["lap"]
    lap[1:-1] = u[2:]
    lap[1:-1] -= 2.0 * u[1:-1]
    lap[1:-1] += u[:-2]
    lap[0] = u[1] - 2.0 * u[0]          # zero-density ghost on the left
    lap[-1] = u[-2] - 2.0 * u[-1]       # and on the right

    new = rho + (dt / (dx * dx)) * lap
    if config.model is not None:
        p = rho_pow
        p *= m / (m - 1.0)              # rho_pow is scratch by now
        new += dt * rho * config.model.rate(p)

    clipped = state.clipped_mass
    neg = new < 0.0
    if neg.any():
        clipped += -float(new[neg].sum()) * dx
        new[neg] = 0.0

    total = float(new.sum())
    if not math.isfinite(total):
        raise NumericalBlowupError(f"non-finite density at t = {state.t + dt:.6g}")
    if new[0] > config.support_tol or new[-1] > config.support_tol:
        raise SupportBoundaryError(f"support reached the domain edge at t = {state.t + dt:.6g}")

    return State(grid=state.grid, rho=new, m=m, t=state.t + dt, clipped_mass=clipped)


def step(state: State, config: SolverConfig, dt_max: float | None = None) -> State:
    """One explicit update; dt is the CFL step, optionally clamped to dt_max."""
    dt = stable_dt(state, config)
    if dt_max is not None:
        dt = min(dt, dt_max)
    return _advance(state, config, dt)


def run(state: State, config: SolverConfig) -> Trajectory:
    """Advance to t_end, emitting copies exactly at each requested snapshot time.

    The step sequence clamps dt so it lands on every snapshot time and on
    t_end; a run to T that is continued to 2T therefore reproduces, bit for
    bit, a single run to 2T that snapshots at T. The final state (at t_end)
    is always the last trajectory entry. Aborts if the support comes within
    two cells of the boundary.
    """
    events = [t for t in config.snapshot_times if t > state.t]
    events.append(config.t_end)
    dt_nominal = stable_dt(state, config)
    work = {"pow": (np.empty_like(state.rho), np.empty_like(state.rho)),
            "lap": np.empty_like(state.rho)}

    out: Trajectory = []
    current = state.copy()
    for t_query in config.snapshot_times:
        if t_query <= current.t:
            out.append(current.copy())

    for target in events:
        while current.t < target:
            dt = min(dt_nominal, target - current.t)
            current = _advance(current, config, dt, work)
            r = current.rho
            tol = config.support_tol
            if r[0] > tol or r[1] > tol or r[-1] > tol or r[-2] > tol:
                raise SupportBoundaryError(
                    f"support within two cells of the boundary at t = {current.t:.6g}")
        if target < config.t_end:
            out.append(current.copy())
    out.append(current.copy())
    return out


def mass(state: State) -> float:
    return float(state.rho.sum()) * state.grid.dx


def front_position(state: State, tol: float = 1e-8) -> float:
    """Rightmost cell center with density above tol; -inf when none."""
    above = np.nonzero(state.rho > tol)[0]
    if above.size == 0:
        return -math.inf
    return float(state.grid.centers()[above[-1]])


def level_position(state: State, level: float) -> float:
    """Rightmost downward crossing of rho = level, linearly interpolated."""
    rho = state.rho
    if level <= 0.0 or level > float(rho.max()):
        raise LevelNotFoundError(f"level {level} never attained (max {float(rho.max()):.6g})")
    xs = state.grid.centers()
    hits = np.nonzero((rho[:-1] >= level) & (rho[1:] < level))[0]
    if hits.size == 0:
        # level attained but never crossed downward going right
        raise LevelNotFoundError(f"no downward crossing of level {level}")
    i = int(hits[-1])
    frac = (rho[i] - level) / (rho[i] - rho[i + 1])
    return float(xs[i] + frac * state.grid.dx)


def hele_shaw_residual(state: State) -> float:
    """Integral of p (1 - rho); vanishes in the stiff-exponent limit."""
    p = state.pressure()
    return float(np.dot(p, 1.0 - state.rho)) * state.grid.dx


def saturated_pressure_residual(state: State, model: ReactionModel,
                                sat_tol: float = 1e-3) -> float:
    """Max |(-p_xx) - f(p)| over cells whose full stencil is saturated.

    Cells at the edge of the saturated set see the pressure kink through
    their neighbors and are excluded; with an empty saturated interior the
    residual is zero by convention.
    """
    rho = state.rho
    sat = rho > 1.0 - sat_tol
    mask = sat[2:] & sat[1:-1] & sat[:-2]
    if not mask.any():
        return 0.0
    p = state.pressure()
    dx2 = state.grid.dx ** 2
    lap = (p[2:] - 2.0 * p[1:-1] + p[:-2]) / dx2
    res = -lap - model.rate(p[1:-1])
    return float(np.max(np.abs(res[mask])))


def monotone_pressure_check(trajectory: Trajectory, model: ReactionModel | None = None,
                            eps_scale: float = 1e-9) -> bool:
    """True when pressure never drops between snapshots (tolerance eps_scale * p_M)."""
    if len(trajectory) < 2:
        raise ValueError("need at least two snapshots")
    p_ref = model.p_max if model is not None else max(
        float(s.pressure().max()) for s in trajectory)
    eps = eps_scale * p_ref
    prev = trajectory[0].pressure()
    for snap in trajectory[1:]:
        cur = snap.pressure()
        if float(np.min(cur - prev)) < -eps:
            return False
        prev = cur
    return True
