"""Traveling-wave speeds and profiles by phase-plane shooting.

Along a monotone wave the pressure slope q = -p' solves

    dq/dp = [c q - q^2 - (m-1) p f(p)] / ((m-1) p q),

a reduction that removes translation invariance. Shooting starts on the
unstable direction at p = p_max - eps and integrates down in s = ln p,
which tames the 1/p factor near the front. The trajectory either reaches
the pressure floor with a recorded slope (ReachedOrigin) or its slope
collapses at an interior pressure (InteriorZero); bisection on the wave
speed c drives the boundary between the two onto the front condition
q(0+) = c (advancing) or q(0+) = 0 (receding).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import (BracketError, NoBoundedSolutionError, NoProfileError,
                     RegimeViolationError, StiffFailureError)
from .numerics import bisect_root, dopri_step, rk4_path
from .reaction import ReactionModel

EPS_FRACTION = 1e-6
P_FLOOR_FRACTION = 1e-8
Q_FLOOR = 1e-12
SHOOT_RTOL = 1e-10
SPEED_XTOL = 1e-8
FRONT_SLOPE_TOL = 1e-6
_H_MIN = 1e-13
_H_MAX = 0.25
_SCAN_POINTS = 20


@dataclass(frozen=True)
class InteriorZero:
    """Slope collapsed at pressure p_star before the front was reached."""
    p_star: float
    trace: np.ndarray | None = None


@dataclass(frozen=True)
class ReachedOrigin:
    """Trajectory reached the pressure floor with slope q0."""
    q0: float
    trace: np.ndarray | None = None


WaveOutcome = InteriorZero | ReachedOrigin


@dataclass
class WaveProfile:
    xs: np.ndarray
    ps: np.ndarray
    speed: float
    sharp_front: bool
    slopes: np.ndarray | None = None   # dp/dx samples, when the integrator has them


def local_slope(model: ReactionModel, m: float, c: float) -> float:
    """Admissible slope of q ~ lam * (p_max - p) on the unstable direction.

    Substituting q = lam (p_max - p) into the phase-plane equation and
    keeping leading order gives (m-1) p_max lam^2 + c lam - (m-1) p_max a = 0
    with a = -f'(p_max); the positive root is the departing branch.
    """
    a = -float(model.rate_derivative(model.p_max))
    if a <= 0.0:
        raise ValueError(f"degenerate equilibrium: -f'(p_max) = {a:.3g} <= 0")
    d = (m - 1.0) * model.p_max
    return 0.5 * (-c / d + math.sqrt((c / d) ** 2 + 4.0 * a))


def shoot_q(model: ReactionModel, m: float, c: float, eps: float | None = None,
            keep_trace: bool = False) -> WaveOutcome:
    """Integrate the phase plane from just below p_max down to the floor.

    Embedded Dormand-Prince steps at rtol 1e-10 in s = ln p. A slope
    collapse is finished off analytically: once q is tiny inside the
    decaying zone (f < 0) with the slope still being driven down, the
    trajectory must cross within dp ~ q^2 / (2 |f|), so the crossing
    pressure is reported without fighting the vertical tangent.
    """
    p_max = model.p_max
    if eps is None:
        eps = EPS_FRACTION * p_max
    p_floor = P_FLOOR_FRACTION * p_max
    q_ref = max(1.0, abs(c))
    q_switch = 1e-6 * q_ref
    atol = 1e-14 * q_ref
    mm1 = m - 1.0

    def rhs(s: float, q: float) -> float:
        if q <= 0.0:
            return math.inf
        p = math.exp(s)
        return (c * q - q * q - mm1 * p * float(model.rate(p))) / (mm1 * q)

    s = math.log(p_max - eps)
    s_floor = math.log(p_floor)
    q = local_slope(model, m, c) * eps
    q_peak = q
    h = -min(0.01, (s - s_floor) * 1e-3)
    trace = [(p_max - eps, q)]

    def interior(p_star: float) -> InteriorZero:
        return InteriorZero(p_star=p_star, trace=np.asarray(trace) if keep_trace else None)

    def manifold(p_now: float) -> WaveOutcome:
        out = _manifold_exit(model, m, c, p_now, p_floor)
        if keep_trace:
            out = dataclasses.replace(out, trace=np.asarray(trace))
        return out

    def captured(p_now: float, q_now: float) -> bool:
        # over-driven dive pinned to the attracting balance q ~ (m-1) p f / c,
        # which an explicit stepper can only creep along
        if not (c > 0.0 and q_now < 0.25 * c):
            return False
        f_here = float(model.rate(p_now))
        return f_here > 0.0 and c * q_now <= 4.0 * mm1 * p_now * f_here

    while s > s_floor:
        h = -min(-h, _H_MAX, s - s_floor)
        q_new, err = dopri_step(rhs, s, q, h)
        tol = atol + SHOOT_RTOL * abs(q)
        if err > tol or not math.isfinite(q_new) or q_new <= 0.0:
            if q_new <= 0.0 and err <= tol and math.isfinite(q_new):
                # both orders agree the slope collapsed inside this step
                p_here = math.exp(s + h)
                if p_here > p_floor:
                    return interior(p_here)
                return ReachedOrigin(q0=0.0, trace=np.asarray(trace) if keep_trace else None)
            h *= max(0.1, 0.9 * (tol / err) ** 0.2) if math.isfinite(err) and err > 0 else 0.1
            if -h < 1e-7 and q < 0.05 * q_peak and captured(math.exp(s), q):
                return manifold(math.exp(s))
            if -h < _H_MIN:
                raise StiffFailureError(
                    f"step underflow at p = {math.exp(s):.3e}, q = {q:.3e}, c = {c}",
                    trace=np.asarray(trace))
            continue
        s += h
        q = q_new
        q_peak = max(q_peak, q)
        p = math.exp(s)
        trace.append((p, q))
        if q <= Q_FLOOR:
            return interior(p)
        if q < 0.05 * q_peak and captured(p, q):
            return manifold(p)
        if q < q_switch and p > p_floor:
            f_here = float(model.rate(p))
            drive = c * q - q * q - mm1 * p * f_here
            if f_here < 0.0 and drive > 0.0:
                # doomed: d(q^2/2) ~ -f dp, so the crossing sits q^2/(2|f|) below
                p_star = p - q * q / (2.0 * (-f_here))
                if p_star > p_floor:
                    return interior(p_star)
        if err > 0.0:
            h *= min(5.0, 0.9 * (tol / err) ** 0.2)
        else:
            h *= 5.0

    return ReachedOrigin(q0=q, trace=np.asarray(trace) if keep_trace else None)


def _manifold_exit(model: ReactionModel, m: float, c: float, p_capture: float,
                   p_floor: float) -> WaveOutcome:
    """Finish a captured over-driven trajectory along q_eq(p) = (m-1) p f(p) / c."""
    mm1 = m - 1.0

    def excess(p: float) -> float:
        return mm1 * p * float(model.rate(p)) - c * Q_FLOOR

    q_at_floor = mm1 * p_floor * float(model.rate(p_floor)) / c
    if excess(p_floor) >= 0.0:
        return ReachedOrigin(q0=max(q_at_floor, 0.0))
    p_star = bisect_root(excess, p_floor, p_capture, xtol=1e-15 * p_capture)
    return InteriorZero(p_star=p_star)


def wave_speed_m(model: ReactionModel, m: float, eps: float | None = None) -> float:
    """Unique front speed at diffusion exponent m.

    Advancing (or monostable) regime: an under-driven c leaves the slope
    above c at the floor (ReachedOrigin, q0 > c); an over-driven c starves
    the front, collapsing the slope at an interior pressure (bistable) or
    reaching the floor with q0 < c (monostable). Bisection pins the flip,
    where q0 = c: the sharp front. Receding regime (negative rate
    integral): bisect between InteriorZero and ReachedOrigin over
    [-20 m, 0], targeting the full-support wave with q(0+) = 0. Predicate
    monotonicity over a coarse scan is validated first; violations are a
    hard failure, never silently bisected.
    """
    f_total = float(model.potential(model.p_max))
    if f_total == 0.0:
        raise ValueError("rate integral is exactly zero: speed selection undefined")
    advancing = f_total > 0.0 or model.monostable

    if advancing:
        def over_driven(c: float) -> bool:
            out = shoot_q(model, m, c, eps=eps)
            return isinstance(out, InteriorZero) or out.q0 < c
        c_lo, c_hi = 0.0, 20.0
    else:
        def over_driven(c: float) -> bool:
            return isinstance(shoot_q(model, m, c, eps=eps), ReachedOrigin)
        c_lo, c_hi = -20.0 * m, 0.0

    cs = np.linspace(c_lo, c_hi, _SCAN_POINTS)
    flags = [over_driven(float(c)) for c in cs]
    if advancing:
        ordered = flags == sorted(flags)          # False ... True
        first_true = flags.index(True) if True in flags else None
    else:
        ordered = flags == sorted(flags, reverse=True)   # True ... False
        first_true = None
        flags = flags[::-1]
        cs = cs[::-1]
        if True in flags:
            first_true = flags.index(True)
    if not ordered:
        raise RegimeViolationError(
            f"shooting predicate not monotone over the validation scan: {flags}")
    if first_true is None or first_true == 0:
        raise BracketError(
            f"no predicate flip on the scan [{c_lo}, {c_hi}] at m = {m}")

    lo, hi = float(cs[first_true - 1]), float(cs[first_true])
    while abs(hi - lo) > SPEED_XTOL:
        mid = 0.5 * (lo + hi)
        if over_driven(mid):
            hi = mid
        else:
            lo = mid
    c_star = 0.5 * (lo + hi)

    if advancing:
        # the under-driven side of the final bracket carries the slope record
        out = shoot_q(model, m, lo, eps=eps)
        if not (isinstance(out, ReachedOrigin) and abs(out.q0 - lo) <= FRONT_SLOPE_TOL):
            got = out.q0 - lo if isinstance(out, ReachedOrigin) else None
            raise RegimeViolationError(
                f"front condition |q0 - c| <= {FRONT_SLOPE_TOL} failed at c = {lo}: {got}")
    return c_star


def wave_profile_x(model: ReactionModel, m: float, c: float,
                   eps: float | None = None, n_steps: int = 20000) -> WaveProfile:
    """Pressure profile p(x) of the wave at speed c, front anchored at x = 0.

    Requires the shooting outcome at c to reach the floor; fixed fine-step
    RK4 in s = ln p then gives a dense (x, p) path via dx/ds = -p/q.
    """
    outcome = shoot_q(model, m, c, eps=eps)
    if not isinstance(outcome, ReachedOrigin):
        raise NoProfileError(
            f"no wave profile at c = {c}: slope collapses at p = {outcome.p_star:.6g}")

    p_max = model.p_max
    if eps is None:
        eps = EPS_FRACTION * p_max
    p_floor = P_FLOOR_FRACTION * p_max
    mm1 = m - 1.0

    def rhs(s, y):
        q = max(float(y[0]), 1e-300)
        p = math.exp(s)
        dq = (c * q - q * q - mm1 * p * float(model.rate(p))) / (mm1 * q)
        return np.array([dq, -p / q])

    s0 = math.log(p_max - eps)
    y0 = np.array([local_slope(model, m, c) * eps, 0.0])
    ss, ys = rk4_path(rhs, s0, math.log(p_floor), y0, n_steps)
    qs = ys[:, 0]
    if not np.all(np.isfinite(qs)) or float(qs.min()) <= 0.0:
        raise NoProfileError(f"profile integration lost positivity at c = {c}")
    ps = np.exp(ss)
    xs = ys[:, 1] - ys[-1, 1]
    sharp = abs(float(qs[-1]) - c) <= FRONT_SLOPE_TOL
    return WaveProfile(xs=xs, ps=ps, speed=c, sharp_front=sharp, slopes=-qs)


def limit_profile_h(model: ReactionModel, x_extent: float,
                    n_steps: int = 10000) -> WaveProfile:
    """Stiff-limit front profile: h'' + f(h) = 0, h(0) = 0, h'(0) = -sqrt(2 F(p_max)).

    Backward RK4 from the front. The connection lands on a saddle at p_max,
    so once inside its attracting cone the integration hands over to the
    exact linearized asymptotics 1 - A exp(sqrt(a) x); following the IVP
    further would let the unstable error mode tip the trajectory over the
    saddle and back down the orbit.
    """
    f_total = float(model.potential(model.p_max))
    if f_total < 0.0:
        raise NoBoundedSolutionError(
            f"rate integral {f_total:.6g} < 0: no bounded limit front")
    speed = math.sqrt(2.0 * f_total)
    p_max = model.p_max
    a = -float(model.rate_derivative(p_max))
    cone = 1e-5 * p_max

    def rhs(_x, y):
        return np.array([y[1], -float(model.rate(max(y[0], 0.0)))])

    dx = x_extent / n_steps
    xs = np.linspace(-x_extent, 0.0, n_steps + 1)
    hs = np.empty(n_steps + 1)
    vs = np.empty(n_steps + 1)
    hs[-1], vs[-1] = 0.0, -speed
    y = np.array([0.0, -speed])
    sq_a = math.sqrt(a) if a > 0.0 else 0.0
    for i in range(n_steps - 1, -1, -1):
        gap = p_max - y[0]
        if 0.0 < gap < cone and a > 0.0 and abs(y[1] + sq_a * gap) < 0.5 * sq_a * gap:
            # saddle cone: fill the tail with 1 - A exp(sqrt(a) x)
            decay = np.exp(sq_a * (xs[: i + 1] - xs[i + 1]))
            hs[: i + 1] = p_max - gap * decay
            vs[: i + 1] = -sq_a * gap * decay
            break
        _, ys = rk4_path(rhs, xs[i + 1], xs[i], y, 1)
        y = ys[-1]
        hs[i], vs[i] = y
    return WaveProfile(xs=xs, ps=hs, speed=speed, sharp_front=True, slopes=vs)


def limit_speed_ell(model: ReactionModel, ell: float) -> float:
    """Limit-wave speed toward the partially occupied state at density ell."""
    if not model.monostable:
        raise ValueError("partial-state waves exist only for monostable models")
    if not 0.0 <= ell < 1.0:
        raise ValueError(f"ell must lie in [0, 1), got {ell}")
    return model.limit_wave_speed() / (1.0 - ell)
