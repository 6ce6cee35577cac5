"""Two-point boundary-value problem -u'' = f(u), u(0) = u(L) = 0, by the
time-map method.

The map gamma -> L(gamma) gives the interval length on which the solution
with boundary slope gamma returns to zero. Its minimum L0 is the existence
threshold; roots of L(gamma) = L enumerate single-bump solutions. The
quadratures remove the peak-end square-root singularity by substitution,
so plain Gauss-Legendre panels converge fast.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoSolutionRegimeError, SingularTimeMapError
from .numerics import adaptive_gauss, bisect_root, golden_min, polyval_ascending, rk4_path
from .reaction import ReactionModel

QUAD_TOL = 1e-10
PEAK_SLOPE_TOL = 1e-12
_GRID_EDGE_OFFSET = 1e-12


@dataclass(frozen=True)
class TimeMapSample:
    gamma: float     # boundary slope u'(0)
    s0: float        # peak value, where the energy integral turns
    length: float    # interval length L(gamma)


@dataclass
class BvpProfile:
    xs: np.ndarray
    us: np.ndarray
    gamma: float
    peak: float
    energy_const: float            # gamma^2 / 2
    tangential: bool = False       # double root of L(gamma) = L (fold point)


@dataclass(frozen=True)
class L0Result:
    l0: float
    gamma_min: float   # 0.0 marks the zero-slope (periodic) endpoint candidate


def _gamma_max(model: ReactionModel) -> float:
    f_total = float(model.potential(model.p_max))
    if f_total <= 0.0:
        raise NoSolutionRegimeError(
            f"rate integral {f_total:.6g} <= 0: boundary-value problem has no solution")
    return math.sqrt(2.0 * f_total)


def _solve_peak(model: ReactionModel, gamma: float) -> float:
    """Peak value s0 with F(s0) = gamma^2/2, unique in (alpha, p_max)."""
    target = 0.5 * gamma * gamma
    lo = model.alpha
    g = lambda s: float(model.potential(s)) - target
    s0 = bisect_root(g, lo, model.p_max, xtol=1e-13 * model.p_max, maxiter=300)
    for _ in range(3):  # Newton polish: shrinks the turning-point offset to ~ulp
        slope = float(model.rate(s0))
        if slope <= 0.0:
            break
        s0 -= g(s0) / slope
    return s0


def _peak_expansion(model: ReactionModel, anchor: float) -> np.ndarray:
    """Coefficients q_k of -2*(F(anchor - y) - F(anchor)) = y * sum q_k y^k.

    Exact coefficient arithmetic; evaluating the radicand through this
    expansion avoids the catastrophic cancellation of gamma^2 - 2 F(t)
    near the turning point (where a clamped negative ulp would otherwise
    produce huge integrand spikes and runaway adaptive refinement).
    """
    fpot = np.polynomial.Polynomial(_potential_coeffs_of(model))
    comp = fpot(np.polynomial.Polynomial([anchor, -1.0]))  # F(anchor - y) in y
    return -2.0 * comp.coef[1:]


def _potential_coeffs_of(model: ReactionModel) -> tuple[float, ...]:
    return (0.0,) + tuple(c / (i + 1) for i, c in enumerate(model.coeffs))


def time_map(model: ReactionModel, gamma: float) -> TimeMapSample:
    """Length of the single-bump solution with boundary slope gamma.

    L = 2 * int_0^s0 dt / sqrt(gamma^2 - 2 F(t)). The integrand blows up
    like an inverse square root at t = s0; the substitution t = s0 - u^2
    makes it approach 2/sqrt(2 f(s0)) there, which requires f(s0) > 0.
    """
    gmax = _gamma_max(model)
    if not 0.0 < gamma < gmax:
        raise ValueError(f"gamma must lie in (0, {gmax:.6g}), got {gamma}")
    s0 = _solve_peak(model, gamma)
    f_peak = float(model.rate(s0))
    if f_peak <= PEAK_SLOPE_TOL:
        raise SingularTimeMapError(
            f"rate at the peak value {s0:.6g} is {f_peak:.3g}; time map diverges")

    # Take the polished s0 as the exact turning point: evaluating the radicand
    # as 2(F(s0) - F(t)) reparametrizes gamma by at most one ulp and removes
    # the clamped-negative-ulp region that otherwise poisons the quadrature.
    g2_eff = 2.0 * float(model.potential(s0))
    q = _peak_expansion(model, s0)

    def plain(t):
        return 1.0 / np.sqrt(np.maximum(g2_eff - 2.0 * model.potential(t), 1e-300))

    def desing(u):
        # t = s0 - u^2; radicand factored as u^2 * q(u^2), q(0) = 2 f(s0)
        y = u * u
        return 2.0 / np.sqrt(np.maximum(polyval_ascending(q, y), 1e-300))

    half = adaptive_gauss(plain, 0.0, 0.5 * s0, QUAD_TOL)
    half += adaptive_gauss(desing, 0.0, math.sqrt(0.5 * s0), QUAD_TOL)
    return TimeMapSample(gamma=gamma, s0=s0, length=2.0 * half)


def periodic_length(model: ReactionModel) -> float:
    """First return length of the zero-slope solution (bistable only).

    L_c = 2 * int_0^beta dt / sqrt(-2 F(t)). Both endpoints are square-root
    singular: t = v^2 regularizes t -> 0 (where -2F ~ 2 alpha t) and
    t = beta - u^2 regularizes the peak.
    """
    if model.monostable:
        raise ValueError("periodic length undefined for monostable models")
    beta = model.critical_lengths().beta
    if beta is None:
        raise NoSolutionRegimeError("rate integral <= 0: no zero-slope solution")

    # -2F(v^2) = v^2 * s(v^2): exact since the potential has zero constant term.
    # The peak end takes the polished beta as the exact zero of F (one-ulp
    # reparametrization), factoring the radicand so no clamp region remains.
    s_low = -2.0 * np.asarray(_potential_coeffs_of(model)[1:])
    q_hi = _peak_expansion(model, beta)

    def low(v):
        y = v * v
        return 2.0 / np.sqrt(np.maximum(polyval_ascending(s_low, y), 1e-300))

    def high(u):
        y = u * u
        return 2.0 / np.sqrt(np.maximum(polyval_ascending(q_hi, y), 1e-300))

    half = adaptive_gauss(low, 0.0, math.sqrt(0.5 * beta), QUAD_TOL)
    half += adaptive_gauss(high, 0.0, math.sqrt(0.5 * beta), QUAD_TOL)
    return 2.0 * half


def _gamma_grid(model: ReactionModel, n: int) -> np.ndarray:
    """Slopes clustered toward both endpoints (where L varies fastest) with a
    uniform band across the middle (where its minimum lives)."""
    gmax = _gamma_max(model)
    n_end = n // 3
    low = np.geomspace(_GRID_EDGE_OFFSET, 0.25, n_end)
    high = 1.0 - np.geomspace(_GRID_EDGE_OFFSET, 0.25, n_end)[::-1]
    mid = np.linspace(0.25, 0.75, n - 2 * n_end)
    return gmax * np.unique(np.concatenate([low, mid, high]))


def _lengths_on_grid(model: ReactionModel, gammas: np.ndarray) -> np.ndarray:
    out = np.empty(gammas.size)
    for i, g in enumerate(gammas):
        try:
            out[i] = time_map(model, float(g)).length
        except SingularTimeMapError:
            out[i] = math.inf
    return out


def find_l0(model: ReactionModel, samples: int = 256) -> L0Result:
    """Minimum of L(gamma): dense log-spaced sampling plus golden refinement.

    For bistable models the gamma -> 0+ endpoint limit (the periodic length)
    competes as a candidate.
    """
    gammas = _gamma_grid(model, max(samples, 200))
    lengths = _lengths_on_grid(model, gammas)
    i = int(np.argmin(lengths))
    lo = gammas[max(i - 2, 0)]
    hi = gammas[min(i + 2, gammas.size - 1)]

    def length_of(g: float) -> float:
        try:
            return time_map(model, g).length
        except SingularTimeMapError:
            return math.inf

    g_best = golden_min(length_of, float(lo), float(hi), tol=1e-11 * gammas[-1])
    l_best = length_of(g_best)
    if l_best > lengths[i]:
        g_best, l_best = float(gammas[i]), float(lengths[i])

    if not model.monostable:
        l_c = periodic_length(model)
        if l_c < l_best:
            return L0Result(l0=l_c, gamma_min=0.0)
    return L0Result(l0=l_best, gamma_min=g_best)


def _reconstruct(model: ReactionModel, gamma: float, length: float, n: int,
                 tangential: bool = False) -> BvpProfile:
    """Integrate -u'' = f(u) from (0, gamma) to the midpoint and mirror."""
    xs = np.linspace(0.0, length, n + 1)
    half_nodes = n // 2
    per_node = max(4, -(-16384 // max(half_nodes, 1)))

    def rhs(_x, y):
        return np.array([y[1], -float(model.rate(max(y[0], 0.0)))])

    us = np.zeros(n + 1)
    y = np.array([0.0, gamma])
    x = 0.0
    node_dx = length / n if n else 0.0
    for k in range(1, half_nodes + 1):
        _, ys = rk4_path(rhs, x, x + node_dx, y, per_node)
        y = ys[-1]
        x += node_dx
        us[k] = max(y[0], 0.0)
    for k in range(half_nodes + 1, n + 1):
        us[k] = us[n - k]
    peak = float(np.max(us))
    return BvpProfile(xs=xs, us=us, gamma=gamma, peak=peak,
                      energy_const=0.5 * gamma * gamma, tangential=tangential)


def solve_bvp(model: ReactionModel, length: float, n: int = 512,
              samples: int = 512) -> list[BvpProfile]:
    """All single-bump solutions on (0, length), one per root of L(gamma) = length.

    Roots come from sign-change bracketing on the sampled time map followed
    by bisection. A double root (fold tangency) has no sign change; it is
    detected as a near-zero local minimum of |L(gamma) - length| and the
    single profile reported is flagged tangential.
    """
    if length <= 0.0:
        raise ValueError("length must be positive")
    try:
        gmax = _gamma_max(model)
    except NoSolutionRegimeError:
        return []

    gammas = _gamma_grid(model, max(samples, 200))
    diffs = _lengths_on_grid(model, gammas) - length

    roots: list[tuple[float, bool]] = []
    finite = np.isfinite(diffs)
    for i in range(gammas.size - 1):
        if not (finite[i] and finite[i + 1]):
            continue
        if diffs[i] == 0.0:
            roots.append((float(gammas[i]), False))
        elif diffs[i] * diffs[i + 1] < 0.0:
            g = bisect_root(
                lambda g_: time_map(model, g_).length - length,
                float(gammas[i]), float(gammas[i + 1]), xtol=1e-13 * gmax)
            roots.append((g, False))
    if diffs[-1] == 0.0 and finite[-1]:
        roots.append((float(gammas[-1]), False))

    # Fold tangency: local minimum of |diff| without a sign change.
    bracketed = {i for i in range(gammas.size - 1)
                 if finite[i] and finite[i + 1] and diffs[i] * diffs[i + 1] <= 0.0}
    for i in range(1, gammas.size - 1):
        if not (finite[i - 1] and finite[i] and finite[i + 1]):
            continue
        if i - 1 in bracketed or i in bracketed:
            continue
        if abs(diffs[i]) <= abs(diffs[i - 1]) and abs(diffs[i]) <= abs(diffs[i + 1]):
            g = golden_min(lambda g_: abs(time_map(model, g_).length - length),
                           float(gammas[i - 1]), float(gammas[i + 1]),
                           tol=1e-12 * gmax)
            if abs(time_map(model, g).length - length) < 1e-8 * length:
                roots.append((g, True))

    roots.sort(key=lambda r: r[0])
    deduped: list[tuple[float, bool]] = []
    for g, tang in roots:
        if deduped and abs(g - deduped[-1][0]) < 1e-9 * gmax:
            continue
        deduped.append((g, tang))
    return [_reconstruct(model, g, length, n, tang) for g, tang in deduped]


def energy_residual(profile: BvpProfile, model: ReactionModel) -> float:
    """Max deviation of 0.5 u'^2 + F(u) from its boundary value, u' centered."""
    if profile.xs.size < 3:
        raise ValueError("profile needs at least 3 points")
    dx = profile.xs[1] - profile.xs[0]
    du = (profile.us[2:] - profile.us[:-2]) / (2.0 * dx)
    along = 0.5 * du * du + model.potential(profile.us[1:-1])
    return float(np.max(np.abs(along - profile.energy_const)))
