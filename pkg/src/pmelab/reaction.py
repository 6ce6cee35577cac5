"""Reaction nonlinearities and the scalar constants derived from them.

A model holds the growth rate f as a polynomial in the pressure variable,
together with its distinguished roots: the unstable threshold `alpha`
(0 for monostable models) and the carrying pressure `p_max` beyond which
the rate is negative. Everything downstream (elliptic lengths, wave
speeds, CFL bounds) is computed from these.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NoAdvancingWaveError
from .numerics import bisect_root, golden_min, polyval_ascending

_SIGN_SAMPLES = 4096
_ROOT_PAD = 1e-9


@dataclass(frozen=True)
class CriticalLengths:
    """Interval lengths that organize the elliptic problem.

    l_star: below this support length the pressure always collapses.
    beta: smallest positive zero of the rate integral (None when the model
    is monostable or the integral stays negative).
    """
    l_star: float
    beta: float | None


@dataclass(frozen=True)
class ReactionModel:
    coeffs: tuple[float, ...]      # rate polynomial, ascending powers
    kind: str                      # "bistable_quadratic" | "polynomial"
    alpha: float                   # unstable zero; 0.0 means monostable
    p_max: float
    lipschitz_bound: float

    @property
    def monostable(self) -> bool:
        return self.alpha == 0.0

    def rate(self, p):
        """Growth rate f(p) for scalar or array pressure, p >= 0."""
        if isinstance(p, np.ndarray):
            if p.size and float(p.min()) < 0.0:
                raise ValueError("pressure must be non-negative")
            if self.kind == "bistable_quadratic":
                return (1.0 - p) * (p - self.alpha)
            return polyval_ascending(self.coeffs, p)
        if p < 0.0:
            raise ValueError("pressure must be non-negative")
        if self.kind == "bistable_quadratic":
            return (1.0 - p) * (p - self.alpha)
        return polyval_ascending(self.coeffs, p)

    def potential(self, p):
        """Antiderivative F(p) of the rate with F(0) = 0, exact for polynomials."""
        if not isinstance(p, np.ndarray) and p < 0.0:
            raise ValueError("pressure must be non-negative")
        return polyval_ascending(_potential_coeffs(self.coeffs), p)

    def rate_derivative(self, p):
        return polyval_ascending(_derivative_coeffs(self.coeffs), p)

    def sup_rate_ratio(self) -> float:
        """K = sup of rate(p)/p over p > 0.

        Closed form (1 - sqrt(alpha))^2 for the quadratic model; general
        polynomials use a sampled maximum refined by golden section. For
        monostable models the supremum may be attained only as p -> 0+, in
        which case the limiting value f'(0) is reported.
        """
        if self.kind == "bistable_quadratic":
            return (1.0 - math.sqrt(self.alpha)) ** 2
        return _sup_rate_ratio_numeric(self)

    def limit_wave_speed(self) -> float:
        """Speed sqrt(2 F(p_max)) of the sharp advancing front in the stiff limit."""
        f_total = float(self.potential(self.p_max))
        if f_total <= 0.0:
            raise NoAdvancingWaveError(
                f"rate integral over (0, p_max) is {f_total:.6g} <= 0; no advancing wave")
        return math.sqrt(2.0 * f_total)

    def critical_lengths(self) -> CriticalLengths:
        k = self.sup_rate_ratio()
        if k <= 0.0:
            raise ValueError("sup rate ratio is zero; l_star undefined")
        l_star = math.pi / math.sqrt(k)
        beta = None
        if not self.monostable and float(self.potential(self.p_max)) > 0.0:
            pot = lambda s: float(self.potential(s))
            beta = bisect_root(pot, self.alpha, self.p_max,
                               xtol=1e-12 * self.p_max)
            for _ in range(3):  # Newton polish to ~ulp; downstream quadratures want it
                slope = float(self.rate(beta))
                if slope <= 0.0:
                    break
                beta -= pot(beta) / slope
        return CriticalLengths(l_star=l_star, beta=beta)

    def sup_rate(self) -> float:
        """max of rate over [0, p_max] (exact at polynomial critical points)."""
        return _rate_extrema(self)[0]

    def max_abs_rate(self) -> float:
        """max of |rate| over [0, p_max]; enters the CFL denominator."""
        return _rate_extrema(self)[1]


def _potential_coeffs(coeffs: tuple[float, ...]) -> tuple[float, ...]:
    return (0.0,) + tuple(c / (i + 1) for i, c in enumerate(coeffs))


def _derivative_coeffs(coeffs: tuple[float, ...]) -> tuple[float, ...]:
    if len(coeffs) == 1:
        return (0.0,)
    return tuple(c * i for i, c in enumerate(coeffs) if i > 0)


@functools.lru_cache(maxsize=256)
def _rate_extrema(model: ReactionModel) -> tuple[float, float]:
    deriv = _derivative_coeffs(model.coeffs)
    candidates = [0.0, model.p_max]
    roots = np.roots(list(reversed(deriv))) if len(deriv) > 1 else np.array([])
    for r in roots:
        if abs(r.imag) < 1e-12 and 0.0 < r.real < model.p_max:
            candidates.append(float(r.real))
    values = [float(polyval_ascending(model.coeffs, p)) for p in candidates]
    return max(values), max(abs(v) for v in values)


@functools.lru_cache(maxsize=256)
def _sup_rate_ratio_numeric(model: ReactionModel) -> float:
    # f(p)/p may be non-concave; seed golden section with a dense scan.
    ps = np.linspace(model.p_max / 10_000.0, model.p_max, 10_000)
    ratios = polyval_ascending(model.coeffs, ps) / ps
    i = int(np.argmax(ratios))
    lo = ps[max(i - 1, 0)]
    hi = ps[min(i + 1, ps.size - 1)]
    x = golden_min(lambda p: -float(polyval_ascending(model.coeffs, p)) / p,
                   lo, hi, tol=1e-13 * model.p_max)
    best = float(polyval_ascending(model.coeffs, x)) / x
    if model.monostable:
        # supremum may only be approached as p -> 0+
        best = max(best, float(polyval_ascending(_derivative_coeffs(model.coeffs), 0.0)))
    return max(best, 0.0)


def _validate_sign_pattern(coeffs: tuple[float, ...], alpha: float, p_max: float) -> None:
    ps = np.linspace(0.0, 2.0 * p_max, _SIGN_SAMPLES)
    vals = polyval_ascending(coeffs, ps)
    pad = _ROOT_PAD * p_max
    tol = 1e-12 * max(1.0, float(np.max(np.abs(vals))))
    below = ps < alpha - pad
    middle = (ps > alpha + pad) & (ps < p_max - pad)
    above = ps > p_max + pad
    if alpha > 0.0 and np.any(vals[below] > tol):
        raise ConfigError("rate must be negative below its unstable zero")
    if np.any(vals[middle] < -tol):
        raise ConfigError("rate must be positive between its unstable zero and p_max")
    if np.any(vals[above] > tol):
        raise ConfigError("rate must be negative beyond p_max")


def bistable_quadratic(alpha: float) -> ReactionModel:
    """The quadratic model (1 - p)(p - alpha); alpha = 0 is the monostable case."""
    if not 0.0 <= alpha < 1.0:
        raise ConfigError(f"alpha must lie in [0, 1), got {alpha}")
    coeffs = (-alpha, 1.0 + alpha, -1.0)
    lip = max(abs(1.0 + alpha), abs(1.0 + alpha - 4.0))  # |f'| extremes on [0, 2]
    return ReactionModel(coeffs=coeffs, kind="bistable_quadratic", alpha=float(alpha),
                         p_max=1.0, lipschitz_bound=lip)


def polynomial_reaction(coeffs) -> ReactionModel:
    """Build a model from ascending-power rate coefficients.

    p_max is the largest positive root (rate negative beyond it, located by
    bracketing + bisection to 1e-12 relative); alpha is the first positive
    root when the rate starts negative, 0 when the rate vanishes at 0.
    """
    coeffs = tuple(float(c) for c in coeffs)
    if len(coeffs) < 2 or all(c == 0.0 for c in coeffs):
        raise ConfigError("polynomial rate needs at least degree 1")
    f = lambda p: float(polyval_ascending(coeffs, p))

    # Bracket the last positive-to-negative crossing on a geometric scan;
    # grid points may land exactly on a root.
    scan = np.concatenate([np.linspace(1e-9, 1.0, 2000), np.geomspace(1.0, 1e6, 2000)])
    vals = polyval_ascending(coeffs, scan)

    def locate(bracket_mask, last: bool) -> float:
        hits = np.nonzero(bracket_mask)[0]
        if hits.size == 0:
            return math.nan
        i = int(hits[-1] if last else hits[0])
        if vals[i] == 0.0:
            return float(scan[i])
        if vals[i + 1] == 0.0:
            return float(scan[i + 1])
        return _polish_root(coeffs, bisect_root(
            f, float(scan[i]), float(scan[i + 1]), xtol=1e-14))

    p_max = locate((vals[:-1] > 0.0) & (vals[1:] <= 0.0), last=True)
    if math.isnan(p_max):
        raise ConfigError("rate has no positive-to-negative root; p_max undefined")

    f0 = f(0.0)
    if f0 < 0.0:
        alpha = locate((vals[:-1] < 0.0) & (vals[1:] >= 0.0), last=False)
        if math.isnan(alpha) or alpha >= p_max:
            raise ConfigError("rate starting negative must cross upward before p_max")
    elif f0 == 0.0:
        alpha = 0.0
    else:
        raise ConfigError("rate must satisfy f(0) <= 0")

    _validate_sign_pattern(coeffs, alpha, p_max)
    dvals = np.abs(polyval_ascending(_derivative_coeffs(coeffs),
                                     np.linspace(0.0, 2.0 * p_max, _SIGN_SAMPLES)))
    return ReactionModel(coeffs=coeffs, kind="polynomial", alpha=alpha,
                         p_max=p_max, lipschitz_bound=float(np.max(dvals)) * (1.0 + 1e-6))


def _polish_root(coeffs: tuple[float, ...], x: float, iters: int = 3) -> float:
    # Newton polish after bisection; keeps roots at ~1e-15 relative.
    deriv = _derivative_coeffs(coeffs)
    for _ in range(iters):
        d = polyval_ascending(deriv, x)
        if d == 0.0:
            break
        x = x - polyval_ascending(coeffs, x) / d
    return float(x)


def reaction_from_config(cfg: dict) -> ReactionModel:
    """Build a model from a config mapping; see README for the schema."""
    if not isinstance(cfg, dict):
        raise ConfigError("reaction: expected a mapping")
    kind = cfg.get("kind")
    if kind == "bistable_quadratic":
        if "alpha" not in cfg:
            raise ConfigError("reaction.alpha: required for bistable_quadratic")
        alpha = cfg["alpha"]
        if not isinstance(alpha, (int, float)) or not 0.0 <= alpha < 1.0:
            raise ConfigError(f"reaction.alpha: must be a number in [0, 1), got {alpha!r}")
        return bistable_quadratic(float(alpha))
    if kind == "polynomial":
        if "coeffs" not in cfg:
            raise ConfigError("reaction.coeffs: required for polynomial")
        return polynomial_reaction(cfg["coeffs"])
    raise ConfigError(f"reaction.kind: expected 'bistable_quadratic' or 'polynomial', got {kind!r}")
