"""Deterministic numerical kernels used across the package.

Root bracketing, golden-section minimization, adaptive Gauss-Legendre
quadrature, a fixed-step RK4 path integrator, and a single embedded
Dormand-Prince 5(4) step. No randomness anywhere; every routine maps the
same inputs to the same bits.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import BracketError

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(15)

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def polyval_ascending(coeffs, p):
    """Evaluate a polynomial with ascending-power coefficients (Horner)."""
    if isinstance(p, np.ndarray):
        acc = np.full_like(p, coeffs[-1], dtype=float)
        for c in reversed(coeffs[:-1]):
            acc = acc * p + c
        return acc
    acc = coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = acc * p + c
    return acc


def _gauss_panel(f: Callable, a: float, b: float) -> float:
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    return half * float(np.dot(_GL_WEIGHTS, f(mid + half * _GL_NODES)))


def adaptive_gauss(f: Callable, a: float, b: float, tol: float = 1e-10,
                   max_depth: int = 48) -> float:
    """Adaptive 15-point Gauss-Legendre quadrature of a vectorized integrand.

    Each interval is accepted when the whole-panel and split-panel estimates
    agree within the (length-proportional) share of `tol`.
    """
    if b <= a:
        return 0.0

    def recurse(lo: float, hi: float, whole: float, local_tol: float, depth: int) -> float:
        mid = 0.5 * (lo + hi)
        left = _gauss_panel(f, lo, mid)
        right = _gauss_panel(f, mid, hi)
        if not math.isfinite(left + right):
            raise ArithmeticError("non-finite integrand in adaptive quadrature")
        if abs(left + right - whole) <= local_tol or depth >= max_depth:
            return left + right
        return (recurse(lo, mid, left, 0.5 * local_tol, depth + 1)
                + recurse(mid, hi, right, 0.5 * local_tol, depth + 1))

    return recurse(a, b, _gauss_panel(f, a, b), tol, 0)


def bisect_root(f: Callable[[float], float], a: float, b: float,
                xtol: float = 1e-13, maxiter: int = 200) -> float:
    """Bisection for f(x) = 0 on [a, b]; endpoints must bracket a sign change."""
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise BracketError(f"no sign change on [{a}, {b}] (f: {fa}, {fb})")
    for _ in range(maxiter):
        mid = 0.5 * (a + b)
        fm = f(mid)
        if fm == 0.0 or (b - a) <= xtol:
            return mid
        if fa * fm < 0.0:
            b = mid
        else:
            a, fa = mid, fm
    return 0.5 * (a + b)


def golden_min(f: Callable[[float], float], a: float, b: float,
               tol: float = 1e-10, maxiter: int = 200) -> float:
    """Golden-section search for a minimum of a unimodal function on [a, b]."""
    x1 = b - _INV_PHI * (b - a)
    x2 = a + _INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(maxiter):
        if (b - a) <= tol:
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_PHI * (b - a)
            f2 = f(x2)
    return x1 if f1 <= f2 else x2


def rk4_path(rhs: Callable, t0: float, t1: float, y0, n_steps: int) -> tuple[np.ndarray, np.ndarray]:
    """Fixed-step classical RK4 from t0 to t1 (t1 < t0 allowed).

    Returns (ts, ys) with ys of shape (n_steps + 1, len(y0)).
    """
    y = np.asarray(y0, dtype=float)
    h = (t1 - t0) / n_steps
    ts = t0 + h * np.arange(n_steps + 1)
    ys = np.empty((n_steps + 1, y.size))
    ys[0] = y
    t = t0
    for i in range(n_steps):
        k1 = rhs(t, y)
        k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = t0 + (i + 1) * h
        ys[i + 1] = y
    return ts, ys


# Dormand-Prince 5(4) tableau, scalar form.
_DP_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0)
_DP_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0),
)
_DP_B5 = (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0)
_DP_B4 = (5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0,
          -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0)


def dopri_step(rhs: Callable[[float, float], float], t: float, y: float,
               h: float) -> tuple[float, float]:
    """One embedded Dormand-Prince 5(4) step for a scalar ODE.

    Returns (y5, err) where err is the |5th - 4th| order estimate. The caller
    owns acceptance and step-size control. A non-finite stage value is
    reported as err = inf so the caller rejects and shrinks.
    """
    k = [rhs(t, y)]
    for i in range(1, 7):
        acc = 0.0
        for a, ki in zip(_DP_A[i], k):
            acc += a * ki
        yi = y + h * acc
        if not math.isfinite(yi):
            return y, math.inf
        k.append(rhs(t + _DP_C[i] * h, yi))
    y5 = y
    y4 = y
    for b5, b4, ki in zip(_DP_B5, _DP_B4, k):
        y5 += h * b5 * ki
        y4 += h * b4 * ki
    if not (math.isfinite(y5) and math.isfinite(y4)):
        return y, math.inf
    return y5, abs(y5 - y4)
