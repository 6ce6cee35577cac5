"""Cross-module checks with a genuinely non-quadratic rate.

f(p) = (1 - p)(p - 1/4)(1 + p/2): bistable sign pattern with a cubic shape,
so every closed-form shortcut for the quadratic model is bypassed and the
numeric paths (ratio search, root bracketing, quadrature, shooting) carry
the whole load.
"""

from __future__ import annotations

import math

import numpy as np

from pmelab import elliptic, waves
from pmelab.reaction import polynomial_reaction

from _oracles import shoot_bvp_length

COEFFS = (-0.25, 1.125, -0.375, -0.5)
MODEL = polynomial_reaction(COEFFS)


def test_roots_recovered():
    assert abs(MODEL.p_max - 1.0) < 1e-12
    assert abs(MODEL.alpha - 0.25) < 1e-12
    assert not MODEL.monostable


def test_potential_value():
    # -1/4 + 9/16 - 1/8 - 1/8 = 1/16
    assert math.isclose(float(MODEL.potential(1.0)), 0.0625, rel_tol=1e-14)
    assert math.isclose(MODEL.limit_wave_speed(), math.sqrt(0.125), rel_tol=1e-14)


def test_sup_rate_ratio_dominates():
    k = MODEL.sup_rate_ratio()
    ps = np.linspace(1e-6, 2.0, 2000)
    assert np.all(MODEL.rate(ps) <= k * ps + 1e-12)
    # the bound is attained somewhere in the interior
    assert float(np.max(MODEL.rate(ps) - k * ps)) > -1e-6


def test_time_map_against_ivp_oracle():
    sample = elliptic.time_map(MODEL, 0.15)
    oracle = shoot_bvp_length(MODEL, 0.15)
    assert abs(sample.length - oracle) < 1e-6


def test_find_l0_respects_lower_bound():
    found = elliptic.find_l0(MODEL)
    assert found.l0 >= math.pi / math.sqrt(MODEL.sup_rate_ratio()) - 1e-6
    l_c = elliptic.periodic_length(MODEL)
    assert found.l0 <= l_c


def test_wave_speed_approaches_limit():
    c_lim = MODEL.limit_wave_speed()
    c32 = waves.wave_speed_m(MODEL, 32.0)
    c64 = waves.wave_speed_m(MODEL, 64.0)
    assert abs(c64 - c_lim) < abs(c32 - c_lim)
    assert abs(c64 - c_lim) / c_lim < 0.05


def test_wave_profile_sharp_front():
    c64 = waves.wave_speed_m(MODEL, 64.0)
    prof = waves.wave_profile_x(MODEL, 64.0, c64)
    assert prof.sharp_front
    assert np.all(np.diff(prof.ps) <= 1e-12)
