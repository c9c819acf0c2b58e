import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import C_LIGHT, H, HBAR, KB
from eotransducer.physics import (CONSTS, TWO_PI, AngularFrequency, PowerDb, db_convert, db_to_linear,
                                  half_coth_occupation, hz_to_rad, linear_to_db, planck_occupation,
                                  rad_to_hz)


def planck_oracle(f, t):
    """Bose-Einstein occupation evaluated in 50-digit arithmetic."""
    mpmath.mp.dps = 50
    x = mpmath.mpf(H) * f / (mpmath.mpf(KB) * t)
    return float(1 / mpmath.expm1(x))


def test_constants_match_codata():
    assert CONSTS.hbar == pytest.approx(HBAR, rel=1e-6)
    assert CONSTS.k_B == pytest.approx(KB, rel=1e-6)
    assert CONSTS.c == pytest.approx(C_LIGHT, rel=1e-6)
    assert CONSTS.eps0 == pytest.approx(8.8541878128e-12, rel=1e-6)
    assert CONSTS.h == TWO_PI * CONSTS.hbar


def test_planck_fridge_temperature():
    assert planck_occupation(8.8e9, 0.320) == pytest.approx(0.36, abs=0.01)


def test_planck_zero_temperature():
    assert planck_occupation(8.8e9, 0.0) == 0.0


def test_planck_waveguide_temperature_against_oracle():
    n = planck_occupation(8.8e9, 0.078)
    assert n == pytest.approx(planck_oracle(8.8e9, 0.078), rel=1e-9)
    assert n == pytest.approx(4.5e-3, rel=0.05)


@pytest.mark.parametrize("f,t", [(0.0, 1.0), (-1.0, 1.0), (8.8e9, -0.1), (math.nan, 1.0), (8.8e9, math.inf)])
def test_planck_rejects_bad_input(f, t):
    with pytest.raises(ValueError):
        planck_occupation(f, t)


@given(st.floats(1e8, 1e11), st.floats(1e-2, 10.0), st.floats(1.001, 3.0))
def test_planck_monotone(f, t, k):
    assert planck_occupation(f, t * k) > planck_occupation(f, t)
    assert planck_occupation(f * k, t) < planck_occupation(f, t)


@given(st.floats(1e8, 1e11), st.floats(51.0, 1e4))
def test_planck_high_temperature_limit(f, ratio):
    t = ratio * CONSTS.h * f / CONSTS.k_B
    classical = CONSTS.k_B * t / (CONSTS.h * f)
    assert abs(planck_occupation(f, t) - classical) / classical < 0.01


def test_half_coth_vacuum():
    assert half_coth_occupation(TWO_PI * 8.8e9, 0.0) == 0.5
    assert half_coth_occupation(TWO_PI * 8.8e9, 0.32) == pytest.approx(0.5 + planck_occupation(8.8e9, 0.32))


def test_db_examples():
    assert db_convert(1.0).value_db == 0.0
    assert PowerDb(67.05).to_linear() == pytest.approx(5.07e6, rel=1e-3)
    assert PowerDb(-74.92).to_linear() == pytest.approx(3.22e-8, rel=1e-3)
    assert db_to_linear(10.0) == pytest.approx(10.0)


@pytest.mark.parametrize("x", [0.0, -1.0])
def test_db_rejects_nonpositive(x):
    with pytest.raises(ValueError):
        db_convert(x)
    with pytest.raises(ValueError):
        linear_to_db(x)


@given(st.floats(1e-12, 1e12))
def test_db_round_trip(x):
    assert abs(PowerDb.from_linear(x).to_linear() - x) / x < 1e-12


def test_power_db_arithmetic():
    assert (PowerDb(67.65) - PowerDb(0.6)).value_db == pytest.approx(67.05)
    assert (PowerDb(3.0) + PowerDb(-1.0)).value_db == pytest.approx(2.0)


@given(st.floats(1.0, 1e15))
def test_angular_frequency_round_trip(f):
    w = AngularFrequency.from_hz(f)
    assert w.value == TWO_PI * f
    assert abs(w.hz - f) <= np.spacing(f)
    assert abs(rad_to_hz(hz_to_rad(f)) - f) <= np.spacing(f)


@pytest.mark.parametrize("v", [-1.0, math.nan, math.inf])
def test_angular_frequency_validation(v):
    with pytest.raises(ValueError):
        AngularFrequency(v)
