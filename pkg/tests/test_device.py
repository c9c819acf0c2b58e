import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import C_LIGHT, HBAR, mhz
from eotransducer.device import (CouplingDistanceModel, DeviceParams, OperatingPoint, ResonatorMode,
                                 cooperativity, evanescent_k0, g_from_splitting, g_reduced_overlap,
                                 kappa_ex_of_distance, optical_reflection_spectrum, phase_match_check,
                                 pump_photon_number, reference_device)
from eotransducer.physics import TWO_PI, AngularFrequency

rates = st.floats(1e3, 1e10)


def photon_number_oracle(p, lam2, k_in, k_ex, f_p, det=0.0):
    k = k_in + k_ex
    return p * lam2 / (HBAR * 2 * math.pi * f_p) * 4 * k_ex / (k * k + 4 * det * det)


# --- types -----------------------------------------------------------------

def test_mode_from_hz():
    m = ResonatorMode.from_hz(8.8e9, 11.15e6, 3.7e6)
    assert m.kappa == pytest.approx(mhz(14.85))
    assert m.eta == pytest.approx(3.7 / 14.85)


@pytest.mark.parametrize("k_in,k_ex", [(0.0, 1.0), (-1.0, 1.0), (1.0, -1.0)])
def test_mode_rejects_degenerate_rates(k_in, k_ex):
    with pytest.raises(ValueError):
        ResonatorMode(1e10, k_in, k_ex)


@given(rates, st.floats(0.0, 1e10))
def test_eta_identity_exact(k_in, k_ex):
    m = ResonatorMode(1e10, k_in, k_ex)
    assert m.eta + m.kappa_in / m.kappa == 1.0


def test_device_validation(dev):
    with pytest.raises(ValueError):
        DeviceParams(dev.mw, dev.opt_pump, dev.opt_signal, dev.g0, 1.2, dev.fsr)
    with pytest.raises(ValueError):
        dev.with_g0(-1.0)
    shifted = ResonatorMode(dev.opt_signal.omega0.value + mhz(5), dev.opt_signal.kappa_in,
                            dev.opt_signal.kappa_ex)
    with pytest.raises(ValueError, match="FSR"):
        DeviceParams(dev.mw, dev.opt_pump, shifted, dev.g0, dev.lambda_sq, dev.fsr)
    # a wider tolerance accepts the same mismatch
    DeviceParams(dev.mw, dev.opt_pump, shifted, dev.g0, dev.lambda_sq, dev.fsr, fsr_tolerance=mhz(10))


def test_operating_point_derives_from_device(dev):
    op = OperatingPoint(dev, 1.48e-3)
    assert op.n_p == pump_photon_number(dev, 1.48e-3)
    assert op.cooperativity == cooperativity(dev, op.n_p)
    assert op.G == pytest.approx(math.sqrt(op.n_p) * dev.g0)
    with pytest.raises(ValueError):
        OperatingPoint(dev, -1.0)


# --- pump photon number and cooperativity ----------------------------------

def test_pump_photon_number_max_power(dev):
    n = pump_photon_number(dev, 1.48e-3)
    assert n == pytest.approx(photon_number_oracle(1.48e-3, 0.38, mhz(9.46), mhz(9.46), 193.5e12), rel=1e-9)
    assert n == pytest.approx(7.4e7, rel=0.02)


def test_pump_photon_number_limits(dev):
    assert pump_photon_number(dev, 0.0, mhz(3)) == 0.0
    assert pump_photon_number(dev, 1e-3, 1e30) < 1e-30
    with pytest.raises(ValueError):
        pump_photon_number(dev, -1e-3)


def test_pump_photon_number_detuned_against_oracle(dev):
    det = mhz(7.0)
    assert pump_photon_number(dev, 1e-4, det) == pytest.approx(
        photon_number_oracle(1e-4, 0.38, mhz(9.46), mhz(9.46), 193.5e12, det), rel=1e-9)


def test_cooperativity_max_power(dev):
    n = pump_photon_number(dev, 1.48e-3)
    c = cooperativity(dev, n)
    oracle = 4 * n * mhz(40e-6) ** 2 / (mhz(18.92) * mhz(14.85))
    assert c == pytest.approx(oracle, rel=1e-12)
    assert c == pytest.approx(1.67e-3, rel=0.03)
    assert cooperativity(dev, 0.0) == 0.0


def test_cooperativity_lowest_power_scaling():
    # n_p scaled by 0.23 uW / 1.48 mW with kappa_e = 10.45 MHz. The direct
    # evaluation gives 3.71e-7; see the decisions ledger for the 1.23e-7 figure.
    dev = reference_device(kappa_e_hz=10.45e6)
    n = pump_photon_number(reference_device(), 1.48e-3) * 0.23e-6 / 1.48e-3
    c = cooperativity(dev, n)
    oracle = 4 * n * mhz(40e-6) ** 2 / (mhz(18.92) * mhz(10.45))
    assert c == pytest.approx(oracle, rel=1e-12)
    assert c == pytest.approx(3.71e-7, rel=0.01)


def test_cooperativity_linear_in_power(dev):
    p = np.logspace(-9, -3, 61)
    slope = cooperativity(dev, pump_photon_number(dev, p)) / p
    assert np.max(np.abs(slope / slope[0] - 1.0)) < 1e-12


# --- coupling geometry -----------------------------------------------------

def test_kappa_ex_of_distance():
    m = CouplingDistanceModel(mhz(50), 7.6e6)
    assert kappa_ex_of_distance(m, 0.0) == mhz(50)
    assert kappa_ex_of_distance(m, 1.0) == 0.0
    assert kappa_ex_of_distance(m, math.log(2) / m.k0) == pytest.approx(mhz(25), rel=1e-15)
    with pytest.raises(ValueError):
        kappa_ex_of_distance(m, -1e-9)
    with pytest.raises(ValueError):
        CouplingDistanceModel(0.0, 1.0)


def test_evanescent_k0():
    w = TWO_PI * 193.5e12
    k0 = evanescent_k0(w, 2.13)
    assert k0 == pytest.approx(w * math.sqrt(2.13 ** 2 - 1) / C_LIGHT, rel=1e-12)
    assert k0 == pytest.approx(7.6e6, rel=0.01)
    assert evanescent_k0(w, 1.0 + 1e-12) < 1e-2 * k0
    assert evanescent_k0(2 * w, 2.13) == pytest.approx(2 * k0, rel=1e-15)
    with pytest.raises(ValueError):
        evanescent_k0(w, 1.0)


def test_g_from_splitting():
    g = g_from_splitting(mhz(220), 2.3e12)
    assert g / TWO_PI == pytest.approx(220e6 / (4 * math.sqrt(2.3e12)), rel=1e-12)
    assert g / TWO_PI == pytest.approx(36.1, rel=0.01)
    assert g_from_splitting(0.0, 1e12) == 0.0
    assert g_from_splitting(1.0, 4e12) == pytest.approx(g_from_splitting(1.0, 1e12) / 2)
    with pytest.raises(ValueError):
        g_from_splitting(1.0, 0.0)


def test_g_reduced_overlap():
    w = TWO_PI * 193.5e12
    g = g_reduced_overlap(2.13, w, 31e-12, 11.1e-3)
    assert g / TWO_PI == pytest.approx(38.0, rel=0.03)
    assert g_reduced_overlap(2.13, w, 31e-12, 0.0) == 0.0
    assert g_reduced_overlap(2.13, w, 62e-12, 11.1e-3) == pytest.approx(2 * g)
    with pytest.raises(ValueError):
        g_reduced_overlap(2.13, w, -1.0, 1.0)


def test_coupling_estimates_agree():
    g_split = g_from_splitting(mhz(220), 2.3e12)
    g_sim = g_reduced_overlap(2.13, TWO_PI * 193.5e12, 31e-12, 11.1e-3)
    assert abs(g_split - g_sim) / g_sim < 0.10


def test_phase_match():
    assert phase_match_check(20000, 1, 20001)
    assert phase_match_check(7, 0, 7)
    assert not phase_match_check(20000, 1, 20000)


# --- optical reflection ----------------------------------------------------

def test_optical_reflection_critical():
    m = ResonatorMode(1e15, mhz(9.46), mhz(9.46))
    assert abs(optical_reflection_spectrum(m, 0.38, 0.0) - 0.3844) < 1e-12
    assert optical_reflection_spectrum(m, 1.0, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert optical_reflection_spectrum(m, 0.38, 1e15) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        optical_reflection_spectrum(m, 1.5, 0.0)


@given(rates, rates, st.floats(0.0, 1.0), st.floats(0.0, 1e11))
def test_optical_reflection_even_and_minimal_at_zero(k_in, k_ex, lam2, delta):
    m = ResonatorMode(1e15, k_in, k_ex)
    r_pos = optical_reflection_spectrum(m, lam2, delta)
    r_neg = optical_reflection_spectrum(m, lam2, -delta)
    assert r_pos == r_neg
    assert 0.0 <= r_pos <= 1.0
    assert optical_reflection_spectrum(m, lam2, 0.0) <= r_pos + 1e-15
