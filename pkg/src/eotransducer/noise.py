"""Incoherent microwave noise: baths, output spectra and radiometric calibration.

Noise quantities are in photons/s/Hz. ``N_out`` excludes both the vacuum half
photon and the measurement-chain noise ``N_sys``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .device import DeviceParams
from .physics import CONSTS, PowerDb, half_coth_occupation
from .transduction import _denominator, conversion_matrix

VACUUM = np.array([0.5, 0.5])


@dataclass(frozen=True)
class NoiseBaths:
    """Waveguide and intrinsic microwave bath occupancies, flat over the band."""

    n_wg: float
    n_b: float

    def __post_init__(self):
        if not (self.n_wg >= 0 and self.n_b >= 0):
            raise ValueError(f"bath occupancies must be >= 0, got {self.n_wg}, {self.n_b}")

    def vector(self) -> np.ndarray:
        return np.array([self.n_wg, self.n_b])


@dataclass(frozen=True)
class RadiometerPoint:
    t_load: float  # K
    psd: float  # W/Hz

    def __post_init__(self):
        if not (self.t_load > 0 and self.psd > 0):
            raise ValueError("radiometer point needs t_load > 0 and psd > 0")


@dataclass(frozen=True)
class NoiseSpectrum:
    freq_offsets: np.ndarray  # rad/s from the microwave resonance
    n_det: np.ndarray  # photons/s/Hz, N_sys included

    def __post_init__(self):
        f = np.asarray(self.freq_offsets, dtype=float)
        n = np.asarray(self.n_det, dtype=float)
        if f.shape != n.shape or f.ndim != 1:
            raise ValueError("freq_offsets and n_det must be 1-D arrays of equal length")
        if np.any(n < 0):
            raise ValueError("calibrated noise must be >= 0 in every bin")
        object.__setattr__(self, "freq_offsets", f)
        object.__setattr__(self, "n_det", n)


def noise_conversion_matrix(dev: DeviceParams, G: float, omega) -> np.ndarray:
    """Map (N_wg, N_b) to (N_out_o, N_out_e); shape (2, 2) or (2, 2, n)."""
    if G < 0:
        raise ValueError("G must be >= 0")
    w = np.asarray(omega, dtype=float)
    ko, ke = dev.kappa_o, dev.kappa_e
    kxo = dev.opt_signal.kappa_ex
    kxe, kie = dev.mw.kappa_ex, dev.mw.kappa_in
    g2 = G ** 2
    m = 1.0 / _denominator(ko, ke, G, w)
    o_wg = kxe * kxo * g2 * m
    o_b = kie * kxo * g2 * m
    e_wg = np.abs((ke / 2 - kxe - 1j * w) * (ko / 2 - 1j * w) + g2) ** 2 * m
    e_b = kie * kxe * np.abs(-1j * w + ko / 2) ** 2 * m
    o_wg, o_b = np.broadcast_arrays(o_wg, o_b)
    return np.array([[o_wg, o_b], [e_wg, e_b]])


def lorentzian_weight(kappa_in_e, kappa_ex_e, omega):
    """``4 kappa_in kappa_ex / (kappa^2 + 4 w^2)``, the bath-contrast factor."""
    k = kappa_in_e + kappa_ex_e
    return 4.0 * kappa_in_e * kappa_ex_e / (k ** 2 + 4.0 * np.asarray(omega, dtype=float) ** 2)


def detected_noise_spectrum(kappa_in_e, kappa_ex_e, baths: NoiseBaths, n_sys, omega):
    """Detected output noise (low cooperativity): Lorentzian on a flat floor."""
    out = (lorentzian_weight(kappa_in_e, kappa_ex_e, omega) * (baths.n_b - baths.n_wg)
           + baths.n_wg + n_sys)
    return float(out) if np.ndim(out) == 0 else out


def output_noise_peak(kappa_in_e, kappa_ex_e, baths: NoiseBaths) -> float:
    """``N_out`` at the center of the microwave line."""
    return float(detected_noise_spectrum(kappa_in_e, kappa_ex_e, baths, 0.0, 0.0))


def mode_occupancy(eta_e, baths: NoiseBaths):
    """Intra-cavity microwave occupancy ``eta_e N_wg + (1 - eta_e) N_b``."""
    if not 0.0 <= eta_e <= 1.0:
        raise ValueError("eta_e must lie in [0, 1]")
    return eta_e * baths.n_wg + (1.0 - eta_e) * baths.n_b


def radiometer_psd(t_load, omega_e, beta4: PowerDb, n_add, bw=1.0):
    """Power seen by the spectrum analyzer in `bw` Hz for a matched load at `t_load` K."""
    t = np.asarray(t_load, dtype=float)
    if np.any(t < 0):
        raise ValueError("load temperature must be >= 0")
    gain = beta4.to_linear() if isinstance(beta4, PowerDb) else float(beta4)
    out = CONSTS.hbar * omega_e * gain * bw * (half_coth_occupation(omega_e, t) + n_add)
    return float(out) if np.ndim(out) == 0 else out


def chain_correction(beta4_fit: PowerDb, n_add_fit: float, extra_loss: PowerDb):
    """Move the radiometric calibration plane to the device output port.

    The load sees `extra_loss` dB less loss than the device, so the gain drops
    by that amount and the amplifier noise, referred back through the smaller
    gain, grows by the same linear factor. The vacuum half photon is already
    referenced to whichever plane the measurement is made at and is not scaled:

        beta4 = beta4_fit - L,   N_sys = N_add * 10**(L/10) + 1/2
    """
    loss = extra_loss if isinstance(extra_loss, PowerDb) else PowerDb(float(extra_loss))
    if loss.value_db < 0:
        raise ValueError("extra loss must be >= 0 dB")
    b4 = beta4_fit if isinstance(beta4_fit, PowerDb) else PowerDb(float(beta4_fit))
    return b4 - loss, n_add_fit * loss.to_linear() + 0.5


def normalize_baseline(p_esa, p_esa_ref, n_sys):
    """Calibrate a pumped trace against a no-pump reference.

    Returns ``(N_det, N_out)`` per bin.
    """
    p = np.asarray(p_esa, dtype=float)
    ref = np.asarray(p_esa_ref, dtype=float)
    if np.any(~(ref > 0)):
        raise ValueError("reference trace must be > 0 in every bin")
    n_det = n_sys * p / ref
    return n_det, n_det - n_sys


def heating_projection(rate_ref, p_ref, p_pulse, tau):
    """Worst-case noise after a pulse, with heating rate linear in power."""
    for name, v in (("rate_ref", rate_ref), ("p_ref", p_ref), ("p_pulse", p_pulse), ("tau", tau)):
        if np.any(np.asarray(v) < 0):
            raise ValueError(f"{name} must be >= 0")
    out = rate_ref * np.divide(p_pulse, p_ref) * tau
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class IOResult:
    coherent: np.ndarray  # (n_out_o, n_out_e)
    noise: np.ndarray  # (N_out_o, N_out_e), thermal only
    vacuum: np.ndarray = VACUUM

    @property
    def total(self) -> np.ndarray:
        vac = self.vacuum.reshape((2,) + (1,) * (self.coherent.ndim - 1))
        return self.coherent + self.noise + vac


def full_io_model(dev: DeviceParams, G: float, omega, coherent_inputs, baths: NoiseBaths) -> IOResult:
    """Output photon fluxes for coherent inputs (n_in_o, n_in_e) plus thermal baths.

    Only meaningful for the noise part at C < 0.01.
    """
    eta = conversion_matrix(dev, G, omega).entries
    sigma = noise_conversion_matrix(dev, G, omega)
    n_in = np.asarray(coherent_inputs, dtype=float)
    coh = np.einsum("ij...,j...->i...", eta, n_in)
    nz = np.einsum("ij...,j->i...", sigma, baths.vector())
    return IOResult(coh, nz)
