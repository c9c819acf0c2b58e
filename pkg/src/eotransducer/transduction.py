"""Coherent microwave-optical conversion.

Index order for every 2x2 object here is (o, e): row = output port,
column = input port. So ``m[0, 1]`` is microwave-in, optical-out.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .device import DeviceParams
from .physics import PowerDb

O, E = 0, 1

# resonant_only_efficiency is a first-order expansion in C.
LOW_C_LIMIT = 0.01


def _denominator(kappa_o, kappa_e, G, omega):
    """``M(omega)^-1 = |(-i w + kappa_o/2)(-i w + kappa_e/2) + G^2|^2``."""
    z = (-1j * omega + kappa_o / 2) * (-1j * omega + kappa_e / 2) + G ** 2
    return np.abs(z) ** 2


@dataclass(frozen=True)
class ConversionMatrix:
    """Coherent photon-number transfer ratios at detuning `omega`.

    `entries` has shape ``(2, 2)`` for scalar omega or ``(2, 2, n)`` for a grid.
    """

    entries: np.ndarray
    omega: np.ndarray

    def __getitem__(self, idx):
        return self.entries[idx]

    @property
    def eta_oe(self):
        """Microwave to optics."""
        return self.entries[O, E]

    @property
    def eta_eo(self):
        """Optics to microwave."""
        return self.entries[E, O]


def conversion_matrix(dev: DeviceParams, G: float, omega) -> ConversionMatrix:
    """Coherent conversion matrix for multi-photon coupling `G` (rad/s).

    `omega` is the common signal detuning from the optical and microwave
    resonances (rad/s), scalar or array.
    """
    if G < 0:
        raise ValueError("G must be >= 0")
    w = np.asarray(omega, dtype=float)
    ko, ke = dev.kappa_o, dev.kappa_e
    kxo, kxe = dev.opt_signal.kappa_ex, dev.mw.kappa_ex
    lsq = dev.lambda_sq
    m = 1.0 / _denominator(ko, ke, G, w)
    g2 = G ** 2
    # reflection numerators taken with the sign that keeps the device passive
    oo = np.abs((ko / 2 - lsq * kxo - 1j * w) * (ke / 2 - 1j * w) + g2) ** 2 * m
    ee = np.abs((ke / 2 - kxe - 1j * w) * (ko / 2 - 1j * w) + g2) ** 2 * m
    off = lsq * kxe * kxo * g2 * m
    entries = np.array([[oo, off], [off, ee]])
    return ConversionMatrix(entries, w)


def eta_total(eta_e, eta_o, lambda_sq, C):
    """Total on-resonance conversion efficiency ``eta_e eta_o Lambda^2 4C/(1+C)^2``."""
    if np.any(np.asarray(C) < 0):
        raise ValueError("cooperativity must be >= 0")
    return eta_e * eta_o * lambda_sq * eta_internal(C)


def eta_internal(C):
    C = np.asarray(C, dtype=float)
    if np.any(C < 0):
        raise ValueError("cooperativity must be >= 0")
    out = 4.0 * C / (1.0 + C) ** 2
    return float(out) if out.ndim == 0 else out


def cooperativity_from_eta_internal(eta_int: float) -> float:
    """Invert ``4C/(1+C)^2`` on the ``C <= 1`` branch."""
    if not 0.0 <= eta_int <= 1.0:
        raise ValueError(f"internal efficiency must lie in [0, 1], got {eta_int}")
    if eta_int == 0:
        return 0.0
    # C = (2 - e - 2 sqrt(1 - e)) / e, written to avoid cancellation at small e
    s = math.sqrt(1.0 - eta_int)
    return eta_int / (1.0 + s) ** 2


def conversion_spectrum_norm(kappa_o, kappa_e, delta):
    """Conversion power versus common detuning, normalized to its peak."""
    d2 = np.asarray(delta, dtype=float) ** 2
    prod = kappa_o * kappa_e
    out = 1.0 / ((1.0 - 4.0 * d2 / prod) ** 2 + 4.0 * d2 * (kappa_o + kappa_e) ** 2 / prod ** 2)
    return float(out) if out.ndim == 0 else out


def bandwidth(kappa_o, kappa_e):
    """Full width at half maximum of :func:`conversion_spectrum_norm` (rad/s).

    The half-maximum condition is a quadratic in delta^2; this is its
    positive root.
    """
    if np.any(np.asarray(kappa_o) <= 0) or np.any(np.asarray(kappa_e) <= 0):
        raise ValueError("linewidths must be > 0")
    a = 4.0 / (kappa_o * kappa_e)
    b = 4.0 * (kappa_o + kappa_e) ** 2 / (kappa_o * kappa_e) ** 2
    u = ((2 * a - b) + np.sqrt((b - 2 * a) ** 2 + 4 * a ** 2)) / (2 * a ** 2)
    out = 2.0 * np.sqrt(u)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class CalibrationChain:
    """Line gains between the instruments and the device ports.

    beta1: optical input, beta2: optical output, beta3: microwave input,
    beta4: microwave output. `n_sys` is the output-referred system noise in
    photons/s/Hz and includes the vacuum half photon.
    """

    beta1: PowerDb
    beta2: PowerDb
    beta3: PowerDb
    beta4: PowerDb
    n_sys: float = 0.5

    def __post_init__(self):
        for name in ("beta1", "beta2", "beta3", "beta4"):
            v = getattr(self, name)
            if not isinstance(v, PowerDb):
                object.__setattr__(self, name, PowerDb(float(v)))
        if not self.n_sys >= 0.5:
            raise ValueError(f"n_sys must be >= 0.5 (vacuum included), got {self.n_sys}")

    def linear(self):
        return (self.beta1.to_linear(), self.beta2.to_linear(),
                self.beta3.to_linear(), self.beta4.to_linear())


@dataclass(frozen=True)
class SParamSet:
    """Measured power ratios for the in-situ efficiency estimate."""

    s_eo_on: float
    s_oe_on: float
    s_ee_off: float
    s_oo_off: float

    def __post_init__(self):
        for name in ("s_eo_on", "s_oe_on", "s_ee_off", "s_oo_off"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")


def smatrix_with_chain(dev: DeviceParams, C: float, chain: CalibrationChain,
                       on_resonance: bool = True) -> np.ndarray:
    """Measured |S_ij|^2 including line gains; rows/cols ordered (o, e)."""
    if C < 0:
        raise ValueError("cooperativity must be >= 0")
    b1, b2, b3, b4 = chain.linear()
    if not on_resonance:
        return np.array([[b2 * b1, 0.0], [0.0, b4 * b3]])
    eo, ee, lsq = dev.eta_o, dev.eta_e, dev.lambda_sq
    conv = 4.0 * eo * ee * C * lsq
    s = np.array([
        [b2 * (1 - 2 * lsq * eo + C) ** 2 * b1, b2 * conv * b3],
        [b4 * conv * b1, b4 * (1 - 2 * ee + C) ** 2 * b3],
    ])
    return s / (1.0 + C) ** 2


def sparams_from_matrices(s_on: np.ndarray, s_off: np.ndarray) -> SParamSet:
    """Pick the four ratios used by :func:`self_calibrated_efficiency`."""
    return SParamSet(s_eo_on=s_on[E, O], s_oe_on=s_on[O, E],
                     s_ee_off=s_off[E, E], s_oo_off=s_off[O, O])


def self_calibrated_efficiency(s: SParamSet) -> float:
    """Line-independent efficiency from two transmissions and two reflections."""
    return math.sqrt((s.s_eo_on * s.s_oe_on) / (s.s_ee_off * s.s_oo_off))


def resonant_only_efficiency(s_on: np.ndarray, lambda_sq: float, eta_o: float, eta_e: float,
                             cooperativity: float | None = None) -> float:
    """Efficiency from on-resonance data only, valid for C << 1.

    `s_on` is the 2x2 on-resonance |S|^2 matrix in (o, e) order. Pass
    `cooperativity` to have the C < 0.01 validity condition enforced.
    """
    if eta_e == 0.5:
        raise ValueError("eta_e = 0.5 gives a zero microwave reflection; estimator undefined")
    if lambda_sq * eta_o == 0.5:
        raise ValueError("Lambda^2 eta_o = 0.5 gives a zero optical reflection; estimator undefined")
    if cooperativity is not None and cooperativity >= LOW_C_LIMIT:
        raise ValueError(f"resonant-only estimate requires C < {LOW_C_LIMIT}, got {cooperativity}")
    s_on = np.asarray(s_on, dtype=float)
    ratio = (s_on[E, O] * s_on[O, E]) / (s_on[E, E] * s_on[O, O])
    return (2 * lambda_sq * eta_o - 1) * (2 * eta_e - 1) * math.sqrt(ratio)


def low_C_approx(eta_e, eta_o, lambda_sq, C):
    """Linear small-cooperativity efficiency ``4 eta_o eta_e Lambda^2 C``."""
    if np.any(np.asarray(C) < 0):
        raise ValueError("cooperativity must be >= 0")
    return 4.0 * eta_o * eta_e * lambda_sq * C


def optical_line_gains(eta_tot: float, beta3: PowerDb, beta4: PowerDb, *, p_in_e: float,
                       p_out_o: float, p_in_o: float, p_out_e: float, omega_e: float,
                       omega_o: float):
    """Optical line gains from converted-power ratios and a calibrated microwave line.

    Uses photon-flux balance in each direction, assuming the same efficiency
    both ways::

        P_out,o / w_o = beta2 eta_tot beta3 P_in,e / w_e
        P_out,e / w_e = beta4 eta_tot beta1 P_in,o / w_o

    Returns ``(beta1, beta2)`` as :class:`PowerDb`.
    """
    if not eta_tot > 0:
        raise ValueError("eta_tot must be > 0")
    for name, v in (("p_in_e", p_in_e), ("p_out_o", p_out_o), ("p_in_o", p_in_o),
                    ("p_out_e", p_out_e), ("omega_e", omega_e), ("omega_o", omega_o)):
        if not v > 0:
            raise ValueError(f"{name} must be > 0")
    b3 = beta3.to_linear() if isinstance(beta3, PowerDb) else float(beta3)
    b4 = beta4.to_linear() if isinstance(beta4, PowerDb) else float(beta4)
    beta2 = (p_out_o / omega_o) / (eta_tot * b3 * p_in_e / omega_e)
    beta1 = (p_out_e / omega_e) / (eta_tot * b4 * p_in_o / omega_o)
    return PowerDb.from_linear(beta1), PowerDb.from_linear(beta2)
