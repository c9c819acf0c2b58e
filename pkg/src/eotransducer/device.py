"""Static device description and single-device formulas.

All rates are angular (rad/s). Constructors named ``*_hz`` accept ordinary
frequencies for convenience.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .physics import CONSTS, TWO_PI, AngularFrequency


@dataclass(frozen=True)
class ResonatorMode:
    """A single resonator mode.

    Parameters
    ----------
    omega0 : AngularFrequency
        Resonance frequency.
    kappa_in : float
        Intrinsic loss rate in rad/s, must be > 0.
    kappa_ex : float
        External coupling rate in rad/s, must be >= 0.
    azimuthal_m : int
        Azimuthal mode number.
    """

    omega0: AngularFrequency
    kappa_in: float
    kappa_ex: float
    azimuthal_m: int = 0

    def __post_init__(self):
        if not isinstance(self.omega0, AngularFrequency):
            object.__setattr__(self, "omega0", AngularFrequency(float(self.omega0)))
        if not (math.isfinite(self.kappa_in) and self.kappa_in > 0):
            raise ValueError(f"kappa_in must be > 0, got {self.kappa_in}")
        if not (math.isfinite(self.kappa_ex) and self.kappa_ex >= 0):
            raise ValueError(f"kappa_ex must be >= 0, got {self.kappa_ex}")

    @classmethod
    def from_hz(cls, f0_hz, kappa_in_hz, kappa_ex_hz, azimuthal_m=0):
        return cls(AngularFrequency.from_hz(f0_hz), TWO_PI * kappa_in_hz,
                   TWO_PI * kappa_ex_hz, int(azimuthal_m))

    @property
    def kappa(self) -> float:
        return self.kappa_in + self.kappa_ex

    @property
    def eta(self) -> float:
        """Coupling efficiency kappa_ex / kappa.

        Written as ``1 - kappa_in / kappa`` so that ``eta + kappa_in / kappa``
        is exactly 1 in floating point.
        """
        return 1.0 - self.kappa_in / self.kappa

    def with_kappa_in(self, kappa_in: float) -> "ResonatorMode":
        return ResonatorMode(self.omega0, kappa_in, self.kappa_ex, self.azimuthal_m)


@dataclass(frozen=True)
class DeviceParams:
    """Microwave mode, optical pump and signal modes, and their coupling.

    ``lambda_sq`` is the optical mode-match factor, stored squared because
    every formula uses it squared. ``fsr_tolerance`` (rad/s) bounds the
    mismatch between the signal-pump spacing and the FSR.
    """

    mw: ResonatorMode
    opt_pump: ResonatorMode
    opt_signal: ResonatorMode
    g0: float
    lambda_sq: float
    fsr: AngularFrequency
    fsr_tolerance: float = TWO_PI * 1e6

    def __post_init__(self):
        if not (0.0 <= self.lambda_sq <= 1.0):
            raise ValueError(f"lambda_sq must lie in [0, 1], got {self.lambda_sq}")
        if not (math.isfinite(self.g0) and self.g0 >= 0):
            raise ValueError(f"g0 must be >= 0, got {self.g0}")
        if not isinstance(self.fsr, AngularFrequency):
            object.__setattr__(self, "fsr", AngularFrequency(float(self.fsr)))
        mismatch = abs(self.opt_signal.omega0.value - self.opt_pump.omega0.value - self.fsr.value)
        if mismatch > self.fsr_tolerance:
            raise ValueError(
                f"signal mode is {mismatch / TWO_PI:.4g} Hz away from pump + FSR "
                f"(tolerance {self.fsr_tolerance / TWO_PI:.4g} Hz)")

    @property
    def kappa_o(self) -> float:
        """Total optical linewidth, taken from the signal mode."""
        return self.opt_signal.kappa

    @property
    def kappa_e(self) -> float:
        return self.mw.kappa

    @property
    def eta_o(self) -> float:
        return self.opt_signal.eta

    @property
    def eta_e(self) -> float:
        return self.mw.eta

    def with_mw_kappa_in(self, kappa_in: float) -> "DeviceParams":
        return DeviceParams(self.mw.with_kappa_in(kappa_in), self.opt_pump,
                            self.opt_signal, self.g0, self.lambda_sq, self.fsr,
                            self.fsr_tolerance)

    def with_g0(self, g0: float) -> "DeviceParams":
        return DeviceParams(self.mw, self.opt_pump, self.opt_signal, g0,
                            self.lambda_sq, self.fsr, self.fsr_tolerance)


def reference_device(kappa_e_hz: float = 14.85e6, g0_hz: float = 40.0) -> DeviceParams:
    """Reference device: critically coupled optics, undercoupled microwave.

    ``kappa_e_hz`` sets the total microwave linewidth; the external rate is
    fixed at 3.7 MHz and the remainder is intrinsic loss.
    """
    fsr_hz = 8.818e9
    kappa_o_in = 9.46e6
    mw = ResonatorMode.from_hz(fsr_hz, kappa_e_hz - 3.7e6, 3.7e6, 1)
    pump = ResonatorMode.from_hz(193.5e12, kappa_o_in, kappa_o_in, 20000)
    signal = ResonatorMode.from_hz(193.5e12 + fsr_hz, kappa_o_in, kappa_o_in, 20001)
    return DeviceParams(mw, pump, signal, TWO_PI * g0_hz, 0.38, AngularFrequency.from_hz(fsr_hz))


@dataclass(frozen=True)
class CouplingDistanceModel:
    kappa_ex_max: float  # rad/s at d = 0
    k0: float  # 1/m

    def __post_init__(self):
        if not self.kappa_ex_max > 0:
            raise ValueError("kappa_ex_max must be > 0")
        if not self.k0 > 0:
            raise ValueError("k0 must be > 0")


def pump_photon_number(dev: DeviceParams, pump_power, detuning=0.0):
    """Intra-cavity pump photon number for power `pump_power` (W) sent to the prism.

    ``n_p = P Lambda^2 / (hbar w_p) * 4 kappa_ex / (kappa^2 + 4 detuning^2)``
    using the pump mode's rates.
    """
    p = np.asarray(pump_power, dtype=float)
    if np.any(p < 0):
        raise ValueError("pump power must be >= 0")
    mode = dev.opt_pump
    det = np.asarray(detuning, dtype=float)
    flux = p * dev.lambda_sq / (CONSTS.hbar * mode.omega0.value)
    with np.errstate(over="ignore"):
        n = flux * 4.0 * mode.kappa_ex / (mode.kappa ** 2 + 4.0 * det ** 2)
    return float(n) if np.ndim(n) == 0 else n


def cooperativity(dev: DeviceParams, n_p):
    """Multi-photon cooperativity ``4 n_p g0^2 / (kappa_o kappa_e)``."""
    n = np.asarray(n_p, dtype=float)
    if np.any(n < 0):
        raise ValueError("photon number must be >= 0")
    c = 4.0 * n * dev.g0 ** 2 / (dev.kappa_o * dev.kappa_e)
    return float(c) if np.ndim(c) == 0 else c


@dataclass(frozen=True)
class OperatingPoint:
    """Pump setting; photon number and cooperativity are always derived."""

    device: DeviceParams
    pump_power: float
    pump_detuning: float = 0.0

    def __post_init__(self):
        if self.pump_power < 0:
            raise ValueError("pump power must be >= 0")

    @property
    def n_p(self) -> float:
        return pump_photon_number(self.device, self.pump_power, self.pump_detuning)

    @property
    def cooperativity(self) -> float:
        return cooperativity(self.device, self.n_p)

    @property
    def G(self) -> float:
        """Multi-photon coupling rate sqrt(n_p) * g0 in rad/s."""
        return math.sqrt(self.n_p) * self.device.g0


def kappa_ex_of_distance(model: CouplingDistanceModel, d):
    """Evanescent prism coupling ``kappa_ex_max * exp(-k0 d)``."""
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise ValueError("distance must be >= 0")
    out = model.kappa_ex_max * np.exp(-model.k0 * d)
    return float(out) if out.ndim == 0 else out


def evanescent_k0(omega_o, n_refr: float) -> float:
    """Evanescent decay constant ``omega_o sqrt(n^2 - 1) / c`` in 1/m."""
    if n_refr <= 1:
        raise ValueError("refractive index must exceed 1 for evanescent decay")
    return float(omega_o) * math.sqrt(n_refr ** 2 - 1.0) / CONSTS.c


def g_from_splitting(splitting: float, n_e: float) -> float:
    """Vacuum coupling from the optical splitting under a strong microwave drive.

    ``S = 4 sqrt(n_e) g``, both ``S`` and the result in rad/s.
    """
    if not n_e > 0:
        raise ValueError("microwave photon number must be > 0")
    return splitting / (4.0 * math.sqrt(n_e))


def g_reduced_overlap(n_refr: float, omega_o, r33: float, e_eo: float) -> float:
    """Vacuum coupling ``n^2 omega_o r33 E_eo / 8`` for an m=1 microwave field.

    `e_eo` is the single-photon microwave field at the optical mode ring (V/m),
    `r33` in m/V. Returns rad/s.
    """
    for name, v in (("n_refr", n_refr), ("omega_o", float(omega_o)), ("r33", r33), ("e_eo", e_eo)):
        if v < 0:
            raise ValueError(f"{name} must be >= 0")
    return n_refr ** 2 * float(omega_o) * r33 * e_eo / 8.0


def phase_match_check(m_p: int, m_e: int, m_o: int) -> bool:
    return m_o == m_p + m_e


def optical_reflection_spectrum(mode: ResonatorMode, lambda_sq: float, delta):
    """Normalized reflected optical power versus detuning `delta` (rad/s).

    Raises if the parameters produce a value outside [0, 1].
    """
    if not 0.0 <= lambda_sq <= 1.0:
        raise ValueError("lambda_sq must lie in [0, 1]")
    delta = np.asarray(delta, dtype=float)
    k, kex = mode.kappa, mode.kappa_ex
    r = 1.0 - 4.0 * kex * lambda_sq * (k - lambda_sq * kex) / (k ** 2 + 4.0 * delta ** 2)
    tol = 1e-12
    if np.any(r < -tol) or np.any(r > 1 + tol):
        raise ValueError("inconsistent parameters: reflection outside [0, 1]")
    return float(r) if r.ndim == 0 else r
