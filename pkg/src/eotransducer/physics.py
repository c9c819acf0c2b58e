"""Physical constants, unit conventions and thermal occupation.

Internal frequencies are angular (rad/s). Anything a user types in or reads
out is ordinary frequency (Hz). dB always means power dB.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import constants as _sc

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PhysConsts:
    hbar: float  # J s
    h: float  # J s
    k_B: float  # J / K
    c: float  # m / s
    eps0: float  # F / m


# CODATA 2018 (exact SI values for h, k_B, c). h is stored as 2*pi*hbar.
CONSTS = PhysConsts(
    hbar=_sc.hbar,
    h=TWO_PI * _sc.hbar,
    k_B=_sc.k,
    c=_sc.c,
    eps0=_sc.epsilon_0,
)


def _check_finite(name, value):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return arr


@dataclass(frozen=True)
class AngularFrequency:
    """Angular frequency in rad/s, the canonical internal unit."""

    value: float

    def __post_init__(self):
        if not math.isfinite(self.value) or self.value < 0:
            raise ValueError(f"angular frequency must be finite and >= 0, got {self.value}")

    @classmethod
    def from_hz(cls, f_hz: float) -> "AngularFrequency":
        return cls(float(f_hz) * TWO_PI)

    @property
    def hz(self) -> float:
        return self.value / TWO_PI

    def __float__(self):
        return self.value


def hz_to_rad(f_hz):
    """Ordinary frequency (Hz) to angular frequency (rad/s)."""
    return np.multiply(f_hz, TWO_PI)


def rad_to_hz(omega):
    """Angular frequency (rad/s) to ordinary frequency (Hz)."""
    return np.divide(omega, TWO_PI)


def db_to_linear(value_db):
    return np.power(10.0, np.divide(value_db, 10.0))


def linear_to_db(x):
    """Power ratio to dB. Rejects non-positive ratios."""
    arr = np.asarray(x, dtype=float)
    if np.any(~(arr > 0)):
        raise ValueError(f"power ratio must be > 0 for dB conversion, got {x!r}")
    out = 10.0 * np.log10(arr)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class PowerDb:
    """A power gain or loss in dB (10*log10 convention)."""

    value_db: float

    def __post_init__(self):
        if not math.isfinite(self.value_db):
            raise ValueError(f"dB value must be finite, got {self.value_db}")

    @classmethod
    def from_linear(cls, x: float) -> "PowerDb":
        return cls(linear_to_db(float(x)))

    def to_linear(self) -> float:
        return float(db_to_linear(self.value_db))

    def __add__(self, other: "PowerDb") -> "PowerDb":
        return PowerDb(self.value_db + other.value_db)

    def __sub__(self, other: "PowerDb") -> "PowerDb":
        return PowerDb(self.value_db - other.value_db)


def db_convert(x: float) -> PowerDb:
    """Linear power ratio to :class:`PowerDb`."""
    return PowerDb.from_linear(x)


def _bose(x):
    # exp(-x) / (1 - exp(-x)) underflows quietly to 0 instead of overflowing
    return np.exp(-x) / -np.expm1(-x)


def planck_occupation(freq_hz, temperature_k):
    """Bose-Einstein occupation of a mode at ordinary frequency `freq_hz`.

    Returns ``1 / (exp(h f / k_B T) - 1)``, with 0 at ``T = 0``. Works on
    scalars and arrays (broadcasting).
    """
    f = _check_finite("freq", freq_hz)
    t = _check_finite("temperature", temperature_k)
    if np.any(f <= 0):
        raise ValueError("frequency must be > 0")
    if np.any(t < 0):
        raise ValueError("temperature must be >= 0")
    f, t = np.broadcast_arrays(f, t)
    out = np.zeros(f.shape)
    hot = t > 0
    x = CONSTS.h * f[hot] / (CONSTS.k_B * t[hot])
    out[hot] = _bose(x)
    return float(out) if out.ndim == 0 else out


def half_coth_occupation(omega, temperature_k):
    """Symmetrized thermal occupation ``0.5*coth(hbar*omega / 2 k_B T)``.

    Equals ``N_th + 0.5``; tends to 0.5 as T -> 0.
    """
    omega = _check_finite("omega", omega)
    t = _check_finite("temperature", temperature_k)
    if np.any(t < 0):
        raise ValueError("temperature must be >= 0")
    omega, t = np.broadcast_arrays(omega, t)
    out = np.full(omega.shape, 0.5)
    hot = t > 0
    x = CONSTS.hbar * omega[hot] / (CONSTS.k_B * t[hot])
    out[hot] = 0.5 + _bose(x)
    return float(out) if out.ndim == 0 else out
