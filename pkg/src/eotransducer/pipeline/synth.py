"""Synthetic measurement generators that mirror the forward model.

Used by tests, the acceptance suite and ``eotransducer synth``. All traces
are noise-free unless `noise_rel` is given, in which case each value is
multiplied by ``1 + noise_rel * N(0, 1)``.
"""
from __future__ import annotations

import math

import numpy as np

from ..device import DeviceParams, OperatingPoint, ResonatorMode, optical_reflection_spectrum
from ..noise import NoiseBaths, RadiometerPoint, detected_noise_spectrum, radiometer_psd
from ..physics import CONSTS, TWO_PI, PowerDb
from ..transduction import CalibrationChain, conversion_matrix
from .traces import SpectrumTrace, TraceKind


def _jitter(y, noise_rel, rng):
    if not noise_rel:
        return y
    rng = np.random.default_rng() if rng is None else rng
    return y * (1.0 + noise_rel * rng.standard_normal(np.shape(y)))


def detuning_grid(dev: DeviceParams, points: int = 2001, span_linewidths: float = 25.0):
    """Symmetric detuning grid (rad/s) reaching `span_linewidths` times the wider mode."""
    half = span_linewidths * max(dev.kappa_o, dev.kappa_e)
    return np.linspace(-half, half, points)


def random_chain(rng, n_sys: float = 12.74, span_db: float = 100.0) -> CalibrationChain:
    b = rng.uniform(-span_db, span_db, 4)
    return CalibrationChain(*(PowerDb(float(x)) for x in b), n_sys=n_sys)


def synth_power_point(dev: DeviceParams, pump_power: float, chain: CalibrationChain, *,
                      detuning=None, pump_detuning: float = 0.0, noise_rel: float = 0.0,
                      rng=None) -> dict:
    """The four coherent traces recorded at one pump power.

    Returns a dict with keys ``reflection_mw``, ``reflection_opt``,
    ``conversion_eo`` and ``conversion_oe``.
    """
    w = detuning_grid(dev) if detuning is None else np.asarray(detuning, dtype=float)
    G = OperatingPoint(dev, pump_power, pump_detuning).G
    eta = conversion_matrix(dev, G, w).entries
    b1, b2, b3, b4 = chain.linear()
    f_e = dev.mw.omega0.hz + w / TWO_PI
    f_o = dev.opt_signal.omega0.hz + w / TWO_PI
    meta = {"pump_power_w": repr(float(pump_power))}
    return {
        "reflection_mw": SpectrumTrace(f_e, _jitter(b4 * b3 * eta[1, 1], noise_rel, rng),
                                       TraceKind.REFLECTION_MW, meta),
        "reflection_opt": SpectrumTrace(f_o, _jitter(b2 * b1 * eta[0, 0], noise_rel, rng),
                                        TraceKind.REFLECTION_OPT, meta),
        # optical in, microwave out: recorded against the microwave output frequency
        "conversion_eo": SpectrumTrace(f_e, _jitter(b4 * eta[1, 0] * b1, noise_rel, rng),
                                       TraceKind.CONVERSION, {**meta, "direction": "eo"}),
        "conversion_oe": SpectrumTrace(f_o, _jitter(b2 * eta[0, 1] * b3, noise_rel, rng),
                                       TraceKind.CONVERSION, {**meta, "direction": "oe"}),
    }


def synth_noise_pair(dev: DeviceParams, pump_power: float, baths: NoiseBaths, chain: CalibrationChain,
                     *, detuning=None, rbw_hz: float = 1e3, noise_rel: float = 0.0, rng=None):
    """A pumped output-noise trace and the matching no-pump reference.

    The reference assumes the device is fully cold (zero bath occupancy),
    so it records only the system noise. The default grid spans ten
    microwave linewidths either side of resonance.
    """
    w = (np.linspace(-10.0, 10.0, 801) * dev.kappa_e if detuning is None
         else np.asarray(detuning, dtype=float))
    f = dev.mw.omega0.hz + w / TWO_PI
    unit = CONSTS.hbar * dev.mw.omega0.value * chain.beta4.to_linear() * rbw_hz
    n_det = detected_noise_spectrum(dev.mw.kappa_in, dev.mw.kappa_ex, baths, chain.n_sys, w)
    meta = {"rbw_hz": repr(float(rbw_hz))}
    pumped = SpectrumTrace(f, _jitter(unit * n_det, noise_rel, rng), TraceKind.NOISE_PSD,
                           {**meta, "pump_power_w": repr(float(pump_power))})
    ref = SpectrumTrace(f, _jitter(np.full_like(w, unit * chain.n_sys), noise_rel, rng),
                        TraceKind.NOISE_PSD, {**meta, "pump_power_w": "0.0"})
    return pumped, ref


def synth_radiometer(temps, omega_e: float, beta4: PowerDb, n_add: float, *, noise_rel: float = 0.0,
                     rng=None):
    t = np.asarray(temps, dtype=float)
    psd = _jitter(radiometer_psd(t, omega_e, beta4, n_add), noise_rel, rng)
    return [RadiometerPoint(float(a), float(b)) for a, b in zip(t, psd)]


def synth_optical_sweep(kappa_in: float, kappa_ex_max: float, decay_per_volt: float, lambda_sq: float,
                        voltages, *, f0_hz: float = 193.5e12, points: int = 1201,
                        span_linewidths: float = 10.0, noise_rel: float = 0.0, rng=None):
    """Optical reflection traces along a prism-gap sweep.

    ``kappa_ex(V) = kappa_ex_max * exp(decay_per_volt * V)``; rates in rad/s.
    """
    out = []
    for v in voltages:
        k_ex = kappa_ex_max * math.exp(decay_per_volt * v)
        mode = ResonatorMode(TWO_PI * f0_hz, kappa_in, k_ex)
        w = np.linspace(-span_linewidths, span_linewidths, points) * mode.kappa
        r = optical_reflection_spectrum(mode, lambda_sq, w)
        out.append(SpectrumTrace(f0_hz + w / TWO_PI, _jitter(r, noise_rel, rng), TraceKind.REFLECTION_OPT,
                                 {"piezo_v": repr(float(v))}))
    return out
