"""Random noiseless generators for every fit binding.

Each case draws in-bounds generator parameters, synthesizes data from an
independent forward evaluation and returns ``(truth, estimate)`` dicts with
matching keys. With ``perturb=True`` the fit starts from the generator
values scaled by independent factors in [0.7, 1.3].
"""
import math
import warnings

import numpy as np

from eotransducer.device import ResonatorMode, optical_reflection_spectrum
from eotransducer.fitting import (fit_conversion_spectrum, fit_exponential_offset, fit_microwave_reflection,
                                  fit_noise_spectrum, fit_optical_coupling_sweep, fit_optical_reflection,
                                  fit_power_law, fit_radiometer)
from eotransducer.noise import NoiseBaths, NoiseSpectrum, RadiometerPoint, radiometer_psd
from eotransducer.physics import TWO_PI, PowerDb
from eotransducer.pipeline.synth import synth_optical_sweep

W_E = TWO_PI * 8.818e9


def _jit(rng, perturb):
    return rng.uniform(0.7, 1.3) if perturb else 1.0


def microwave(rng, perturb=False):
    k_in, k_ex = rng.uniform(1e6, 20e6, 2)
    k = k_in + k_ex
    c = rng.uniform(-0.5, 0.5) * k
    a0 = 10 ** rng.uniform(-3, 3)
    x = np.linspace(-25 * k, 25 * k, 401)
    y = a0 * ((k_in - k_ex) ** 2 + 4 * (x - c) ** 2) / (k * k + 4 * (x - c) ** 2)
    init = None
    if perturb:
        init = {"f0": c + rng.uniform(-0.3, 0.3) * k, "kappa": k * _jit(rng, 1),
                "gap": abs(k_in - k_ex) * _jit(rng, 1), "a0": a0 * _jit(rng, 1)}
    r = fit_microwave_reflection((8.8e9 + x, y), regime="under" if k_ex < k_in else "over", init=init)
    truth = {"f_e": 8.8e9 + c, "kappa_in": k_in, "kappa_ex": k_ex}
    est = {"f_e": r.omega_e / TWO_PI, "kappa_in": r.kappa_in_e / TWO_PI, "kappa_ex": r.kappa_ex_e / TWO_PI}
    return truth, est


def optical(rng, perturb=False):
    k_in, k_ex = rng.uniform(1e6, 30e6, 2)
    lam2 = rng.uniform(0.1, 1.0)
    k = k_in + k_ex
    m = ResonatorMode(TWO_PI * 193.5e12, TWO_PI * k_in, TWO_PI * k_ex)
    x = np.linspace(-10 * k, 10 * k, 401)
    y = optical_reflection_spectrum(m, lam2, TWO_PI * x)
    eta = k_ex / k
    depth = 4 * lam2 * eta * (1 - lam2 * eta)
    init = None
    if perturb:
        init = {"f0": rng.uniform(-0.3, 0.3) * k, "kappa": k * _jit(rng, 1),
                "depth": min(depth * _jit(rng, 1), 1.0), "a0": _jit(rng, 1)}
    r = fit_optical_reflection((193.5e12 + x, y), init=init)
    return {"kappa_o": k, "depth": depth}, {"kappa_o": r.kappa_o / TWO_PI, "depth": r.depth}


def coupling_sweep(rng, perturb=False):
    # the exponential stage on its own; `optical_sweep` runs the full chain
    off, amp, rate = rng.uniform(1, 100), rng.uniform(1, 100), rng.uniform(-2, -0.2)
    v = np.linspace(-5, 5, 21)
    y = off + amp * np.exp(rate * v)
    init = None
    if perturb:
        init = {"offset": off * _jit(rng, 1), "amplitude": amp * _jit(rng, 1), "rate": rate * _jit(rng, 1)}
    r = fit_exponential_offset(v, y, init=init)
    return ({"offset": off, "amplitude": amp, "rate": rate},
            {"offset": r.offset, "amplitude": r.amplitude, "rate": r.rate})


def optical_sweep(rng, perturb=False):
    k_in = TWO_PI * rng.uniform(5e6, 15e6)
    lam2 = rng.uniform(0.2, 0.9)
    decay = rng.uniform(0.3, 1.0)
    volts = np.linspace(-4, 4, 9)
    # critical coupling near V = 0
    traces = synth_optical_sweep(k_in, k_in * rng.uniform(0.8, 1.25), decay, lam2, volts)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        r = fit_optical_coupling_sweep(traces)
    return {"kappa_in_o": k_in, "lambda_sq": lam2}, {"kappa_in_o": r.kappa_in_o, "lambda_sq": r.lambda_sq}


def conversion(rng, perturb=False):
    from eotransducer.transduction import conversion_spectrum_norm
    ko = rng.uniform(5e6, 30e6)
    ke = ko * rng.uniform(0.2, 0.7)
    pk = 10 ** rng.uniform(-8, -2)
    c = rng.uniform(-1e6, 1e6)
    x = np.linspace(-8 * ko, 8 * ko, 801)
    d2 = (x - c) ** 2
    # lineshape evaluated directly, not through the library
    y = pk / ((1 - 4 * d2 / (ko * ke)) ** 2 + 4 * d2 * (ko + ke) ** 2 / (ko * ke) ** 2)
    init = None
    if perturb:
        init = {"f0": c + rng.uniform(-0.3, 0.3) * ke, "peak": pk * _jit(rng, 1),
                "kappa_o": ko * _jit(rng, 1), "kappa_e": ke * _jit(rng, 1)}
    r = fit_conversion_spectrum((5e9 + x, y), init=init)
    lo, hi = sorted([r.kappa_o / TWO_PI, r.kappa_e / TWO_PI])  # lineshape is symmetric in the two
    return ({"center": 5e9 + c, "peak": pk, "kappa_o": ko, "kappa_e": ke},
            {"center": 5e9 + r.omega_center / TWO_PI, "peak": r.peak, "kappa_o": hi, "kappa_e": lo})


def noise(rng, perturb=False):
    k_in, k_ex = TWO_PI * rng.uniform(3e6, 15e6), TWO_PI * rng.uniform(1e6, 8e6)
    n_wg, n_b = rng.uniform(0.01, 5, 2)
    n_sys = rng.uniform(0.5, 20)
    k = k_in + k_ex
    w = np.linspace(-10, 10, 801) * k
    y = 4 * k_in * k_ex / (k * k + 4 * w * w) * (n_b - n_wg) + n_wg + n_sys
    init = {"n_b": n_b * _jit(rng, 1), "n_wg": n_wg * _jit(rng, 1)} if perturb else None
    r = fit_noise_spectrum(NoiseSpectrum(w, y), (k_in, k_ex), n_sys, init=init)
    return {"n_wg": n_wg, "n_b": n_b}, {"n_wg": r.baths.n_wg, "n_b": r.baths.n_b}


def radiometer(rng, perturb=False):
    b4, n_add = rng.uniform(40, 80), rng.uniform(0.5, 30)
    t = np.geomspace(0.0215, 1.8, 15)
    hw = 1.054571817e-34 * W_E
    occ = 0.5 / np.tanh(hw / (2 * 1.380649e-23 * t))
    psd = hw * 10 ** (b4 / 10) * (occ + n_add)
    init = None
    if perturb:
        # perturb the linear gain, the physical quantity, by +-30%
        init = {"beta4_db": b4 + 10 * math.log10(_jit(rng, 1)), "n_add": n_add * _jit(rng, 1)}
    r = fit_radiometer([RadiometerPoint(a, b) for a, b in zip(t, psd)], W_E, init=init)
    return {"beta4_db": b4, "n_add": n_add}, {"beta4_db": r.beta4.value_db, "n_add": r.n_add}


def power_law(rng, perturb=False):
    a, p = 10 ** rng.uniform(-3, 3), rng.uniform(-2, 2)
    x = np.geomspace(1e-7, 1e-2, 12)
    r = fit_power_law(x, a * x ** p)
    return {"exponent": p, "prefactor": a}, {"exponent": r.exponent, "prefactor": r.prefactor}


CASES = {
    "microwave_reflection": microwave,
    "optical_reflection": optical,
    "coupling_exponential": coupling_sweep,
    "optical_coupling_sweep": optical_sweep,
    "conversion_spectrum": conversion,
    "noise_spectrum": noise,
    "radiometer": radiometer,
    "power_law": power_law,
}

# cases whose binding accepts a starting point
PERTURBABLE = ("microwave_reflection", "optical_reflection", "coupling_exponential",
               "conversion_spectrum", "noise_spectrum", "radiometer")


def max_rel_error(truth, est):
    return max(abs(est[k] - v) / abs(v) for k, v in truth.items())


def worst_over_draws(name, draws=100, seed=0, perturb=False):
    rng = np.random.default_rng(seed)
    return max(max_rel_error(*CASES[name](rng, perturb)) for _ in range(draws))
