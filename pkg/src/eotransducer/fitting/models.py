"""Ready-made fits for every measured quantity of the transducer.

Spectral fits work on ordinary frequency internally (Hz, relative to the
trace center) for conditioning and report angular rates.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ..noise import NoiseBaths, NoiseSpectrum, RadiometerPoint, lorentzian_weight, mode_occupancy
from ..physics import CONSTS, TWO_PI, PowerDb, half_coth_occupation
from ..transduction import conversion_spectrum_norm
from .lm import FitResult, ModelSpec, least_squares_fit

MIN_POINTS_PER_LINEWIDTH = 5


class FitError(ValueError):
    """Input data cannot support the requested fit."""


def _xy(trace):
    if isinstance(trace, tuple):
        f, v = trace
    else:
        f, v = trace.freq, trace.value
    return np.asarray(f, dtype=float), np.asarray(v, dtype=float)


def _outer_median(y, fraction=0.1):
    n = max(1, int(round(fraction * y.size / 2)))
    return float(np.median(np.concatenate([y[:n], y[-n:]])))


def _dip_guess(x, y):
    """Baseline, dip center, FWHM and normalized minimum of a resonance dip."""
    base = _outer_median(y)
    yn = y / base
    i = int(np.argmin(yn))
    rmin = float(np.clip(yn[i], 0.0, 1.0))
    half = 1.0 - (1.0 - rmin) / 2
    left = i
    while left > 0 and yn[left - 1] <= half:
        left -= 1
    right = i
    while right < y.size - 1 and yn[right + 1] <= half:
        right += 1
    dx = float(np.median(np.diff(x)))
    width = max(x[right] - x[left] + dx, 2 * dx)
    return base, float(x[i]), width, rmin


def _peak_guess(x, y):
    i = int(np.argmax(y))
    peak = float(y[i])
    above = np.nonzero(y >= peak / 2)[0]
    dx = float(np.median(np.diff(x)))
    width = max(x[above[-1]] - x[above[0]] + dx, 2 * dx)
    return peak, float(x[i]), width


def _baseline(params, t, order):
    poly = 1.0
    tk = np.ones_like(t)
    for k in range(1, order + 1):
        tk = tk * t
        poly = poly + params[k - 1] * tk
    return poly


def _tq(fit: FitResult):
    return stats.t.ppf(0.975, fit.dof) if fit.dof > 0 else float("nan")


@dataclass
class MicrowaveReflectionFit:
    omega_e: float  # rad/s
    kappa_in_e: float  # rad/s
    kappa_ex_e: float  # rad/s
    ci95: dict  # rad/s, same keys
    baseline_at_resonance: float
    under_resolved: bool
    fit: FitResult

    @property
    def kappa_e(self) -> float:
        return self.kappa_in_e + self.kappa_ex_e

    @property
    def eta_e(self) -> float:
        return self.kappa_ex_e / self.kappa_e


def microwave_reflection_model(order: int = 0):
    """``a0 * (1 + sum a_k t^k) * (gap^2 + 4 d^2) / (kappa^2 + 4 d^2)``.

    ``gap = |kappa_in - kappa_ex|``; parameters in Hz relative to the trace
    center. The independent variable is ``(x, half_span)``.
    """
    names = ["f0", "kappa", "gap", "a0"] + [f"a{k}" for k in range(1, order + 1)]

    def func(p, xs):
        x, half = xs
        d = x - p[0]
        shape = (p[2] ** 2 + 4 * d ** 2) / (p[1] ** 2 + 4 * d ** 2)
        return p[3] * _baseline(p[4:], x / half, order) * shape

    return names, func


def fit_microwave_reflection(trace, baseline_order: int = 0, regime: str = "under",
                             init: dict | None = None) -> MicrowaveReflectionFit:
    """Fit a microwave |S_ee|^2 trace with the bare-cavity reflection lineshape.

    Magnitude data cannot tell over- from under-coupling; `regime` picks the
    branch (``"under"``: kappa_ex < kappa_in).
    """
    if regime not in ("under", "over"):
        raise ValueError("regime must be 'under' or 'over'")
    if not 0 <= baseline_order <= 3:
        raise ValueError("baseline order must be between 0 and 3")
    f, y = _xy(trace)
    fc = 0.5 * (f[0] + f[-1])
    half = 0.5 * (f[-1] - f[0])
    x = f - fc
    base, x0, width, rmin = _dip_guess(x, y)
    names, func = microwave_reflection_model(baseline_order)
    guess = {"f0": x0, "kappa": width, "gap": width * math.sqrt(rmin), "a0": base}
    guess.update({f"a{k}": 0.0 for k in range(1, baseline_order + 1)})
    if init:
        guess.update(init)
    # a start with gap >= kappa has no dip at all and the fit can wander off the line
    guess["gap"] = min(abs(guess["gap"]), 0.95 * guess["kappa"])
    k0 = guess["kappa"]
    lower = [-half, 1e-6 * half, 0.0, 0.0] + [-np.inf] * baseline_order
    upper = [half, 10 * half, 10 * half, np.inf] + [np.inf] * baseline_order
    scales = [k0, k0, k0, abs(guess["a0"]) or 1.0] + [1.0] * baseline_order
    model = ModelSpec(func, names, lower, upper, scales=scales)
    fit = least_squares_fit(model, (x, half), y, [guess[n] for n in names])

    kappa, gap = fit["kappa"], min(fit["gap"], fit["kappa"])
    big, small = (kappa + gap) / 2, (kappa - gap) / 2
    k_in, k_ex = (big, small) if regime == "under" else (small, big)
    if kappa > 2 * half / 5:
        raise FitError(f"trace spans {2 * half / kappa:.2g} linewidths, need at least 5")
    n_inside = int(np.count_nonzero(np.abs(x - fit["f0"]) <= kappa / 2))
    tq = _tq(fit)
    var_k, var_g, cov = fit.cov("kappa", "kappa"), fit.cov("gap", "gap"), fit.cov("kappa", "gap")
    sd_plus = math.sqrt(max(var_k + var_g + 2 * cov, 0.0)) / 2
    sd_minus = math.sqrt(max(var_k + var_g - 2 * cov, 0.0)) / 2
    sd_in, sd_ex = (sd_plus, sd_minus) if regime == "under" else (sd_minus, sd_plus)
    ci = {
        "omega_e": TWO_PI * fit.ci95["f0"],
        "kappa_in_e": TWO_PI * tq * sd_in,
        "kappa_ex_e": TWO_PI * tq * sd_ex,
    }
    t0 = fit["f0"] / half
    b0 = fit["a0"] * _baseline([fit[f"a{k}"] for k in range(1, baseline_order + 1)],
                               np.array(t0), baseline_order)
    return MicrowaveReflectionFit(
        omega_e=TWO_PI * (fc + fit["f0"]), kappa_in_e=TWO_PI * k_in, kappa_ex_e=TWO_PI * k_ex,
        ci95=ci, baseline_at_resonance=float(b0),
        under_resolved=n_inside < MIN_POINTS_PER_LINEWIDTH, fit=fit)


@dataclass
class OpticalReflectionFit:
    omega_o: float  # rad/s
    kappa_o: float  # rad/s
    depth: float  # 1 - on-resonance normalized reflection
    ci95: dict
    baseline_at_resonance: float
    fit: FitResult


def optical_reflection_model(order: int = 0):
    """``a0 * (1 + sum a_k t^k) * (1 - depth * kappa^2 / (kappa^2 + 4 d^2))``."""
    names = ["f0", "kappa", "depth", "a0"] + [f"a{k}" for k in range(1, order + 1)]

    def func(p, xs):
        x, half = xs
        d = x - p[0]
        shape = 1.0 - p[2] * p[1] ** 2 / (p[1] ** 2 + 4 * d ** 2)
        return p[3] * _baseline(p[4:], x / half, order) * shape

    return names, func


def fit_optical_reflection(trace, baseline_order: int = 0, init: dict | None = None) -> OpticalReflectionFit:
    f, y = _xy(trace)
    fc = 0.5 * (f[0] + f[-1])
    half = 0.5 * (f[-1] - f[0])
    x = f - fc
    base, x0, width, rmin = _dip_guess(x, y)
    names, func = optical_reflection_model(baseline_order)
    guess = {"f0": x0, "kappa": width, "depth": 1.0 - rmin, "a0": base}
    guess.update({f"a{k}": 0.0 for k in range(1, baseline_order + 1)})
    if init:
        guess.update(init)
    k0 = guess["kappa"]
    lower = [-half, 1e-6 * half, 0.0, 0.0] + [-np.inf] * baseline_order
    upper = [half, 10 * half, 1.0, np.inf] + [np.inf] * baseline_order
    scales = [k0, k0, 1.0, abs(guess["a0"]) or 1.0] + [1.0] * baseline_order
    fit = least_squares_fit(ModelSpec(func, names, lower, upper, scales=scales),
                            (x, half), y, [guess[n] for n in names])
    if fit["kappa"] > 2 * half / 5:
        raise FitError("optical trace spans fewer than 5 linewidths")
    t0 = fit["f0"] / half
    b0 = fit["a0"] * _baseline([fit[f"a{k}"] for k in range(1, baseline_order + 1)],
                               np.array(t0), baseline_order)
    ci = {"omega_o": TWO_PI * fit.ci95["f0"], "kappa_o": TWO_PI * fit.ci95["kappa"],
          "depth": fit.ci95["depth"]}
    return OpticalReflectionFit(TWO_PI * (fc + fit["f0"]), TWO_PI * fit["kappa"], fit["depth"],
                                ci, float(b0), fit)


def lambda_sq_from_depth(depth: float, eta_o: float) -> float:
    """Mode match from dip depth ``4 eta L2 (1 - eta L2)``, branch eta*L2 <= 1/2."""
    if not 0 < eta_o < 1:
        raise ValueError("eta_o must lie in (0, 1)")
    depth = min(max(depth, 0.0), 1.0)
    x = (1.0 - math.sqrt(1.0 - depth)) / 2.0
    return x / eta_o


@dataclass
class ExponentialFit:
    offset: float
    amplitude: float
    rate: float
    ci95: dict
    exponential: bool  # False when a constant describes the data as well
    fit: FitResult | None


def fit_exponential_offset(v, y, alpha: float = 0.05, init: dict | None = None,
                           sigma=None) -> ExponentialFit:
    """Fit ``y = offset + amplitude * exp(rate * v)``.

    Falls back to a constant when a nested-model test at level `alpha` does
    not favour the exponential term; amplitude is then reported as exactly 0.
    `init` overrides any of the data-driven starting values. With per-point
    standard errors `sigma` the fit is inverse-variance weighted, intervals
    use the given errors as absolute, and the test is chi-square rather than F.
    """
    v = np.asarray(v, dtype=float)
    y = np.asarray(y, dtype=float)
    order = np.argsort(v)
    v, y = v[order], y[order]
    n = y.size
    if sigma is None:
        w = np.ones(n)
    else:
        sig = np.asarray(sigma, dtype=float)[order]
        if sig.shape != y.shape or np.any(~(sig > 0)) or np.any(~np.isfinite(sig)):
            raise FitError("sigma must be finite and > 0 for every point")
        w = 1.0 / sig ** 2
    mean = float(np.sum(w * y) / np.sum(w))
    ssr0 = float(np.sum(w * (y - mean) ** 2))
    if sigma is None:
        sd0 = math.sqrt(ssr0 / (n - 1)) if n > 1 else float("nan")
        ci0 = float(stats.t.ppf(0.975, n - 1) * sd0 / math.sqrt(n)) if n > 1 else float("nan")
    else:
        ci0 = float(stats.norm.ppf(0.975) / math.sqrt(np.sum(w)))
    const_ci = {"offset": ci0, "amplitude": 0.0, "rate": float("nan")}
    scale = max(abs(mean), 1e-300)
    if float(np.sum((y - mean) ** 2)) <= (1e-12 * scale) ** 2 * n:
        return ExponentialFit(mean, 0.0, 0.0, const_ci, False, None)

    # initial guess from a log-linear fit above a floor just under the minimum
    floor = y.min() - 0.05 * (y.max() - y.min())
    rate0, logamp0 = np.polyfit(v, np.log(y - floor), 1)
    names = ["offset", "amplitude", "rate"]
    vs = max(np.ptp(v), 1e-12)

    def func(p, x):
        return p[0] + p[1] * np.exp(p[2] * x)

    guess = [floor, math.exp(logamp0), rate0]
    if init:
        guess = [init.get(k, g) for k, g in zip(names, guess)]
    model = ModelSpec(func, names, lower=[-np.inf, 0.0, -np.inf],
                      scales=[max(abs(floor), 1e-3 * scale), max(abs(guess[1]), 1e-3 * scale), 1.0 / vs])
    if sigma is not None:
        # widely spread weights make the crude start fragile; seed from the unweighted optimum
        seed = least_squares_fit(model, v, y, guess)
        guess = [seed[k] for k in names]
    fit = least_squares_fit(model, v, y, guess, weights=w, absolute_sigma=sigma is not None)
    ssr1 = fit.residual_norm
    dof = n - 3
    if sigma is not None:
        pval = stats.chi2.sf(max(ssr0 - ssr1, 0.0), 2)
    elif dof > 0 and ssr1 > 0:
        F = ((ssr0 - ssr1) / 2) / (ssr1 / dof)
        pval = stats.f.sf(F, 2, dof)
    else:
        pval = 0.0 if ssr1 < ssr0 else 1.0
    if pval > alpha:
        return ExponentialFit(mean, 0.0, 0.0, const_ci, False, fit)
    return ExponentialFit(fit["offset"], fit["amplitude"], fit["rate"], dict(fit.ci95), True, fit)


@dataclass
class OpticalSweepFit:
    kappa_in_o: float  # rad/s
    kappa_ex_max: float  # rad/s, coupling rate extrapolated to V = 0
    decay_per_volt: float  # 1/V, kappa_ex = kappa_ex_max * exp(decay_per_volt * V)
    lambda_sq: float
    ci95: dict
    critical_crossed: bool
    critical_voltage: float
    traces: list = field(default_factory=list)
    exponential: ExponentialFit | None = None


def fit_optical_coupling_sweep(traces, voltages=None, baseline_order: int = 0) -> OpticalSweepFit:
    """Extract intrinsic loss, coupling law and mode match from a prism sweep.

    Each trace is fit for its total linewidth, then ``kappa_o(V) = kappa_in +
    kappa_ex_max exp(s V)`` gives the offset. The mode match comes from the
    dip depth of the trace closest to critical coupling. If the sweep never
    crosses critical coupling that estimate rests on extrapolation; its
    confidence interval is doubled and `critical_crossed` is False.
    """
    if voltages is None:
        voltages = [float(t.meta["piezo_v"]) for t in traces]
    v = np.asarray(voltages, dtype=float)
    if v.size < 5:
        raise FitError("optical coupling sweep needs at least 5 voltage points")
    fits = [fit_optical_reflection(t, baseline_order) for t in traces]
    k_o = np.array([ft.kappa_o for ft in fits])
    sd = np.array([ft.ci95["kappa_o"] / _tq(ft.fit) for ft in fits])
    # noiseless traces give zero spread; fall back to unweighted
    expo = fit_exponential_offset(v, k_o, sigma=sd if np.all(sd > 0) else None)
    k_in = expo.offset
    eta = 1.0 - k_in / k_o
    crossed = bool(np.any(eta < 0.5) and np.any(eta > 0.5))
    i = int(np.argmin(np.abs(eta - 0.5)))
    ft = fits[i]
    eta_i = float(np.clip(eta[i], 1e-12, 1 - 1e-12))
    lsq = lambda_sq_from_depth(ft.depth, eta_i)

    # delta-method uncertainty from dip depth, trace linewidth and the offset
    tq_d = _tq(ft.fit)
    sd_depth = ft.ci95["depth"] / tq_d if tq_d > 0 else float("nan")
    sd_ko = ft.ci95["kappa_o"] / tq_d if tq_d > 0 else float("nan")
    if expo.fit is not None and expo.exponential:
        sd_kin = expo.fit.stderr("offset")
    else:
        sd_kin = expo.ci95["offset"] / stats.norm.ppf(0.975) if math.isfinite(expo.ci95["offset"]) else 0.0
    x = lsq * eta_i
    dl_dd = 1.0 / (4.0 * math.sqrt(max(1.0 - ft.depth, 1e-300)) * eta_i)
    dl_deta = -x / eta_i ** 2
    deta_dkin = -1.0 / k_o[i]
    deta_dko = k_in / k_o[i] ** 2
    # depth and linewidth come from the same trace fit and are correlated
    cov_dk = TWO_PI * ft.fit.cov("depth", "kappa")
    a, b = dl_dd, dl_deta * deta_dko
    var_l = ((a * sd_depth) ** 2 + (b * sd_ko) ** 2 + 2 * a * b * cov_dk
             + (dl_deta * deta_dkin * sd_kin) ** 2)
    sd_l = math.sqrt(max(var_l, 0.0))
    ci_l = 1.96 * sd_l * (1.0 if crossed else 2.0)
    if not crossed:
        warnings.warn("optical sweep never crosses critical coupling; Lambda^2 is extrapolated")
    ci = {"kappa_in_o": expo.ci95["offset"], "kappa_ex_max": expo.ci95["amplitude"],
          "decay_per_volt": expo.ci95["rate"], "lambda_sq": ci_l}
    return OpticalSweepFit(k_in, expo.amplitude, expo.rate, lsq, ci, crossed, float(v[i]),
                           fits, expo)


@dataclass
class ConversionFit:
    omega_center: float  # rad/s offset of the peak from the trace center
    peak: float
    kappa_o: float
    kappa_e: float
    ci95: dict
    fit: FitResult


def fit_conversion_spectrum(trace, kappa_o: float | None = None, kappa_e: float | None = None,
                            init: dict | None = None) -> ConversionFit:
    """Fit a conversion power trace with the two-mode conversion lineshape.

    Linewidths (rad/s) that are supplied are held fixed. `init` overrides
    starting values of the fit parameters (``f0``, ``kappa_o``, ``kappa_e``
    in Hz relative to the trace center, ``peak``).
    """
    f, y = _xy(trace)
    fc = 0.5 * (f[0] + f[-1])
    x = f - fc
    peak, x0, width = _peak_guess(x, y)
    names = ["f0", "peak", "kappa_o", "kappa_e"]
    fixed = {}
    k_guess = 1.554 * width  # equal-linewidth relation between FWHM and kappa
    g_o, g_e = 1.2 * k_guess, 0.8 * k_guess
    if kappa_o is not None:
        fixed["kappa_o"] = g_o = kappa_o / TWO_PI
    if kappa_e is not None:
        fixed["kappa_e"] = g_e = kappa_e / TWO_PI

    def func(p, xx):
        return p[1] * conversion_spectrum_norm(p[2], p[3], xx - p[0])

    half = 0.5 * (f[-1] - f[0])
    start = dict(zip(names, [x0, peak, g_o, g_e]))
    start.update({k: v for k, v in (init or {}).items() if k not in fixed})
    model = ModelSpec(func, names, lower=[-half, 0.0, 1e-9 * half, 1e-9 * half],
                      fixed=fixed, scales=[k_guess, peak or 1.0, k_guess, k_guess])
    fit = least_squares_fit(model, x, y, [start[n] for n in names])
    ci = {"omega_center": TWO_PI * fit.ci95["f0"], "peak": fit.ci95["peak"],
          "kappa_o": TWO_PI * fit.ci95["kappa_o"], "kappa_e": TWO_PI * fit.ci95["kappa_e"]}
    return ConversionFit(TWO_PI * fit["f0"], fit["peak"], TWO_PI * fit["kappa_o"],
                         TWO_PI * fit["kappa_e"], ci, fit)


@dataclass
class NoiseFit:
    baths: NoiseBaths
    ci95: dict  # n_b, n_wg, n_out
    n_out_peak: float
    clipped: tuple
    fit: FitResult
    kappa_in_e: float
    kappa_ex_e: float

    def mode_occupancy(self):
        """(N_e, 95% half-width)."""
        eta = self.kappa_ex_e / (self.kappa_in_e + self.kappa_ex_e)
        n_e = mode_occupancy(eta, self.baths)
        var = _lin_var(self.fit, {"n_wg": eta, "n_b": 1 - eta})
        return n_e, _tq(self.fit) * math.sqrt(var)


def _lin_var(fit: FitResult, coeffs: dict) -> float:
    names = [n for n in coeffs if n in fit.free_names]
    var = 0.0
    for a in names:
        for b in names:
            var += coeffs[a] * coeffs[b] * fit.cov(a, b)
    return max(var, 0.0)


def fit_noise_spectrum(spectrum: NoiseSpectrum, kappas, n_sys: float, init: dict | None = None) -> NoiseFit:
    """Two-bath fit of a calibrated output-noise spectrum.

    `kappas` is ``(kappa_in_e, kappa_ex_e)`` in rad/s from the reflection fit.
    A negative best-fit bath is clipped to zero (with a warning) and the other
    bath refit.
    """
    k_in, k_ex = kappas
    w = spectrum.freq_offsets
    y = spectrum.n_det
    if np.ptp(w) < 3 * (k_in + k_ex):
        raise FitError("noise spectrum must span at least 3 linewidths")
    L = lorentzian_weight(k_in, k_ex, w)
    A = np.column_stack([L, 1 - L])
    nb0, nwg0 = np.linalg.lstsq(A, y - n_sys, rcond=None)[0]
    if init:
        nb0, nwg0 = init.get("n_b", nb0), init.get("n_wg", nwg0)

    def func(p, x):
        return lorentzian_weight(k_in, k_ex, x) * (p[0] - p[1]) + p[1] + n_sys

    names = ["n_b", "n_wg"]
    scales = [max(abs(nb0), 1e-2), max(abs(nwg0), 1e-2)]
    fit = least_squares_fit(ModelSpec(func, names, scales=scales), w, y, [nb0, nwg0])
    clipped = []
    for name in names:
        if fit[name] < 0:
            warnings.warn(f"best-fit {name} = {fit[name]:.3g} < 0, clipped to 0")
            clipped.append(name)
    if len(clipped) == 1:
        start = [max(fit[n], 0.0) for n in names]
        fit = least_squares_fit(ModelSpec(func, names, fixed={clipped[0]: 0.0}, scales=scales),
                                w, y, start)
    elif clipped:
        fit.params.update({n: 0.0 for n in clipped})
    baths = NoiseBaths(n_wg=max(fit["n_wg"], 0.0), n_b=max(fit["n_b"], 0.0))
    L0 = float(lorentzian_weight(k_in, k_ex, 0.0))
    n_out = L0 * (baths.n_b - baths.n_wg) + baths.n_wg
    tq = _tq(fit)
    var_out = _lin_var(fit, {"n_b": L0, "n_wg": 1 - L0})
    ci = {"n_b": fit.ci95["n_b"], "n_wg": fit.ci95["n_wg"], "n_out": tq * math.sqrt(var_out)}
    return NoiseFit(baths, ci, n_out, tuple(clipped), fit, k_in, k_ex)


@dataclass
class RadiometerFit:
    beta4: PowerDb
    n_add: float
    ci95: dict  # beta4_db, n_add
    degenerate: bool
    fit: FitResult


def linear_regime_onset(omega_e: float) -> float:
    """Temperature above which 0.5 coth(hbar w / 2kT) is within 1% of k_B T / hbar w."""
    return CONSTS.hbar * omega_e / (CONSTS.k_B * math.sqrt(0.12))


def fit_radiometer(points, omega_e: float, bw: float = 1.0, init: dict | None = None) -> RadiometerFit:
    """Fit chain gain and added noise to matched-load noise power versus temperature.

    `points` carry PSD in W/Hz; the model is compared in units of
    ``hbar omega_e`` per second per Hz, so `bw` cancels unless the PSDs were
    recorded per bin (then pass the bin width used to divide them).
    """
    pts = list(points)
    if len(pts) < 4:
        raise FitError("radiometric calibration needs at least 4 temperature points")
    t = np.array([p.t_load for p in pts], dtype=float)
    y = np.array([p.psd * bw for p in pts], dtype=float) / (CONSTS.hbar * omega_e * bw)
    occ = half_coth_occupation(omega_e, t)
    degenerate = bool(t.min() >= linear_regime_onset(omega_e))
    if degenerate:
        warnings.warn("all load temperatures lie in the linear regime; gain and added noise are degenerate")
    gain0, off0 = np.polyfit(occ, y, 1)
    gain0 = gain0 if gain0 > 0 else float(np.mean(y))
    n_add0 = off0 / gain0

    def func(p, temps):
        return 10.0 ** (p[0] / 10.0) * (half_coth_occupation(omega_e, temps) + p[1])

    b0 = 10.0 * math.log10(gain0)
    if init:
        b0, n_add0 = init.get("beta4_db", b0), init.get("n_add", n_add0)
    model = ModelSpec(func, ["beta4_db", "n_add"], scales=[max(abs(b0), 1.0), max(abs(n_add0), 1.0)])
    fit = least_squares_fit(model, t, y, [b0, n_add0])
    ci = {"beta4_db": fit.ci95["beta4_db"], "n_add": fit.ci95["n_add"]}
    return RadiometerFit(PowerDb(fit["beta4_db"]), fit["n_add"], ci, degenerate, fit)


@dataclass
class PowerLawFit:
    exponent: float
    prefactor: float
    ci95: dict


def fit_power_law(x, y) -> PowerLawFit:
    """Fit ``y = prefactor * x**exponent`` by linear least squares in log-log space."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise FitError("power-law fit needs at least two matching points")
    if np.any(~(x > 0)) or np.any(~(y > 0)):
        raise FitError("power-law fit needs strictly positive data")
    lx, ly = np.log(x), np.log(y)
    A = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    slope, icpt = coef
    dof = x.size - 2
    if dof > 0:
        res = ly - A @ coef
        s2 = float(res @ res) / dof
        cov = s2 * np.linalg.inv(A.T @ A)
        tq = stats.t.ppf(0.975, dof)
        ci = {"exponent": float(tq * math.sqrt(cov[0, 0])),
              "prefactor": float(math.exp(icpt) * tq * math.sqrt(cov[1, 1]))}
    else:
        ci = {"exponent": float("nan"), "prefactor": float("nan")}
    return PowerLawFit(float(slope), float(math.exp(icpt)), ci)
