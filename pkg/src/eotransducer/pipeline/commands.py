"""End-to-end analysis commands behind the CLI."""
from __future__ import annotations

import itertools
import logging
import math
import os
import warnings

import numpy as np

from .. import __version__
from ..device import DeviceParams, OperatingPoint, ResonatorMode
from ..fitting import (FitError, fit_conversion_spectrum, fit_microwave_reflection, fit_noise_spectrum,
                       fit_optical_reflection, fit_radiometer)
from ..noise import (NoiseSpectrum, chain_correction, detected_noise_spectrum, heating_projection,
                     mode_occupancy, normalize_baseline, output_noise_peak)
from ..physics import TWO_PI, PowerDb
from ..transduction import (CalibrationChain, SParamSet, bandwidth, conversion_matrix,
                            conversion_spectrum_norm, cooperativity_from_eta_internal, eta_internal,
                            eta_total, optical_line_gains, self_calibrated_efficiency)
from .config import PASSTHROUGH_OPTIONS, ScenarioConfig
from .report import Report, empty_row, sha256_file, write_report_files
from .synth import synth_noise_pair, synth_power_point, synth_radiometer
from .traces import SpectrumTrace, TraceKind, load_radiometer, load_trace, save_radiometer, save_trace

log = logging.getLogger(__name__)

SPECTRUM_POINTS = 401


def _passthrough(cfg: ScenarioConfig, rep: Report):
    """Copy measured-only quantities (not predicted by the model) into the report."""
    meta = {k: float(cfg.options[k]) for k in PASSTHROUGH_OPTIONS if k in cfg.options}
    if meta:
        rep.extra["measured"] = meta


def _provenance(cfg: ScenarioConfig | None, inputs: dict | None = None, command: str = "") -> dict:
    return {"tool_version": __version__, "command": command,
            "config_sha256": cfg.sha256 if cfg is not None else "",
            "inputs": dict(sorted((inputs or {}).items()))}


# ---------------------------------------------------------------- simulate

def simulate_row(cfg: ScenarioConfig, dev: DeviceParams, pump_power: float) -> dict:
    """Forward-model values for one pump power on `dev`."""
    op = OperatingPoint(dev, pump_power, cfg.pump_detuning)
    C = op.cooperativity
    row = empty_row(pump_power)
    row.update(n_p=op.n_p, cooperativity=C,
               eta_tot=eta_total(dev.eta_e, dev.eta_o, dev.lambda_sq, C),
               eta_int=eta_internal(C), bandwidth_hz=bandwidth(dev.kappa_o, dev.kappa_e) / TWO_PI,
               eta_bound=dev.eta_e * dev.eta_o * dev.lambda_sq)
    baths = cfg.baths_at(pump_power)
    if baths is not None:
        row.update(n_wg=baths.n_wg, n_b=baths.n_b, n_e=mode_occupancy(dev.eta_e, baths),
                   n_out=output_noise_peak(dev.mw.kappa_in, dev.mw.kappa_ex, baths))
    return row


def cmd_simulate(cfg: ScenarioConfig) -> Report:
    """Evaluate the forward model on the configured power grid."""
    rep = Report("simulate", provenance=_provenance(cfg, command="simulate"))
    _passthrough(cfg, rep)
    if not cfg.pump_powers:
        rep.diagnostics.append("power grid is empty")
        return rep
    devs = [cfg.device_at(p) for p in cfg.pump_powers]
    for p, dev in zip(cfg.pump_powers, devs):
        rep.rows.append(simulate_row(cfg, dev, p))

    widest = max(max(d.kappa_o, d.kappa_e) for d in devs)
    w = np.linspace(-3 * widest, 3 * widest, SPECTRUM_POINTS)
    conv_cols = ["detuning_hz"] + [f"eta_oe_{p:.6g}W" for p in cfg.pump_powers]
    conv = [w / TWO_PI]
    for p, dev in zip(cfg.pump_powers, devs):
        G = OperatingPoint(dev, p, cfg.pump_detuning).G
        conv.append(conversion_matrix(dev, G, w).eta_oe)
    rep.spectra["conversion"] = {"columns": conv_cols, "data": np.column_stack(conv).tolist()}
    if cfg.bath_laws:
        cols = ["detuning_hz"] + [f"n_out_{p:.6g}W" for p in cfg.pump_powers]
        data = [w / TWO_PI]
        for p, dev in zip(cfg.pump_powers, devs):
            data.append(detected_noise_spectrum(dev.mw.kappa_in, dev.mw.kappa_ex, cfg.baths_at(p), 0.0, w))
        rep.spectra["noise"] = {"columns": cols, "data": np.column_stack(data).tolist()}
    rep.validate(cfg.options.get("invariant_rtol", 1e-9))
    return rep


# ---------------------------------------------------------------- fit

def _off_level(trace: SpectrumTrace, fit, cfg: ScenarioConfig) -> float:
    if cfg.off_resonance == "baseline":
        return fit.baseline_at_resonance
    frac = float(cfg.options.get("off_resonance_fraction", 0.1))
    n = max(1, int(round(frac * trace.value.size / 2)))
    return float(np.median(np.concatenate([trace.value[:n], trace.value[-n:]])))


def _group_traces(traces, rep: Report):
    """Index traces by pump power; noise references (P = 0) are kept apart."""
    groups, refs = {}, []
    for name, tr in traces:
        p = tr.pump_power_w
        if p is None:
            rep.diagnostics.append(f"{name}: no pump_power_w in header, ignored")
            continue
        if tr.kind is TraceKind.NOISE_PSD and p == 0:
            refs.append((name, tr))
            continue
        if tr.kind is TraceKind.CONVERSION:
            if tr.direction not in ("eo", "oe"):
                rep.diagnostics.append(f"{name}: conversion trace needs direction eo or oe, ignored")
                continue
            slot = f"conversion_{tr.direction}"
        else:
            slot = tr.kind.value
        g = groups.setdefault(p, {})
        if slot in g:
            rep.diagnostics.append(f"{name}: second {slot} trace at P = {p:g} W, ignored")
            continue
        g[slot] = (name, tr)
    return groups, refs


def _check_fit(rep: Report, label: str, fit):
    if not fit.converged:
        rep.nonconverged.append(f"{label}: {fit.message}")


def _fit_coherent(cfg, p, g, rep, row, spectra_idx):
    names = ("reflection_mw", "reflection_opt", "conversion_eo", "conversion_oe")
    missing = [n for n in names if n not in g]
    if missing:
        if len(missing) < len(names):
            rep.diagnostics.append(f"P = {p:g} W: missing {', '.join(missing)}; efficiency skipped")
        return None
    (n_mw, mw), (n_opt, opt), (n_eo, eo), (n_oe, oe) = (g[n] for n in names)
    order = cfg.baseline_order
    mwf = fit_microwave_reflection(mw, order, cfg.options.get("mw_regime", "under"))
    _check_fit(rep, n_mw, mwf.fit)
    if mwf.under_resolved:
        rep.diagnostics.append(f"{n_mw}: fewer than 5 points per microwave linewidth")
    of = fit_optical_reflection(opt, order)
    _check_fit(rep, n_opt, of.fit)
    k_o, k_e = of.kappa_o, mwf.kappa_e
    cf_eo = fit_conversion_spectrum(eo, k_o, k_e)
    cf_oe = fit_conversion_spectrum(oe, k_o, k_e)
    _check_fit(rep, n_eo, cf_eo.fit)
    _check_fit(rep, n_oe, cf_oe.fit)

    s = SParamSet(cf_eo.peak, cf_oe.peak, _off_level(mw, mwf, cfg), _off_level(opt, of, cfg))
    eta = self_calibrated_efficiency(s)
    rel = 0.5 * math.hypot(cf_eo.ci95["peak"] / cf_eo.peak, cf_oe.ci95["peak"] / cf_oe.peak)
    dev = cfg.device
    bound = mwf.eta_e * dev.eta_o * dev.lambda_sq
    row.update(eta_tot=eta, eta_tot_ci95=eta * rel, eta_bound=bound,
               bandwidth_hz=bandwidth(k_o, k_e) / TWO_PI,
               n_p=OperatingPoint(dev, p, cfg.pump_detuning).n_p)
    if bound > 0:
        e_int = eta / bound
        row["eta_int"] = e_int
        if e_int <= 1.0:
            C = cooperativity_from_eta_internal(e_int)
            # dC/d eta_int on the C <= 1 branch
            s1 = math.sqrt(1.0 - e_int)
            dC = (1.0 / (1.0 + s1) ** 2 + e_int / ((1.0 + s1) ** 3 * s1)) if s1 > 0 else float("inf")
            row.update(cooperativity=C, cooperativity_ci95=dC * e_int * rel)
        else:
            rep.diagnostics.append(f"P = {p:g} W: internal efficiency {e_int:.4g} > 1, C not inverted")

    # measured conversion shape, scaled to the efficiency estimate
    w = TWO_PI * (eo.freq - 0.5 * (eo.freq[0] + eo.freq[-1])) - cf_eo.omega_center
    model = eta * conversion_spectrum_norm(k_o, k_e, w)
    rep.spectra[f"conversion_{spectra_idx:03d}"] = {
        "columns": ["detuning_hz", "eta_measured", "eta_model"],
        "data": np.column_stack([w / TWO_PI, eta * eo.value / cf_eo.peak, model]).tolist()}
    return mwf


def _fit_noise(cfg, p, g, refs, rep, row, mwf, spectra_idx):
    if "noise_psd" not in g:
        return
    name, tr = g["noise_psd"]
    ref = next((r for r in refs if r[1].freq.shape == tr.freq.shape
                and np.allclose(r[1].freq, tr.freq, rtol=0, atol=1e-6 * np.ptp(tr.freq) / tr.freq.size)),
               None)
    if ref is None:
        rep.diagnostics.append(f"{name}: no pump-off reference on the same frequency grid; noise skipped")
        return
    if cfg.chain is None:
        rep.diagnostics.append(f"{name}: chain (n_sys) not configured; noise skipped")
        return
    n_sys = cfg.chain.n_sys
    if mwf is not None:
        f_e, k_in, k_ex = mwf.omega_e / TWO_PI, mwf.kappa_in_e, mwf.kappa_ex_e
    else:
        dev = cfg.device_at(p)
        f_e, k_in, k_ex = dev.mw.omega0.hz, dev.mw.kappa_in, dev.mw.kappa_ex
    n_det, _ = normalize_baseline(tr.value, ref[1].value, n_sys)
    w = TWO_PI * (tr.freq - f_e)
    nf = fit_noise_spectrum(NoiseSpectrum(w, np.maximum(n_det, 0.0)), (k_in, k_ex), n_sys)
    _check_fit(rep, name, nf.fit)
    for c in nf.clipped:
        rep.diagnostics.append(f"{name}: best-fit {c} < 0, clipped to 0")
    n_e, n_e_ci = nf.mode_occupancy()
    row.update(n_wg=nf.baths.n_wg, n_b=nf.baths.n_b, n_out=nf.n_out_peak, n_e=n_e,
               n_wg_ci95=nf.ci95["n_wg"], n_b_ci95=nf.ci95["n_b"], n_out_ci95=nf.ci95["n_out"],
               n_e_ci95=n_e_ci)
    if not math.isfinite(row["n_p"]):
        row["n_p"] = OperatingPoint(cfg.device, p, cfg.pump_detuning).n_p
    model = detected_noise_spectrum(k_in, k_ex, nf.baths, 0.0, w)
    rep.spectra[f"noise_{spectra_idx:03d}"] = {
        "columns": ["detuning_hz", "n_out_measured", "n_out_model"],
        "data": np.column_stack([w / TWO_PI, n_det - n_sys, model]).tolist()}


def cmd_fit(cfg: ScenarioConfig, traces) -> Report:
    """Fit every power point found in `traces` (paths or :class:`SpectrumTrace`)."""
    inputs, named = {}, []
    for i, t in enumerate(traces):
        if isinstance(t, SpectrumTrace):
            named.append((f"trace[{i}]", t))
        else:
            path = os.fspath(t)
            inputs[path] = sha256_file(path)
            named.append((path, load_trace(path)))
    rep = Report("fit", provenance=_provenance(cfg, inputs, "fit"))
    _passthrough(cfg, rep)
    if not named:
        warnings.warn("no traces given; report is empty")
        rep.diagnostics.append("no traces given")
        return rep
    groups, refs = _group_traces(named, rep)
    for idx, p in enumerate(sorted(groups)):
        g = groups[p]
        row = empty_row(p)
        try:
            mwf = _fit_coherent(cfg, p, g, rep, row, idx)
            _fit_noise(cfg, p, g, refs, rep, row, mwf, idx)
        except FitError as exc:
            rep.diagnostics.append(f"P = {p:g} W: {exc}; row skipped")
            continue
        if all(not math.isfinite(row[c]) for c in ("eta_tot", "n_out")):
            rep.diagnostics.append(f"P = {p:g} W: no complete coherent set or noise trace; row skipped")
            continue
        rep.rows.append(row)
    rep.validate(cfg.options.get("invariant_rtol", 1e-9))
    return rep


# ---------------------------------------------------------------- calibrate

def cmd_calibrate(cfg: ScenarioConfig, radiometer=None):
    """Radiometric output-line calibration, then input and optical line gains.

    `radiometer` is a file path or a list of :class:`RadiometerPoint`;
    default is ``calibration.radiometer_file``. Returns ``(chain, report)``;
    the chain is None when the microwave input level is unavailable.
    """
    cal = cfg.calibration
    inputs = {}
    if radiometer is None:
        radiometer = cal.get("radiometer_file")
        if radiometer is None:
            raise ValueError("no radiometer data: pass a file or set calibration.radiometer_file")
    if isinstance(radiometer, (str, os.PathLike)):
        path = os.fspath(radiometer)
        inputs[path] = sha256_file(path)
        points, _ = load_radiometer(path)
    else:
        points = list(radiometer)
    omega_e = cfg.device.mw.omega0.value
    rf = fit_radiometer(points, omega_e, cal.get("bandwidth_hz", 1.0))
    rep = Report("calibrate", provenance=_provenance(cfg, inputs, "calibrate"))
    _check_fit(rep, "radiometer", rf.fit)
    if rf.degenerate:
        rep.diagnostics.append("all load temperatures in the linear regime: gain and added noise degenerate")
    loss = cal.get("extra_loss_db", 0.0)
    beta4, n_sys = chain_correction(rf.beta4, rf.n_add, PowerDb(loss))
    res = {"beta4_fit_db": rf.beta4.value_db, "beta4_fit_ci95_db": rf.ci95["beta4_db"],
           "n_add_fit": rf.n_add, "n_add_fit_ci95": rf.ci95["n_add"], "extra_loss_db": loss,
           "beta4_db": beta4.value_db, "n_sys": n_sys,
           # the loss shift is exact, so the intervals map through unchanged in dB and scaled in photons
           "beta4_ci95_db": rf.ci95["beta4_db"], "n_sys_ci95": rf.ci95["n_add"] * PowerDb(loss).to_linear(),
           "degenerate": bool(rf.degenerate)}
    chain = None
    beta3 = None
    if "s_ee_off_db" in cal:
        beta3 = PowerDb(cal["s_ee_off_db"]) - beta4
    elif cfg.chain is not None:
        beta3 = cfg.chain.beta3
        rep.diagnostics.append("beta3 taken from the configured chain")
    if beta3 is not None:
        res["beta3_db"] = beta3.value_db
        if "optical" in cal:
            o = cal["optical"]
            b1, b2 = optical_line_gains(o["eta_tot"], beta3, beta4, p_in_e=o["p_in_e_w"],
                                        p_out_o=o["p_out_o_w"], p_in_o=o["p_in_o_w"],
                                        p_out_e=o["p_out_e_w"], omega_e=omega_e,
                                        omega_o=cfg.device.opt_signal.omega0.value)
        elif cfg.chain is not None:
            b1, b2 = cfg.chain.beta1, cfg.chain.beta2
            rep.diagnostics.append("optical line gains taken from the configured chain")
        else:
            b1 = b2 = None
            rep.diagnostics.append("no optical calibration data; beta1 and beta2 unknown")
        if b1 is not None:
            res["beta1_db"], res["beta2_db"] = b1.value_db, b2.value_db
            chain = CalibrationChain(b1, b2, beta3, beta4, n_sys)
    else:
        rep.diagnostics.append("no s_ee_off_db given; beta3 unknown")
    rep.extra["calibration"] = res
    return chain, rep


# ---------------------------------------------------------------- sweep

_AXIS_ORDER = ("g0_hz", "lambda_sq", "kappa_in_e_hz", "kappa_ex_e_hz", "kappa_in_o_hz", "kappa_ex_o_hz")


def _device_variant(base: DeviceParams, combo: dict) -> DeviceParams:
    mw, sig, pump = base.mw, base.opt_signal, base.opt_pump
    if "kappa_in_e_hz" in combo or "kappa_ex_e_hz" in combo:
        mw = ResonatorMode(mw.omega0, TWO_PI * combo.get("kappa_in_e_hz", mw.kappa_in / TWO_PI),
                           TWO_PI * combo.get("kappa_ex_e_hz", mw.kappa_ex / TWO_PI), mw.azimuthal_m)
    if "kappa_in_o_hz" in combo or "kappa_ex_o_hz" in combo:
        k_in = TWO_PI * combo.get("kappa_in_o_hz", sig.kappa_in / TWO_PI)
        k_ex = TWO_PI * combo.get("kappa_ex_o_hz", sig.kappa_ex / TWO_PI)
        sig = ResonatorMode(sig.omega0, k_in, k_ex, sig.azimuthal_m)
        pump = ResonatorMode(pump.omega0, k_in, k_ex, pump.azimuthal_m)
    g0 = TWO_PI * combo["g0_hz"] if "g0_hz" in combo else base.g0
    lsq = combo.get("lambda_sq", base.lambda_sq)
    return DeviceParams(mw, pump, sig, g0, lsq, base.fsr, base.fsr_tolerance)


def unit_cooperativity_power(powers, coops):
    """Pump power where C = 1, by log-log interpolation on the grid.

    Outside the grid the two nearest points are extrapolated along their
    log-log line. Returns ``(power, extrapolated)``; power is inf when C is
    zero everywhere or does not grow with power.
    """
    p = np.asarray(powers, dtype=float)
    c = np.asarray(coops, dtype=float)
    ok = (p > 0) & (c > 0)
    p, c = p[ok], c[ok]
    if p.size == 0:
        return float("inf"), True
    if p.size == 1:
        return float(p[0] / c[0]), True  # C proportional to P through one point
    lp, lc = np.log(p), np.log(c)
    for i in range(p.size - 1):
        if lc[i] * lc[i + 1] <= 0 and lc[i] != lc[i + 1]:
            t = -lc[i] / (lc[i + 1] - lc[i])
            return float(np.exp(lp[i] + t * (lp[i + 1] - lp[i]))), False
    i = p.size - 2 if lc[-1] < 0 else 0
    slope = (lc[i + 1] - lc[i]) / (lp[i + 1] - lp[i])
    if slope <= 0:
        return float("inf"), True
    return float(np.exp(lp[i] - lc[i] / slope)), True


def cmd_sweep(cfg: ScenarioConfig) -> Report:
    """Grid evaluation over pump power and device parameters.

    Rows go to ``extra["sweep"]``; ``extra["unit_cooperativity"]`` lists the
    C = 1 pump power for every non-power combination.
    """
    rep = Report("sweep", provenance=_provenance(cfg, command="sweep"))
    powers = tuple(sorted(cfg.sweep.get("pump_power_w", cfg.pump_powers)))
    if not powers:
        rep.diagnostics.append("no pump powers to sweep")
        return rep
    axes = [(k, cfg.sweep[k]) for k in _AXIS_ORDER if k in cfg.sweep]
    heat = cfg.heating
    table, crossings = [], []
    for values in itertools.product(*(v for _, v in axes)):
        combo = dict(zip((k for k, _ in axes), values))
        cs = []
        for p in powers:
            base = cfg.device if "kappa_in_e_hz" in combo else cfg.device_at(p)
            dev = _device_variant(base, combo)
            r = simulate_row(cfg, dev, p)
            entry = {**{k: float(v) for k, v in combo.items()}, "pump_power_w": p,
                     "cooperativity": r["cooperativity"], "eta_tot": r["eta_tot"],
                     "bandwidth_hz": r["bandwidth_hz"]}
            if heat:
                entry["heating_n_out"] = heating_projection(heat["rate_ref_per_s"], heat["p_ref_w"], p,
                                                            heat["pulse_duration_s"])
            table.append(entry)
            cs.append(r["cooperativity"])
            if not axes:
                rep.rows.append(r)
        p1, extrap = unit_cooperativity_power(powers, cs)
        crossings.append({**{k: float(v) for k, v in combo.items()}, "unit_cooperativity_power_w": p1,
                          "extrapolated": float(extrap)})
    rep.extra["sweep"] = table
    rep.extra["unit_cooperativity"] = crossings
    rep.validate(cfg.options.get("invariant_rtol", 1e-9))
    return rep


# ---------------------------------------------------------------- report

def cmd_report(report: Report, out_dir) -> list:
    """Write summary and plot-data files for `report` into `out_dir`."""
    return write_report_files(report, out_dir)


# ---------------------------------------------------------------- synth

def cmd_synth(cfg: ScenarioConfig, out_dir) -> list:
    """Write a synthetic trace set for every grid power (needs a chain)."""
    if cfg.chain is None:
        raise ValueError("synthetic traces need a configured chain")
    rng = np.random.default_rng(int(cfg.synth.get("seed", 0)))
    noise_rel = float(cfg.synth.get("noise_rel", 0.0))
    written = []
    ref_done = False
    # one noise grid for all powers so a single pump-off reference serves them
    widest = max(cfg.device_at(p).kappa_e for p in cfg.pump_powers) if cfg.pump_powers else 0.0
    noise_w = np.linspace(-10.0, 10.0, 801) * widest
    for i, p in enumerate(cfg.pump_powers):
        dev = cfg.device_at(p)
        chain = cfg.chain_at(p)
        for key, tr in synth_power_point(dev, p, chain, pump_detuning=cfg.pump_detuning,
                                         noise_rel=noise_rel, rng=rng).items():
            path = os.path.join(out_dir, f"p{i:03d}_{key}.txt")
            save_trace(tr, path)
            written.append(path)
        baths = cfg.baths_at(p)
        if baths is not None:
            pumped, ref = synth_noise_pair(dev, p, baths, chain, detuning=noise_w, noise_rel=noise_rel,
                                           rng=rng)
            path = os.path.join(out_dir, f"p{i:03d}_noise_psd.txt")
            save_trace(pumped, path)
            written.append(path)
            if not ref_done:
                path = os.path.join(out_dir, "noise_reference.txt")
                save_trace(ref, path)
                written.append(path)
                ref_done = True
    if "extra_loss_db" in cfg.calibration or "radiometer_file" in cfg.calibration:
        temps = np.geomspace(21.5e-3, 1.8, 16)
        # generating values place the fitted pair before the loss correction
        loss = PowerDb(cfg.calibration.get("extra_loss_db", 0.0))
        b4 = cfg.chain.beta4 + loss
        n_add = (cfg.chain.n_sys - 0.5) / loss.to_linear()
        pts = synth_radiometer(temps, cfg.device.mw.omega0.value, b4, n_add, noise_rel=noise_rel, rng=rng)
        path = os.path.join(out_dir, "calibration", "radiometer.txt")
        save_radiometer(pts, path)
        written.append(path)
    return written
