"""Scenario configuration (YAML).

Every dimensional key carries its unit as a suffix (``_hz``, ``_w``, ``_db``,
``_k``, ``_s``, ``_v``). Unknown keys are rejected so that a typo cannot
silently fall back to a default. A minimal file::

    device:
      mw_freq_hz: 8.818e9
      kappa_in_e_hz: 11.15e6
      kappa_ex_e_hz: 3.7e6
      pump_freq_hz: 193.5e12
      kappa_in_o_hz: 9.46e6
      kappa_ex_o_hz: 9.46e6
      fsr_hz: 8.818e9
      g0_hz: 40
      lambda_sq: 0.38
    power_grid:
      pump_power_w: [1.0e-6, 1.0e-5, 1.48e-3]
"""
from __future__ import annotations

import hashlib
import math
import os
from dataclasses import dataclass, field

import numpy as np
import yaml

from ..device import DeviceParams, ResonatorMode
from ..noise import NoiseBaths
from ..physics import TWO_PI, AngularFrequency, PowerDb
from ..transduction import CalibrationChain


class ConfigError(ValueError):
    code = "config"


_DEVICE_KEYS = {
    "mw_freq_hz": None, "kappa_in_e_hz": None, "kappa_ex_e_hz": None,
    "pump_freq_hz": None, "kappa_in_o_hz": None, "kappa_ex_o_hz": None,
    "fsr_hz": None, "g0_hz": None, "lambda_sq": None,
    "signal_freq_hz": "optional", "kappa_in_p_hz": "optional", "kappa_ex_p_hz": "optional",
    "m_pump": "optional", "m_mw": "optional", "fsr_tolerance_hz": "optional",
}
_CHAIN_KEYS = {"beta1_db", "beta2_db", "beta3_db", "beta4_db", "n_sys"}
_OPTION_KEYS = {"baseline_order", "off_resonance", "off_resonance_fraction", "pump_detuning_hz",
                "mw_regime", "invariant_rtol", "sideband_suppression_db", "noise_systematic_quanta"}
# measured quantities outside the two-mode model, copied into reports unchanged
PASSTHROUGH_OPTIONS = ("sideband_suppression_db", "noise_systematic_quanta")
_TOP_KEYS = {"device", "chain", "power_grid", "kappa_e_table", "beta2_table", "baths",
             "heating", "options", "sweep", "calibration", "synth"}
_SWEEP_AXES = {"pump_power_w", "g0_hz", "lambda_sq", "kappa_in_e_hz", "kappa_ex_e_hz",
               "kappa_in_o_hz", "kappa_ex_o_hz"}


def _check_keys(section: str, d, allowed):
    if not isinstance(d, dict):
        raise ConfigError(f"section {section!r} must be a mapping")
    unknown = sorted(set(d) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {section!r}: {', '.join(unknown)}")


def _num(section, key, v, lo=None, hi=None, strict_lo=False):
    try:
        x = float(v)
    except (TypeError, ValueError):
        raise ConfigError(f"{section}.{key} must be a number, got {v!r}") from None
    if not math.isfinite(x):
        raise ConfigError(f"{section}.{key} must be finite")
    if lo is not None and (x < lo or (strict_lo and x == lo)):
        raise ConfigError(f"{section}.{key} must be {'>' if strict_lo else '>='} {lo}, got {x}")
    if hi is not None and x > hi:
        raise ConfigError(f"{section}.{key} must be <= {hi}, got {x}")
    return x


def _num_list(section, key, v, lo=None, strict_lo=False):
    if not isinstance(v, (list, tuple)) or not v:
        raise ConfigError(f"{section}.{key} must be a non-empty list")
    return [_num(section, key, x, lo, strict_lo=strict_lo) for x in v]


@dataclass(frozen=True)
class PowerLaw:
    """``prefactor * (P / reference_power_w) ** exponent``, used for bath occupancies."""

    prefactor: float
    exponent: float
    reference_power_w: float = 1.0

    def __call__(self, p):
        return self.prefactor * (np.asarray(p, dtype=float) / self.reference_power_w) ** self.exponent


@dataclass(frozen=True)
class Table:
    """Piecewise-linear table in pump power, clamped at the ends."""

    power_w: tuple
    values: tuple

    def __call__(self, p):
        return float(np.interp(p, self.power_w, self.values))


def _table(section, d, value_key, lo=None, strict_lo=False):
    _check_keys(section, d, {"pump_power_w", value_key})
    if "pump_power_w" not in d or value_key not in d:
        raise ConfigError(f"{section} needs pump_power_w and {value_key}")
    p = _num_list(section, "pump_power_w", d["pump_power_w"], 0.0)
    v = _num_list(section, value_key, d[value_key], lo, strict_lo)
    if len(p) != len(v):
        raise ConfigError(f"{section}: pump_power_w and {value_key} differ in length")
    if any(b <= a for a, b in zip(p, p[1:])):
        raise ConfigError(f"{section}.pump_power_w must be strictly increasing")
    return Table(tuple(p), tuple(v))


@dataclass
class ScenarioConfig:
    device: DeviceParams
    chain: CalibrationChain | None = None
    pump_powers: tuple = ()
    kappa_e_table: Table | None = None  # total microwave linewidth (Hz) vs pump power
    beta2_table: Table | None = None  # optical output gain (dB) vs pump power
    bath_laws: dict = field(default_factory=dict)  # "n_wg"/"n_b" -> PowerLaw
    heating: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    calibration: dict = field(default_factory=dict)
    synth: dict = field(default_factory=dict)
    source_path: str | None = None
    sha256: str = ""

    @property
    def baseline_order(self) -> int:
        return int(self.options.get("baseline_order", 0))

    @property
    def off_resonance(self) -> str:
        return self.options.get("off_resonance", "median_outer")

    @property
    def pump_detuning(self) -> float:
        return TWO_PI * float(self.options.get("pump_detuning_hz", 0.0))

    def device_at(self, pump_power: float) -> DeviceParams:
        """Device with the microwave intrinsic loss taken from the linewidth table, if any."""
        if self.kappa_e_table is None:
            return self.device
        k_e = TWO_PI * self.kappa_e_table(pump_power)
        k_in = k_e - self.device.mw.kappa_ex
        if k_in <= 0:
            raise ConfigError(f"kappa_e table gives a linewidth below kappa_ex_e at P = {pump_power} W")
        return self.device.with_mw_kappa_in(k_in)

    def chain_at(self, pump_power: float) -> CalibrationChain | None:
        if self.chain is None or self.beta2_table is None:
            return self.chain
        c = self.chain
        return CalibrationChain(c.beta1, PowerDb(self.beta2_table(pump_power)), c.beta3, c.beta4, c.n_sys)

    def baths_at(self, pump_power: float) -> NoiseBaths | None:
        if not self.bath_laws:
            return None
        return NoiseBaths(n_wg=float(self.bath_laws["n_wg"](pump_power)),
                          n_b=float(self.bath_laws["n_b"](pump_power)))

    def resolve(self, path: str) -> str:
        """Interpret `path` relative to the config file's directory."""
        if os.path.isabs(path) or self.source_path is None:
            return path
        return os.path.join(os.path.dirname(os.path.abspath(self.source_path)), path)


def _device(d) -> DeviceParams:
    _check_keys("device", d, _DEVICE_KEYS)
    missing = sorted(k for k, opt in _DEVICE_KEYS.items() if opt is None and k not in d)
    if missing:
        raise ConfigError(f"device section lacks: {', '.join(missing)}")
    g = lambda k, **kw: _num("device", k, d[k], **kw)  # noqa: E731
    f_e = g("mw_freq_hz", lo=0, strict_lo=True)
    f_p = g("pump_freq_hz", lo=0, strict_lo=True)
    fsr = g("fsr_hz", lo=0, strict_lo=True)
    f_s = g("signal_freq_hz", lo=0, strict_lo=True) if "signal_freq_hz" in d else f_p + fsr
    k_in_o = g("kappa_in_o_hz", lo=0, strict_lo=True)
    k_ex_o = g("kappa_ex_o_hz", lo=0)
    k_in_p = g("kappa_in_p_hz", lo=0, strict_lo=True) if "kappa_in_p_hz" in d else k_in_o
    k_ex_p = g("kappa_ex_p_hz", lo=0) if "kappa_ex_p_hz" in d else k_ex_o
    m_p = int(d.get("m_pump", 0))
    m_e = int(d.get("m_mw", 1))
    tol = g("fsr_tolerance_hz", lo=0) if "fsr_tolerance_hz" in d else 1e6
    try:
        mw = ResonatorMode.from_hz(f_e, g("kappa_in_e_hz", lo=0, strict_lo=True),
                                   g("kappa_ex_e_hz", lo=0), m_e)
        pump = ResonatorMode.from_hz(f_p, k_in_p, k_ex_p, m_p)
        signal = ResonatorMode.from_hz(f_s, k_in_o, k_ex_o, m_p + m_e)
        return DeviceParams(mw, pump, signal, TWO_PI * g("g0_hz", lo=0), g("lambda_sq", lo=0, hi=1),
                            AngularFrequency.from_hz(fsr), TWO_PI * tol)
    except ValueError as exc:
        raise ConfigError(f"device: {exc}") from None


def _power_law(section, d):
    _check_keys(section, d, {"prefactor", "exponent", "reference_power_w"})
    if "prefactor" not in d or "exponent" not in d:
        raise ConfigError(f"{section} needs prefactor and exponent")
    return PowerLaw(_num(section, "prefactor", d["prefactor"], 0.0),
                    _num(section, "exponent", d["exponent"]),
                    _num(section, "reference_power_w", d.get("reference_power_w", 1.0), 0.0, strict_lo=True))


def _power_grid(d):
    _check_keys("power_grid", d, {"pump_power_w", "start_w", "stop_w", "num", "spacing"})
    if "pump_power_w" in d:
        if set(d) - {"pump_power_w"}:
            raise ConfigError("power_grid: give either pump_power_w or start_w/stop_w/num")
        grid = _num_list("power_grid", "pump_power_w", d["pump_power_w"], 0.0)
    else:
        for k in ("start_w", "stop_w", "num"):
            if k not in d:
                raise ConfigError(f"power_grid needs {k}")
        a = _num("power_grid", "start_w", d["start_w"], 0.0, strict_lo=True)
        b = _num("power_grid", "stop_w", d["stop_w"], 0.0, strict_lo=True)
        n = int(_num("power_grid", "num", d["num"], 1))
        spacing = d.get("spacing", "log")
        if spacing == "log":
            grid = list(np.geomspace(a, b, n))
        elif spacing == "linear":
            grid = list(np.linspace(a, b, n))
        else:
            raise ConfigError("power_grid.spacing must be 'log' or 'linear'")
    return tuple(sorted(set(float(p) for p in grid)))


def parse_config(raw: dict, source_path: str | None = None, sha256: str = "") -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    _check_keys("<root>", raw, _TOP_KEYS)
    if "device" not in raw:
        raise ConfigError("config needs a device section")
    cfg = ScenarioConfig(device=_device(raw["device"]), source_path=source_path, sha256=sha256)

    if "chain" in raw:
        c = raw["chain"]
        _check_keys("chain", c, _CHAIN_KEYS)
        missing = sorted(_CHAIN_KEYS - set(c) - {"n_sys"})
        if missing:
            raise ConfigError(f"chain lacks: {', '.join(missing)}")
        try:
            cfg.chain = CalibrationChain(*(PowerDb(_num("chain", k, c[k])) for k in
                                           ("beta1_db", "beta2_db", "beta3_db", "beta4_db")),
                                         n_sys=_num("chain", "n_sys", c.get("n_sys", 0.5)))
        except ValueError as exc:
            raise ConfigError(f"chain: {exc}") from None

    if "power_grid" in raw:
        cfg.pump_powers = _power_grid(raw["power_grid"])
    if "kappa_e_table" in raw:
        cfg.kappa_e_table = _table("kappa_e_table", raw["kappa_e_table"], "kappa_e_hz", 0.0, True)
        for p, k in zip(cfg.kappa_e_table.power_w, cfg.kappa_e_table.values):
            if TWO_PI * k <= cfg.device.mw.kappa_ex:
                raise ConfigError(f"kappa_e_table: {k} Hz at {p} W is not above kappa_ex_e")
    if "beta2_table" in raw:
        cfg.beta2_table = _table("beta2_table", raw["beta2_table"], "beta2_db")

    if "baths" in raw:
        b = raw["baths"]
        _check_keys("baths", b, {"n_wg", "n_b"})
        if set(b) != {"n_wg", "n_b"}:
            raise ConfigError("baths needs both n_wg and n_b power laws")
        cfg.bath_laws = {k: _power_law(f"baths.{k}", v) for k, v in b.items()}

    if "heating" in raw:
        h = raw["heating"]
        _check_keys("heating", h, {"rate_ref_per_s", "p_ref_w", "pulse_duration_s"})
        if set(h) != {"rate_ref_per_s", "p_ref_w", "pulse_duration_s"}:
            raise ConfigError("heating needs rate_ref_per_s, p_ref_w and pulse_duration_s")
        cfg.heating = {"rate_ref_per_s": _num("heating", "rate_ref_per_s", h["rate_ref_per_s"], 0.0),
                       "p_ref_w": _num("heating", "p_ref_w", h["p_ref_w"], 0.0, strict_lo=True),
                       "pulse_duration_s": _num("heating", "pulse_duration_s", h["pulse_duration_s"], 0.0)}

    opts = dict(raw.get("options", {}) or {})
    _check_keys("options", opts, _OPTION_KEYS)
    if "baseline_order" in opts:
        bo = opts["baseline_order"]
        if not isinstance(bo, int) or isinstance(bo, bool) or not 0 <= bo <= 3:
            raise ConfigError("options.baseline_order must be an integer in 0..3")
    if opts.get("off_resonance", "median_outer") not in ("median_outer", "baseline"):
        raise ConfigError("options.off_resonance must be 'median_outer' or 'baseline'")
    if opts.get("mw_regime", "under") not in ("under", "over"):
        raise ConfigError("options.mw_regime must be 'under' or 'over'")
    if "off_resonance_fraction" in opts:
        _num("options", "off_resonance_fraction", opts["off_resonance_fraction"], 0.0, 0.5, strict_lo=True)
    if "pump_detuning_hz" in opts:
        _num("options", "pump_detuning_hz", opts["pump_detuning_hz"])
    if "noise_systematic_quanta" in opts:
        _num("options", "noise_systematic_quanta", opts["noise_systematic_quanta"], 0.0)
    if "sideband_suppression_db" in opts:
        _num("options", "sideband_suppression_db", opts["sideband_suppression_db"])
    if "invariant_rtol" in opts:
        _num("options", "invariant_rtol", opts["invariant_rtol"], 0.0)
    cfg.options = opts

    if "sweep" in raw:
        s = raw["sweep"]
        _check_keys("sweep", s, _SWEEP_AXES)
        axes = {}
        for k, v in s.items():
            hi = 1.0 if k == "lambda_sq" else None
            vals = _num_list("sweep", k, v, 0.0)
            if hi is not None and any(x > hi for x in vals):
                raise ConfigError("sweep.lambda_sq values must lie in [0, 1]")
            axes[k] = tuple(vals)
        cfg.sweep = axes

    if "calibration" in raw:
        c = raw["calibration"]
        _check_keys("calibration", c, {"radiometer_file", "bandwidth_hz", "extra_loss_db",
                                       "s_ee_off_db", "optical"})
        cal = dict(c)
        if "radiometer_file" in cal:
            path = cfg.resolve(str(cal["radiometer_file"]))
            if not os.path.isfile(path):
                raise ConfigError(f"calibration.radiometer_file not found: {path}")
            cal["radiometer_file"] = path
        if "extra_loss_db" in cal:
            cal["extra_loss_db"] = _num("calibration", "extra_loss_db", cal["extra_loss_db"], 0.0)
        if "bandwidth_hz" in cal:
            cal["bandwidth_hz"] = _num("calibration", "bandwidth_hz", cal["bandwidth_hz"], 0.0, strict_lo=True)
        if "s_ee_off_db" in cal:
            cal["s_ee_off_db"] = _num("calibration", "s_ee_off_db", cal["s_ee_off_db"])
        if "optical" in cal:
            o = cal["optical"]
            keys = {"eta_tot", "p_in_e_w", "p_out_o_w", "p_in_o_w", "p_out_e_w"}
            _check_keys("calibration.optical", o, keys)
            if set(o) != keys:
                raise ConfigError(f"calibration.optical needs {', '.join(sorted(keys))}")
            cal["optical"] = {k: _num("calibration.optical", k, o[k], 0.0, strict_lo=True) for k in keys}
        cfg.calibration = cal

    if "synth" in raw:
        s = raw["synth"]
        _check_keys("synth", s, {"seed", "noise_rel", "points", "span_linewidths"})
        cfg.synth = dict(s)
    return cfg


def load_config(path) -> ScenarioConfig:
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    try:
        raw = yaml.safe_load(data)
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML in {path}: {exc}") from None
    return parse_config(raw, source_path=str(path), sha256=hashlib.sha256(data).hexdigest())
