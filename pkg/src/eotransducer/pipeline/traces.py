"""Plain-text spectrum traces.

File layout::

    # kind: reflection_mw
    # unit_x: Hz
    # unit_y: ratio
    # pump_power_w: 1.48e-3
    8.79e9    0.98
    ...

Header lines are ``# key: value``; the body has two delimited columns
(whitespace or comma). Known keys are ``kind``, ``unit_x``, ``unit_y``,
``rbw_hz``, ``pump_power_w`` and ``piezo_v``; any other key is kept as
string metadata (conversion traces use ``direction: eo|oe``).
"""
from __future__ import annotations

import os
import re
import tempfile
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..noise import RadiometerPoint


class TraceKind(str, Enum):
    REFLECTION_MW = "reflection_mw"
    REFLECTION_OPT = "reflection_opt"
    CONVERSION = "conversion"
    NOISE_PSD = "noise_psd"


class TraceError(ValueError):
    code = "trace_error"


class MalformedTraceError(TraceError):
    code = "malformed"


class NonMonotoneError(TraceError):
    code = "non_monotone"


class UnitMismatchError(TraceError):
    code = "unit_mismatch"


_FREQ_UNITS = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9, "thz": 1e12}
_RATIO_UNITS = ("ratio", "db")
_POWER_UNITS = ("w", "mw", "dbm", "w/hz")


@dataclass(frozen=True)
class SpectrumTrace:
    """A frequency-indexed measurement.

    `freq` is in Hz. `value` is a linear power ratio for reflection and
    conversion traces and W per resolution-bandwidth bin for ``noise_psd``.
    """

    freq: np.ndarray
    value: np.ndarray
    kind: TraceKind
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        f = np.asarray(self.freq, dtype=float)
        v = np.asarray(self.value, dtype=float)
        object.__setattr__(self, "kind", TraceKind(self.kind))
        object.__setattr__(self, "meta", {str(k): str(val) for k, val in self.meta.items()})
        if f.ndim != 1 or f.shape != v.shape:
            raise MalformedTraceError("freq and value must be 1-D arrays of equal length")
        if f.size < 2:
            raise MalformedTraceError("trace needs at least two points")
        if not np.all(np.isfinite(f)) or not np.all(np.isfinite(v)):
            raise MalformedTraceError("trace contains non-finite values")
        if np.any(np.diff(f) <= 0):
            raise NonMonotoneError("frequency column must be strictly increasing")
        if self.kind is TraceKind.NOISE_PSD and "rbw_hz" not in self.meta:
            raise UnitMismatchError("noise_psd traces need rbw_hz in the header")
        object.__setattr__(self, "freq", f)
        object.__setattr__(self, "value", v)

    def _float_meta(self, key):
        v = self.meta.get(key)
        return None if v is None else float(v)

    @property
    def pump_power_w(self):
        return self._float_meta("pump_power_w")

    @property
    def piezo_v(self):
        return self._float_meta("piezo_v")

    @property
    def rbw_hz(self):
        return self._float_meta("rbw_hz")

    @property
    def direction(self):
        return self.meta.get("direction")


_HEADER_RE = re.compile(r"^#\s*([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(.*?)\s*$")


def _read(path):
    header, rows = {}, []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            if s.startswith("#"):
                m = _HEADER_RE.match(s)
                if m is None:
                    if rows:
                        continue
                    raise MalformedTraceError(f"{path}:{lineno}: header line is not '# key: value'")
                key = m.group(1).lower()
                if key in header:
                    raise MalformedTraceError(f"{path}:{lineno}: duplicate header key {key!r}")
                header[key] = m.group(2)
                continue
            parts = [p for p in re.split(r"[,\s]+", s) if p]
            if len(parts) != 2:
                raise MalformedTraceError(f"{path}:{lineno}: expected 2 columns, got {len(parts)}")
            try:
                rows.append((float(parts[0]), float(parts[1])))
            except ValueError as exc:
                raise MalformedTraceError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise MalformedTraceError(f"{path}: no data rows")
    data = np.array(rows)
    return header, data[:, 0], data[:, 1]


def _convert_y(kind: TraceKind, unit_y: str, y: np.ndarray, rbw):
    u = unit_y.lower()
    if kind is TraceKind.NOISE_PSD:
        if u not in _POWER_UNITS:
            raise UnitMismatchError(f"noise_psd needs unit_y in {_POWER_UNITS}, got {unit_y!r}")
        if u == "w":
            return y
        if u == "mw":
            return y * 1e-3
        if u == "dbm":
            return 1e-3 * 10.0 ** (y / 10.0)
        return y * rbw
    if u not in _RATIO_UNITS:
        raise UnitMismatchError(f"{kind.value} needs unit_y in {_RATIO_UNITS}, got {unit_y!r}")
    return 10.0 ** (y / 10.0) if u == "db" else y


def load_trace(path) -> SpectrumTrace:
    """Read and validate a trace file, converting to Hz and linear units."""
    header, x, y = _read(path)
    if "kind" not in header:
        raise MalformedTraceError(f"{path}: header lacks 'kind'")
    try:
        kind = TraceKind(header["kind"].strip().lower())
    except ValueError:
        raise MalformedTraceError(f"{path}: unknown kind {header['kind']!r}") from None
    unit_x = header.get("unit_x", "Hz").strip()
    if unit_x.lower() not in _FREQ_UNITS:
        raise UnitMismatchError(f"{path}: unit_x must be a frequency unit, got {unit_x!r}")
    default_y = "W" if kind is TraceKind.NOISE_PSD else "ratio"
    unit_y = header.get("unit_y", default_y).strip()
    rbw = None
    if "rbw_hz" in header:
        try:
            rbw = float(header["rbw_hz"])
        except ValueError:
            raise MalformedTraceError(f"{path}: rbw_hz is not a number") from None
        if not rbw > 0:
            raise UnitMismatchError(f"{path}: rbw_hz must be > 0")
    if kind is TraceKind.NOISE_PSD and rbw is None:
        raise UnitMismatchError(f"{path}: noise_psd traces need rbw_hz")
    for key in ("pump_power_w", "piezo_v"):
        if key in header:
            try:
                float(header[key])
            except ValueError:
                raise MalformedTraceError(f"{path}: {key} is not a number") from None
    freq = x * _FREQ_UNITS[unit_x.lower()]
    if np.any(np.diff(freq) <= 0):
        raise NonMonotoneError(f"{path}: frequency column must be strictly increasing")
    value = _convert_y(kind, unit_y, y, rbw)
    meta = {k: v for k, v in header.items() if k not in ("kind", "unit_x", "unit_y")}
    return SpectrumTrace(freq, value, kind, meta)


def atomic_write_text(path, text: str):
    """Write `text` to a temp file beside `path`, then rename over it."""
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=d)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_trace(trace: SpectrumTrace, path):
    unit_y = "W" if trace.kind is TraceKind.NOISE_PSD else "ratio"
    lines = [f"# kind: {trace.kind.value}", "# unit_x: Hz", f"# unit_y: {unit_y}"]
    lines += [f"# {k}: {v}" for k, v in sorted(trace.meta.items())]
    lines += [f"{a:.17g}\t{b:.17g}" for a, b in zip(trace.freq, trace.value)]
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_radiometer(path):
    """Read matched-load noise data: load temperature (K) vs. measured power.

    ``unit_y`` may be ``W/Hz`` or, with ``rbw_hz``, ``W``/``mW``/``dBm`` per
    bin. Returns ``(points, meta)`` with PSDs in W/Hz.
    """
    header, t, y = _read(path)
    kind = header.get("kind", "radiometer").strip().lower()
    if kind != "radiometer":
        raise MalformedTraceError(f"{path}: expected kind 'radiometer', got {kind!r}")
    if header.get("unit_x", "K").strip() != "K":
        raise UnitMismatchError(f"{path}: radiometer unit_x must be K")
    unit_y = header.get("unit_y", "W/Hz").strip().lower()
    if unit_y == "w/hz":
        psd = y
    else:
        if "rbw_hz" not in header:
            raise UnitMismatchError(f"{path}: unit_y {unit_y!r} needs rbw_hz")
        rbw = float(header["rbw_hz"])
        if unit_y == "w":
            psd = y / rbw
        elif unit_y == "mw":
            psd = y * 1e-3 / rbw
        elif unit_y == "dbm":
            psd = 1e-3 * 10.0 ** (y / 10.0) / rbw
        else:
            raise UnitMismatchError(f"{path}: unsupported radiometer unit_y {unit_y!r}")
    order = np.argsort(t)
    points = [RadiometerPoint(float(a), float(b)) for a, b in zip(t[order], psd[order])]
    meta = {k: v for k, v in header.items() if k not in ("kind", "unit_x", "unit_y")}
    return points, meta


def save_radiometer(points, path, meta=None):
    lines = ["# kind: radiometer", "# unit_x: K", "# unit_y: W/Hz"]
    lines += [f"# {k}: {v}" for k, v in sorted((meta or {}).items())]
    lines += [f"{p.t_load:.17g}\t{p.psd:.17g}" for p in points]
    atomic_write_text(path, "\n".join(lines) + "\n")
