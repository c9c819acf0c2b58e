"""Report assembly, invariant checks and deterministic file output."""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field

from .traces import atomic_write_text

# Per-power columns, in output order. Rates and bandwidth are reported in Hz.
COLUMNS = ("pump_power_w", "n_p", "cooperativity", "eta_tot", "eta_int", "bandwidth_hz",
           "n_wg", "n_b", "n_e", "n_out")
CI_COLUMNS = ("eta_tot_ci95", "cooperativity_ci95", "n_wg_ci95", "n_b_ci95", "n_e_ci95", "n_out_ci95")
BOUND_COLUMN = "eta_bound"  # eta_e * eta_o * Lambda^2 for the row
ALL_COLUMNS = COLUMNS + CI_COLUMNS + (BOUND_COLUMN,)

EFFICIENCY_COLUMNS = ("pump_power_w", "n_p", "cooperativity", "eta_tot", "eta_tot_ci95", "eta_int",
                      "bandwidth_hz")
NOISE_COLUMNS = ("pump_power_w", "n_wg", "n_out", "n_b", "n_e")


class ReportInvariantError(RuntimeError):
    code = "invariant"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _nan():
    return float("nan")


def empty_row(pump_power_w: float) -> dict:
    row = {c: _nan() for c in ALL_COLUMNS}
    row["pump_power_w"] = float(pump_power_w)
    return row


def _finite(x) -> bool:
    return x is not None and isinstance(x, (int, float)) and math.isfinite(x)


def check_row(row: dict, rtol: float = 1e-9):
    """Raise :class:`ReportInvariantError` if `row` breaks a physical bound.

    The efficiency bound allows the row's own 95% interval on top of `rtol`,
    since a measured estimate scatters around a value that may sit on it.
    """
    eta, bound = row.get("eta_tot"), row.get(BOUND_COLUMN)
    if _finite(eta) and _finite(bound):
        ci = row.get("eta_tot_ci95")
        slack = (ci if _finite(ci) else 0.0) + rtol * abs(bound)
        if eta > bound + slack:
            raise ReportInvariantError(
                f"P = {row['pump_power_w']:g} W: eta_tot = {eta:.6g} exceeds "
                f"eta_e eta_o Lambda^2 = {bound:.6g}")
    if _finite(eta) and eta < 0:
        raise ReportInvariantError(f"P = {row['pump_power_w']:g} W: negative eta_tot")
    n_e, n_wg, n_b = row.get("n_e"), row.get("n_wg"), row.get("n_b")
    if _finite(n_e) and _finite(n_wg) and _finite(n_b):
        lo, hi = min(n_wg, n_b), max(n_wg, n_b)
        tol = rtol * max(hi, 1e-300)
        if not lo - tol <= n_e <= hi + tol:
            raise ReportInvariantError(
                f"P = {row['pump_power_w']:g} W: N_e = {n_e:.6g} outside [{lo:.6g}, {hi:.6g}]")


@dataclass
class Report:
    """Per-power results plus provenance.

    `kind` names the producing command. `spectra` maps a name to
    ``{"columns": [...], "data": [[...], ...]}``. `extra` holds
    command-specific results (calibration chain, sweep crossings).
    """

    kind: str
    rows: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    spectra: dict = field(default_factory=dict)
    diagnostics: list = field(default_factory=list)
    nonconverged: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def sorted_rows(self):
        return sorted(self.rows, key=lambda r: r["pump_power_w"])

    def validate(self, rtol: float = 1e-9):
        for row in self.rows:
            check_row(row, rtol)

    def column(self, name):
        return [r.get(name, _nan()) for r in self.sorted_rows()]

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "rows": [{c: r.get(c, _nan()) for c in ALL_COLUMNS} for r in self.sorted_rows()],
            "provenance": self.provenance,
            "spectra": self.spectra,
            "diagnostics": list(self.diagnostics),
            "nonconverged": list(self.nonconverged),
            "extra": self.extra,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Report":
        rows = [{c: _nan() if r.get(c) is None else float(r[c]) for c in ALL_COLUMNS}
                for r in d.get("rows", [])]
        return cls(kind=d.get("kind", ""), rows=rows, provenance=d.get("provenance", {}),
                   spectra=d.get("spectra", {}), diagnostics=list(d.get("diagnostics", [])),
                   nonconverged=list(d.get("nonconverged", [])), extra=d.get("extra", {}))


def _jsonable(obj):
    """NaN/inf become null so the output is strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalar
        return _jsonable(obj.item())
    return obj


def report_to_json(report: Report) -> str:
    return json.dumps(_jsonable(report.to_dict()), sort_keys=True, indent=2) + "\n"


def save_report(report: Report, path):
    atomic_write_text(path, report_to_json(report))


def load_report(path) -> Report:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not a report file ({exc})") from None
    if not isinstance(d, dict) or "rows" not in d:
        raise ValueError(f"{path}: not a report file")
    return Report.from_dict(d)


def _fmt(x) -> str:
    if x is None:
        return "nan"
    if isinstance(x, str):
        return x
    return f"{float(x):.12g}"


def tsv_text(columns, rows) -> str:
    lines = ["\t".join(columns)]
    lines += ["\t".join(_fmt(r.get(c)) for c in columns) for r in rows]
    return "\n".join(lines) + "\n"


def summary_text(report: Report) -> str:
    prov = report.provenance
    lines = [f"eotransducer {report.kind} report",
             f"tool version: {prov.get('tool_version', '?')}",
             f"config sha256: {prov.get('config_sha256', '-')}"]
    for path, digest in sorted(prov.get("inputs", {}).items()):
        lines.append(f"input {path}: {digest}")
    lines.append(f"rows: {len(report.rows)}")
    head = ("P_p [W]", "n_p", "C", "eta_tot", "eta_int", "B [MHz]", "N_wg", "N_b", "N_e", "N_out")
    keys = COLUMNS
    lines.append("  ".join(f"{h:>11}" for h in head))
    for r in report.sorted_rows():
        vals = []
        for k in keys:
            v = r.get(k, _nan())
            if k == "bandwidth_hz" and _finite(v):
                v = v / 1e6
            vals.append(f"{v:>11.4g}" if _finite(v) else f"{'-':>11}")
        lines.append("  ".join(vals))
    for k, v in sorted(report.extra.items()):
        if isinstance(v, dict):
            for k2, v2 in sorted(v.items()):
                lines.append(f"{k}.{k2}: {_fmt(v2) if not isinstance(v2, (list, dict)) else json.dumps(_jsonable(v2), sort_keys=True)}")
        elif not isinstance(v, list):
            lines.append(f"{k}: {_fmt(v)}")
    if report.nonconverged:
        lines.append("non-converged fits:")
        lines += [f"  {m}" for m in report.nonconverged]
    if report.diagnostics:
        lines.append("diagnostics:")
        lines += [f"  {m}" for m in report.diagnostics]
    return "\n".join(lines) + "\n"


def write_report_files(report: Report, out_dir) -> list:
    """Write the summary and plot-ready tables; returns the written paths.

    ``efficiency_vs_power.tsv`` and ``noise_vs_power.tsv`` always exist (header
    only for an empty report); each spectrum gets ``spectrum_<name>.tsv``.
    """
    os.makedirs(out_dir, exist_ok=True)
    rows = report.sorted_rows()
    written = []

    def put(name, text):
        p = os.path.join(out_dir, name)
        atomic_write_text(p, text)
        written.append(p)

    put("summary.txt", summary_text(report))
    put("efficiency_vs_power.tsv", tsv_text(EFFICIENCY_COLUMNS, rows))
    put("noise_vs_power.tsv", tsv_text(NOISE_COLUMNS, rows))
    for name in sorted(report.spectra):
        spec = report.spectra[name]
        cols = spec["columns"]
        put(f"spectrum_{name}.tsv", tsv_text(cols, [dict(zip(cols, row)) for row in spec["data"]]))
    for name in sorted(report.extra):
        v = report.extra[name]
        if isinstance(v, list) and v and isinstance(v[0], dict):
            cols = list(v[0].keys())
            put(f"{name}.tsv", tsv_text(cols, v))
    return written
