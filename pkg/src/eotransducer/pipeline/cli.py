"""Command-line entry point: ``eotransducer <command> [options]``.

Exit codes: 0 success (possibly with warnings), 2 input or validation
error, 3 fit non-convergence, 4 report invariant violation.
"""
from __future__ import annotations

import argparse
import glob
import logging
import os
import sys

from .commands import cmd_calibrate, cmd_fit, cmd_report, cmd_simulate, cmd_sweep, cmd_synth
from .config import load_config
from .report import ReportInvariantError, load_report, save_report

EXIT_OK, EXIT_INPUT, EXIT_NONCONVERGED, EXIT_INVARIANT = 0, 2, 3, 4
OUT_ENV = "EOTRANSDUCER_OUT"
DEFAULT_OUT = "eotransducer-out"

log = logging.getLogger("eotransducer")


def output_dir(arg: str | None) -> str:
    """``--out`` wins, then the environment variable, then the default."""
    return arg or os.environ.get(OUT_ENV) or DEFAULT_OUT


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="scenario YAML file")
    common.add_argument("--out", metavar="DIR", help=f"output directory (default ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--verbose", "-v", action="store_true", help="log progress to stderr")

    p = argparse.ArgumentParser(prog="eotransducer", description="Electro-optic transducer analysis")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="forward model on the power grid")
    f = sub.add_parser("fit", parents=[common], help="fit recorded traces")
    f.add_argument("--traces", metavar="GLOB", action="append", default=[],
                   help="trace files (glob, may repeat)")
    c = sub.add_parser("calibrate", parents=[common], help="radiometric and line calibration")
    c.add_argument("--radiometer", metavar="PATH", help="radiometer data file (overrides config)")
    sub.add_parser("sweep", parents=[common], help="design-space grid and C = 1 power")
    r = sub.add_parser("report", parents=[common], help="write summary and plot files from a report")
    r.add_argument("--report", metavar="PATH", help="report JSON (default <out>/report.json)")
    sub.add_parser("synth", parents=[common], help="write a synthetic trace set")
    return p


def _emit(report, out):
    os.makedirs(out, exist_ok=True)
    save_report(report, os.path.join(out, "report.json"))
    cmd_report(report, out)
    for d in report.diagnostics:
        log.warning(d)
    if report.nonconverged:
        for m in report.nonconverged:
            log.error("not converged: %s", m)
        return EXIT_NONCONVERGED
    return EXIT_OK


def run(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    out = output_dir(args.out)
    try:
        if args.command == "report":
            src = args.report or os.path.join(out, "report.json")
            written = cmd_report(load_report(src), out)
            log.info("wrote %d files to %s", len(written), out)
            return EXIT_OK
        if not args.config:
            raise ValueError(f"{args.command} needs --config")
        cfg = load_config(args.config)
        if args.command == "simulate":
            return _emit(cmd_simulate(cfg), out)
        if args.command == "fit":
            paths = sorted({p for g in args.traces for p in glob.glob(g)})
            log.info("fitting %d trace files", len(paths))
            return _emit(cmd_fit(cfg, paths), out)
        if args.command == "calibrate":
            _, rep = cmd_calibrate(cfg, args.radiometer)
            return _emit(rep, out)
        if args.command == "sweep":
            return _emit(cmd_sweep(cfg), out)
        if args.command == "synth":
            written = cmd_synth(cfg, out)
            log.info("wrote %d files to %s", len(written), out)
            return EXIT_OK
    except ReportInvariantError as exc:
        log.error("invariant violation: %s", exc)
        return EXIT_INVARIANT
    except (ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    raise AssertionError(f"unhandled command {args.command}")


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
