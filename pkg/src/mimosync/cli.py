"""Command-line entry point.

Subcommands:
    simulate   run a Monte-Carlo campaign, write records/summary/manifest
    calibrate  build and persist the integral-CFO calibration table
    preamble   write the transmit preamble waveform as an IQ file
    single     run one trial and print its record (and metrics with -v)
    report     render figures from a campaign summary CSV

Exit codes: 0 success, 1 configuration error, 2 I/O error, 3 calibration
error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .cfo import CalibrationError, build_calibration, save_calibration
from .configfile import load_config
from .frame import FrameSpecError
from .harness import ConfigError, RECORD_FIELDS, run_campaign, run_trial
from .iqio import IqFormatError, write_iq
from .preamble import build_preamble

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_CALIBRATION = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mimosync",
        description="Preamble-based timing and CFO synchronization toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a Monte-Carlo campaign")
    sim.add_argument("--config", required=True, help="campaign config file")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--workers", type=int, default=1, help="parallel workers")

    cal = sub.add_parser("calibrate", help="build the integral-CFO table")
    cal.add_argument("--config", required=True)
    cal.add_argument("--out", required=True, help="calibration file path")

    pre = sub.add_parser("preamble", help="dump the preamble waveform")
    pre.add_argument("--config", required=True)
    pre.add_argument("--out", required=True, help="IQ file path")

    single = sub.add_parser("single", help="run and print one trial")
    single.add_argument("--config", required=True)
    single.add_argument("--snr", type=float, required=True, help="SNR in dB")
    single.add_argument("--seed", type=int, required=True, help="master seed")
    single.add_argument("--verbose", "-v", action="store_true")
    single.add_argument(
        "--traces", help="also write the metric traces to this CSV file"
    )

    rep = sub.add_parser("report", help="render figures from a summary CSV")
    rep.add_argument("--summary", required=True, help="summary.csv path")
    rep.add_argument("--out", required=True, help="figure output directory")
    return parser


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    run_campaign(cfg, args.out, workers=args.workers)
    print(f"campaign written to {args.out}")
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    cfg = load_config(args.config)
    cal = build_calibration(cfg.spec, window=cfg.cfo_window)
    save_calibration(cal, args.out)
    print(f"calibration ({len(cal.shift_to_cfo)} entries) written to {args.out}")
    return EXIT_OK


def _cmd_preamble(args) -> int:
    cfg = load_config(args.config)
    write_iq(args.out, build_preamble(cfg.spec).samples)
    print(f"preamble waveform written to {args.out}")
    return EXIT_OK


def _cmd_single(args) -> int:
    from dataclasses import replace

    cfg = load_config(args.config)
    cfg = replace(cfg, snr_db_list=(args.snr,), master_seed=args.seed)
    details: dict = {}
    record = run_trial(cfg, args.snr, 0, details=details)
    for name in RECORD_FIELDS:
        print(f"{name} = {getattr(record, name)}")
    if args.verbose:
        for key, value in details.items():
            if not key.startswith("trace_"):
                print(f"{key} = {value}")
    if args.traces:
        _write_traces(args.traces, details)
        print(f"traces written to {args.traces}")
    return EXIT_OK


def _write_traces(path: str, details: dict) -> None:
    """Long-format CSV of every metric trace: stage, index, value."""
    import csv

    import numpy as np

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("stage", "index", "value"))
        for key, values in sorted(details.items()):
            if not key.startswith("trace_"):
                continue
            stage = key.removeprefix("trace_")
            for i, v in enumerate(np.asarray(values).ravel()):
                writer.writerow((stage, i, repr(float(v))))


def _cmd_report(args) -> int:
    from .report import ReportError, render_report

    try:
        paths = render_report(args.summary, args.out)
    except ReportError as exc:
        raise ConfigError(str(exc)) from exc
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "calibrate": _cmd_calibrate,
    "preamble": _cmd_preamble,
    "single": _cmd_single,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CalibrationError as exc:
        print(f"calibration error: {exc}", file=sys.stderr)
        return EXIT_CALIBRATION
    except (OSError, IqFormatError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, FrameSpecError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
