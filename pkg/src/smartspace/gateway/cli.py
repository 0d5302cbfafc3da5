"""Command-line entry point.

    smartspace                         # interactive REPL, virtual clock
    smartspace --serve --port 8080     # HTTP/WS service
    smartspace --scenarios suite.yaml  # run a scenario suite, exit 0/1
    smartspace --dump-grammar          # list every supported phrasing
"""

from __future__ import annotations

import argparse
import sys
from datetime import datetime
from pathlib import Path
from typing import Optional

from ..grammar import dump_catalog
from .runtime import DEFAULT_START, Runtime, RuntimeConfig


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smartspace",
        description="Conversational smart-space manager.",
    )
    parser.add_argument("--data-dir", type=Path, default=None,
                        help="directory for the registry file and command log "
                             "(default: in-memory only)")
    parser.add_argument("--devices", type=Path, default=None, metavar="FIXTURE",
                        help="device registry fixture (devices.jsonl format)")
    parser.add_argument("--port", type=int, default=8080)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--clock", choices=("virtual", "wall"), default="virtual")
    parser.add_argument("--start-time", default=None, metavar="ISO",
                        help="virtual clock start, e.g. 2021-01-04T07:00 "
                             f"(default {DEFAULT_START.isoformat()})")
    parser.add_argument("--serve", action="store_true",
                        help="start the HTTP/WS service instead of the REPL")
    parser.add_argument("--ui-dir", type=Path, default=None,
                        help="serve a built web UI from this directory at /ui")
    parser.add_argument("--dump-grammar", action="store_true",
                        help="print the supported phrasings and exit")
    parser.add_argument("--scenarios", type=Path, default=None, metavar="SUITE",
                        help="run a YAML scenario suite and exit")
    return parser


def _runtime_config(args: argparse.Namespace) -> RuntimeConfig:
    start = datetime.fromisoformat(args.start_time) if args.start_time else DEFAULT_START
    return RuntimeConfig(
        devices_file=args.devices,
        data_dir=args.data_dir,
        clock_mode=args.clock,
        start_time=start,
    )


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)

    if args.dump_grammar:
        print(dump_catalog())
        return 0

    if args.scenarios is not None:
        from .scenarios import SuiteError, run_suite
        try:
            report = run_suite(args.scenarios)
        except SuiteError as exc:
            print(f"suite error: {exc}", file=sys.stderr)
            return 2
        print(report.format())
        return 0 if report.ok else 1

    runtime = Runtime(_runtime_config(args))
    for warning in runtime.replay_warnings:
        print(f"replay: {warning}", file=sys.stderr)

    if args.serve:
        import uvicorn

        from .app import create_app
        app = create_app(runtime, ui_dir=args.ui_dir)
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
        return 0

    from .repl import Repl
    Repl(runtime).run()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
