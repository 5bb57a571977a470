"""Command-line front end.

    frer-sim run <scenario> [--seed N] [--out DIR] [--format csv|summary|both]
    frer-sim validate <scenario>
    frer-sim list-builtin

``<scenario>`` is a path, or the name of a builtin scenario when no such
file exists. Exit status: 0 ok, 1 parse/validation failure, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError
from .scenarios import builtin_path, emit, list_builtin, load_scenario, run

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_RUNTIME = 2

log = logging.getLogger("frer")


def _resolve(name: str) -> Path:
    p = Path(name)
    if p.exists() or p.suffix == ".json" or "/" in name:
        return p
    return builtin_path(name)


def _load(name: str):
    try:
        return load_scenario(_resolve(name))
    except (ConfigError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return None


def cmd_run(args) -> int:
    config = _load(args.scenario)
    if config is None:
        return EXIT_INVALID
    if args.seed is not None:
        config = config.with_seed(args.seed)
    out = Path(args.out) if args.out else Path("out") / config.name
    try:
        result = run(config)
        paths = emit(result, out, args.format)
    except Exception as e:  # noqa: BLE001 - any failure past validation is a runtime error
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    for f in result.flows:
        print(f"{f.flow}: sent={f.sent} received={f.received} lost={f.lost} "
              f"rtt_min={f.rtt_ns['min']}ns rtt_p99={f.rtt_ns['p99']}ns")
    for p in paths:
        log.info("wrote %s", p)
    return EXIT_OK


def cmd_validate(args) -> int:
    config = _load(args.scenario)
    if config is None:
        return EXIT_INVALID
    print(f"{config.name}: ok")
    return EXIT_OK


def cmd_list(args) -> int:
    for name in list_builtin():
        print(name)
    return EXIT_OK


def arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="frer-sim", description="FRER discrete-event scenarios")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario and write results")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, default=None, help="override run.seed")
    p.add_argument("--out", default=None, help="output directory (default out/<name>)")
    p.add_argument("--format", choices=("csv", "summary", "both"), default="both")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="check a scenario file")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("list-builtin", help="list shipped scenarios")
    p.set_defaults(func=cmd_list)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = arg_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
