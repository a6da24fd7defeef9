"""Command line interface.

    gwg sweep --config cfg.json --case sinxsiny --levels 8,16,32 \
              --out table.csv [--format csv|markdown]
    gwg reproduce --table 2 --out outdir [--levels 4,8,16] [--format ...]

Exit codes: 0 on success, 2 on solver failure, 3 on configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from .assembly import GwgConfig
from .errors import ConfigError, SolverError
from .experiments import emit, get_case, reproduce_table, run_sweep


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="gwg",
                     description="Weak Galerkin biharmonic solver")
    sub = parser.add_subparsers(dest="command", required=True)

    sweep = sub.add_parser("sweep", help="run one convergence sweep")
    sweep.add_argument("--config", required=True,
                       help="JSON config file (degrees, stabilizers, mesh, "
                            "solver)")
    sweep.add_argument("--case", required=True, help="manufactured case id")
    sweep.add_argument("--levels", required=True,
                       help="comma-separated 1/h values, ascending")
    sweep.add_argument("--out", required=True, help="output file")
    sweep.add_argument("--format", default="csv",
                       choices=["csv", "markdown"])

    rep = sub.add_parser("reproduce", help="run a paper-table preset")
    rep.add_argument("--table", required=True, type=int,
                     help="table number, 1..6")
    rep.add_argument("--out", required=True, help="output directory")
    rep.add_argument("--levels", default=None,
                     help="override the preset 1/h levels")
    rep.add_argument("--format", default="csv", choices=["csv", "markdown"])
    return parser


def _parse_levels(text: str):
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad levels {text!r}: {exc}") from exc


def _load_config(path: str) -> GwgConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path!r}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config JSON must be an object")
    return GwgConfig.from_dict(data)


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "sweep":
            config = _load_config(args.config)
            case = get_case(args.case)
            table = run_sweep(config, case, _parse_levels(args.levels))
            emit(table, args.out, args.format)
            print(args.out)
        else:
            levels = _parse_levels(args.levels) if args.levels else None
            for path in reproduce_table(args.table, args.out, levels,
                                        args.format):
                print(path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 3
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
