#!/usr/bin/env python3
"""
Command-line entry point for qdcavity.

Usage:
    # Moments of a shipped preset
    python app.py solve --preset setA --out solve.csv

    # Same, cross-checked against the Liouvillian
    python app.py solve --preset setB --oracle-check

    # Data of one figure
    python app.py fig --figure 4 --out fig4.csv

    # Criteria sweep in kappa units
    python app.py criteria --units kappa --g 1 --gamma 1 --p 0.5 --p-grid 0.1,1,10

    # Characteristic function, benchmark, three-way check
    python app.py charfn --preset setA --alpha-max 8
    python app.py bench --recurrence-sizes 10000,100000 --fock-sizes 10,15,20
    python app.py oracle-check --preset setA

Each subcommand builds an event dict and hands it to the matching handler.
The handler's status decides the exit code.
"""

import argparse
import json
import logging
import os
import sys
from typing import Any, Callable

RATE_FLAGS = ("g", "kappa", "gamma", "p", "delta", "gamma_d")


def _csv_floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _csv_ints(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qdcavity",
        description="Steady-state moments of an incoherently pumped emitter in a lossy cavity.",
    )
    parser.add_argument(
        "--log-level", default=None, help="logging level (default from QDCAVITY_LOG_LEVEL)"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    source = common.add_mutually_exclusive_group()
    source.add_argument("--preset", choices=["setA", "setB"])
    source.add_argument("--config", metavar="PATH", help="TOML parameter file")
    common.add_argument("--units", choices=["si", "kappa"])
    for name in RATE_FLAGS:
        common.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float)
    common.add_argument("--eps", type=float)
    common.add_argument("--tol", type=float)
    common.add_argument("--precision", type=int, choices=[64, 128, 256])
    common.add_argument("--out", metavar="PATH")
    common.add_argument("--format", choices=["csv", "json", "parquet"])
    common.add_argument("--workers", type=int)

    solve = sub.add_parser("solve", parents=[common], help="moments of one parameter set")
    solve.add_argument("--order", type=int, help="last ladder order N")
    solve.add_argument("--oracle-check", action="store_true")
    solve.add_argument("--n-ph", type=int, help="photon cutoff of the oracle")

    fig = sub.add_parser("fig", parents=[common], help="data of one figure")
    fig.add_argument("--figure", type=int, required=True)
    fig.add_argument("--p-grid", type=_csv_floats)
    fig.add_argument("--g-grid", type=_csv_floats)
    fig.add_argument("--alpha-max", type=float)
    fig.add_argument("--alpha-samples", type=int)

    criteria = sub.add_parser("criteria", parents=[common], help="criteria over a pump grid")
    criteria.add_argument("--p-grid", type=_csv_floats)
    criteria.add_argument("--orders", type=_csv_ints)

    charfn = sub.add_parser("charfn", parents=[common], help="characteristic function")
    charfn.add_argument("--alpha-max", type=float)
    charfn.add_argument("--alpha-samples", type=int)

    bench = sub.add_parser("bench", parents=[common], help="solver timings")
    bench.add_argument("--recurrence-sizes", type=_csv_ints)
    bench.add_argument("--fock-sizes", type=_csv_ints)
    bench.add_argument("--repeats", type=int)

    check = sub.add_parser("oracle-check", parents=[common], help="three-way agreement check")
    check.add_argument("--n-ph", type=int)
    check.add_argument("--no-ode", dest="include_ode", action="store_false")
    check.add_argument("--ode-order", type=int)

    return parser


def build_event(args: argparse.Namespace) -> dict[str, Any]:
    """RunSpec event from parsed flags; unset flags are left out."""
    values = {k: v for k, v in vars(args).items() if v is not None}
    values.pop("command")
    values.pop("log_level", None)
    overrides = {name: values.pop(name) for name in RATE_FLAGS if name in values}
    if overrides:
        values["overrides"] = overrides
    if values.get("oracle_check") is False:
        values.pop("oracle_check")
    return values


def _handler(command: str) -> Callable[[dict[str, Any], Any], dict[str, Any]]:
    if command == "solve":
        from qdcavity.solve.handler import handler
    elif command == "fig":
        from qdcavity.fig.handler import handler
    elif command == "criteria":
        from qdcavity.criteria.handler import handler
    elif command == "charfn":
        from qdcavity.charfn.handler import handler
    elif command == "bench":
        from qdcavity.bench.handler import handler
    else:
        from qdcavity.oracle_check.handler import handler
    return handler


def exit_code(result: dict[str, Any]) -> int:
    from qdcavity.shared.settings import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, EXIT_PARTIAL

    status = result.get("status")
    if status == "success":
        return EXIT_OK
    if status == "partial":
        return EXIT_PARTIAL
    if result.get("kind") == "config":
        return EXIT_CONFIG
    return EXIT_FAILED


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "bench":
        # one BLAS thread for reproducible timings; must precede the numpy import
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, "1")

    from qdcavity.shared.settings import LOG_LEVEL

    logging.basicConfig(
        level=(args.log_level or LOG_LEVEL).upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )

    event = build_event(args)
    result = _handler(args.command)(event, None)
    print(json.dumps(result, default=str))
    if result.get("status") not in ("success", "partial"):
        print(f"error: {result.get('error')}", file=sys.stderr)
    return exit_code(result)


if __name__ == "__main__":
    sys.exit(main())
