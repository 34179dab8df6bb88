"""Command-line entry point: ``rdpriv {curve,table,simulate,verify}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import experiments
from .config import ConfigError, load
from .probcore import BudgetError
from .region.params import SolverError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BUDGET = 3
EXIT_SOLVER = 4


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _step(text: str) -> float:
    v = float(text)
    if not 0 < v <= 0.25:
        raise argparse.ArgumentTypeError("grid step must lie in (0, 0.25]")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, type=Path, metavar="PATH")
    common.add_argument("--out", type=Path, metavar="PATH", help="write here instead of stdout")
    common.add_argument("--seed", type=_u64, metavar="U64",
                        help="overrides the config seed")
    common.add_argument("--threads", type=_positive_int, default=1, metavar="N")
    common.add_argument("--grid-step", type=_step, metavar="F",
                        help="table: add grid-oracle columns at this resolution")

    p = argparse.ArgumentParser(prog="rdpriv",
                                description="Rate, distortion and leakage of private "
                                            "database release: curves, tables, simulation.")
    sub = p.add_subparsers(dest="command", required=True)
    c = sub.add_parser("curve", parents=[common], help="R(D) or L*(D) for every case (CSV)")
    c.add_argument("--kind", choices=("rd", "ld"), default="ld")
    sub.add_parser("table", parents=[common],
                   help="minimum leakage and its rate per case and D (CSV)")
    sub.add_parser("simulate", parents=[common], help="finite-n codec measurements (JSON)")
    sub.add_parser("verify", parents=[common], help="lemma, convexity and inclusion checks (JSON)")
    return p


def run(args: argparse.Namespace) -> tuple[str, int]:
    cfg = load(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    if args.command == "curve":
        out = experiments.curve(cfg, args.kind, args.threads)
        return out.text, EXIT_SOLVER if out.failed else EXIT_OK
    if args.command == "table":
        out = experiments.table(cfg, args.threads, args.grid_step)
        return out.text, EXIT_SOLVER if out.failed else EXIT_OK
    if args.command == "simulate":
        if cfg.simulation is None:
            raise ConfigError(["simulate needs a 'simulation' section"])
        return experiments.to_json(experiments.simulate(cfg, seed, args.threads)), EXIT_OK
    return experiments.to_json(experiments.verify(cfg, seed, args.threads)), EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text, code = run(args)
    except ConfigError as exc:
        for f in exc.findings:
            print(f"config error: {f}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetError as exc:
        print(f"budget refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except SolverError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    if args.out is None:
        sys.stdout.write(text)
    else:
        args.out.write_text(text, encoding="utf-8")
    if code == EXIT_SOLVER:
        print("some rows did not converge (status=not_converged)", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
