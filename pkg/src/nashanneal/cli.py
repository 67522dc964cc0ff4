"""Command-line front end: solve, bench, enumerate, sweep.

Exit codes: 0 on success, 2 for usage or input problems, 1 for anything
unexpected. The master seed can be forced from the environment through
NASH_ANNEAL_SEED, which wins over both config file and flags.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import traceback
from pathlib import Path

from . import bench
from .bench import SEED_ENV_VAR, ExperimentConfig
from .errors import SolverError


def _add_common(parser: argparse.ArgumentParser, runs_default: int) -> None:
    parser.add_argument("--instance", required=True, help="path to a game instance JSON file")
    parser.add_argument("--config", help="YAML config file; flags override its values")
    parser.add_argument("-I", "--intervals", type=int, help="probability lattice resolution (default 12)")
    parser.add_argument("--iters", "--iterations", dest="iterations", type=int, help="annealing iterations per run")
    parser.add_argument("--runs", type=int, default=None, help=f"number of independent runs (default {runs_default})")
    parser.add_argument("--seed", type=int, help="master seed (default 0)")
    parser.add_argument("--objective", choices=["max-qubo", "s-qubo"], help="objective to anneal")
    parser.add_argument("--backend", choices=["exact", "cim"], help="objective evaluator")
    parser.add_argument("--t-max", type=float, dest="t_max", help="starting temperature (default: max entry of M+N)")
    parser.add_argument("--t-min", type=float, dest="t_min", help="final temperature (default 1e-3)")
    parser.add_argument("--schedule", choices=["geometric", "linear"], dest="schedule_mode", help="temperature decay shape")
    parser.add_argument("--move-both-players", action="store_true", default=None, help="move one quantum for both players per iteration")
    parser.add_argument("--threads", type=int, help="run-level parallelism (results do not depend on it)")
    parser.add_argument("--out", dest="outdir", help="output directory (default ./results)")


def _build_config(args: argparse.Namespace, runs_default: int) -> ExperimentConfig:
    file_values: dict = {}
    if args.config:
        file_values = bench.load_config_file(args.config)
    config = ExperimentConfig(instance=Path(args.instance))
    config.cim = dict(file_values.get("cim", {}))

    for key, default in (
        ("objective", None),
        ("backend", None),
        ("intervals", None),
        ("iterations", None),
        ("seed", None),
        ("t_max", None),
        ("t_min", None),
        ("schedule_mode", None),
        ("threads", None),
        ("move_both_players", None),
    ):
        flag = getattr(args, key, default)
        if flag is not None:
            setattr(config, key, flag)
        elif key in file_values:
            setattr(config, key, file_values[key])
    config.runs = args.runs if args.runs is not None else file_values.get("runs", runs_default)
    if args.outdir is not None:
        config.outdir = Path(args.outdir)
    elif "outdir" in file_values:
        config.outdir = Path(file_values["outdir"])

    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            config.seed = int(env_seed)
        except ValueError as exc:
            raise SolverError(f"{SEED_ENV_VAR} must be an integer, got {env_seed!r}") from exc
    return config


def _parse_grid(text: str, flag: str) -> list[int]:
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise SolverError(f"{flag} expects comma-separated integers, got {text!r}") from exc
    if not values:
        raise SolverError(f"{flag} must name at least one value")
    return values


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nash-anneal",
        description="Find pure and mixed Nash equilibria of bimatrix games by "
        "simulated annealing over a max-form QUBO objective.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="one seeded annealing run")
    _add_common(solve, runs_default=1)
    solve.add_argument("--trace", action="store_true", help="record the per-iteration (f, T) trace")

    bench_cmd = sub.add_parser("bench", help="batch of runs with success-rate and coverage reports")
    _add_common(bench_cmd, runs_default=200)

    enum = sub.add_parser("enumerate", help="exact enumeration of all equilibria")
    enum.add_argument("--instance", required=True)

    sweep = sub.add_parser("sweep", help="bench over a grid of I and iteration budgets")
    _add_common(sweep, runs_default=200)
    sweep.add_argument("--intervals-grid", required=True, help="comma-separated I values")
    sweep.add_argument("--iterations-grid", required=True, help="comma-separated iteration budgets")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            config = _build_config(args, runs_default=1)
            config.trace = bool(args.trace)
            artifact = bench.solve_command(config)
            config.outdir.mkdir(parents=True, exist_ok=True)
            out_path = config.outdir / f"{Path(config.instance).stem}_solve.json"
            bench.dump_json(artifact, out_path)
            print(f"result written to {out_path}")
        elif args.command == "bench":
            config = _build_config(args, runs_default=200)
            bench.bench_command(config)
        elif args.command == "enumerate":
            bench.enumerate_command(args.instance)
        elif args.command == "sweep":
            config = _build_config(args, runs_default=200)
            bench.sweep_command(
                config,
                _parse_grid(args.intervals_grid, "--intervals-grid"),
                _parse_grid(args.iterations_grid, "--iterations-grid"),
            )
        return 0
    except (SolverError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
