"""Instance I/O, experiment orchestration, and report emission.

Game instances are human-editable JSON with row-major matrices; entries may
be integers or exact ``"a/b"`` strings (floats are rejected unless they are
integral, so nothing lossy sneaks in). Every run artifact is JSON or CSV
with sorted keys and stable row order: two invocations with the same config
and master seed produce byte-identical files at any parallelism degree.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path

import numpy as np
import yaml

from . import annealer, cim, lattice, oracle, qubo
from .errors import InputError, SizeError
from .game import (
    AffineRecord,
    BimatrixGame,
    MixedStrategy,
    StrategyProfile,
    classify,
    normalize_payoffs,
)

SEED_ENV_VAR = "NASH_ANNEAL_SEED"


# --------------------------------------------------------------------------
# Instances
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GameInstance:
    name: str
    game: BimatrixGame
    transform: AffineRecord
    raw_m: tuple[tuple[Fraction, ...], ...]
    raw_n: tuple[tuple[Fraction, ...], ...]
    metadata: dict


def _parse_entry(value) -> Fraction:
    if isinstance(value, bool):
        raise InputError(f"payoff entry {value!r} is not a number")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not value.is_integer():
            raise InputError(
                f"float payoff {value!r} is not exact; use an \"a/b\" string instead"
            )
        return Fraction(int(value))
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"cannot parse payoff entry {value!r}") from exc
    raise InputError(f"cannot parse payoff entry {value!r}")


def _parse_matrix(rows, label: str) -> list[list[Fraction]]:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise InputError(f"{label} must be a nonempty list of rows")
    return [[_parse_entry(e) for e in row] for row in rows]


def parse_instance(data: dict, fallback_name: str = "game") -> GameInstance:
    if not isinstance(data, dict):
        raise InputError("instance file must hold a JSON object")
    for key in ("M", "N"):
        if key not in data:
            raise InputError(f"instance is missing the {key!r} matrix")
    name = data.get("name", fallback_name)
    raw_m = _parse_matrix(data["M"], "M")
    raw_n = _parse_matrix(data["N"], "N")
    game, transform = normalize_payoffs(raw_m, raw_n, name=name)
    return GameInstance(
        name=name,
        game=game,
        transform=transform,
        raw_m=tuple(tuple(row) for row in raw_m),
        raw_n=tuple(tuple(row) for row in raw_n),
        metadata=data.get("metadata", {}),
    )


def load_instance(path: str | Path) -> GameInstance:
    path = Path(path)
    if not path.exists():
        raise InputError(f"instance file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"instance file {path} is not valid JSON: {exc}") from exc
    return parse_instance(data, fallback_name=path.stem)


def _fraction_entry(value: Fraction):
    return int(value) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def emit_instance(instance: GameInstance, path: str | Path) -> None:
    data = {
        "name": instance.name,
        "M": [[_fraction_entry(e) for e in row] for row in instance.raw_m],
        "N": [[_fraction_entry(e) for e in row] for row in instance.raw_n],
        "metadata": instance.metadata,
    }
    Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


# --------------------------------------------------------------------------
# Experiment configuration
# --------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    instance: Path
    objective: str = "max-qubo"  # or "s-qubo"
    backend: str = "exact"  # or "cim"
    intervals: int = 12
    iterations: int = 10000
    runs: int = 200
    seed: int = 0
    t_max: float | None = None
    t_min: float = 1e-3
    schedule_mode: str = "geometric"
    move_both_players: bool = False
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)
    outdir: Path = Path("results")
    trace: bool = False
    cim: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.objective not in ("max-qubo", "s-qubo"):
            raise InputError(f"unknown objective {self.objective!r}")
        if self.backend not in ("exact", "cim"):
            raise InputError(f"unknown backend {self.backend!r}")
        if self.iterations < 1:
            raise InputError("iterations must be >= 1")
        if self.runs < 1:
            raise InputError("runs must be >= 1")
        if self.intervals < 1:
            raise InputError("intervals must be >= 1")
        if self.threads < 1:
            raise InputError("threads must be >= 1")


_CIM_KEY_MAP = {
    "interval_I": "intervals",
    "cells_per_element_t": "cells_per_element",
    "cell_sigma": "cell_sigma",
    "wta_offset": "wta_offset",
    "adc_levels": "adc_levels",
    "read_noise_sigma": "read_noise_sigma",
    "t_read_ns": "t_read_ns",
    "t_logic_ns": "t_logic_ns",
    "seed": "seed",
}


def crossbar_config_for(config: ExperimentConfig, game: BimatrixGame) -> cim.CrossbarConfig:
    """Build the hardware config, defaulting t to the largest payoff."""
    kwargs = {}
    for file_key, attr in _CIM_KEY_MAP.items():
        if file_key in config.cim:
            kwargs[attr] = config.cim[file_key]
    unknown = set(config.cim) - set(_CIM_KEY_MAP)
    if unknown:
        raise InputError(f"unknown cim config keys: {sorted(unknown)}")
    if "intervals" in kwargs and kwargs["intervals"] != config.intervals:
        raise InputError(
            f"cim interval_I={kwargs['intervals']} conflicts with intervals={config.intervals}"
        )
    kwargs["intervals"] = config.intervals
    kwargs.setdefault("cells_per_element", max(game.max_payoff, 1))
    return cim.CrossbarConfig(**kwargs)


def load_config_file(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise InputError(f"config file not found: {path}")
    data = yaml.safe_load(path.read_text())
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise InputError("config file must hold a mapping")
    return data


def build_schedule(config: ExperimentConfig, game: BimatrixGame) -> annealer.Schedule:
    if config.t_max is None:
        base = annealer.Schedule.default_for(game, config.iterations, config.t_min)
        if config.schedule_mode == "linear":
            return annealer.Schedule.linear(base.t_max, base.t_min, config.iterations)
        return base
    if config.schedule_mode == "linear":
        return annealer.Schedule.linear(config.t_max, config.t_min, config.iterations)
    return annealer.Schedule.geometric(config.t_max, config.t_min, config.iterations)


def build_backend(config: ExperimentConfig, game: BimatrixGame):
    if config.backend == "cim":
        return cim.CimBackend(game, crossbar_config_for(config, game))
    return annealer.ExactBackend(game)


# --------------------------------------------------------------------------
# JSON/CSV shaping
# --------------------------------------------------------------------------


def _frac_str(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}" if value.denominator != 1 else str(value.numerator)


def profile_json(prof: lattice.QuantizedProfile) -> dict:
    strategy = lattice.dequantize_profile(prof)
    return {
        "intervals": prof.intervals,
        "p_counts": list(prof.p.counts),
        "q_counts": list(prof.q.counts),
        "p": [_frac_str(x) for x in strategy.p.probs],
        "q": [_frac_str(x) for x in strategy.q.probs],
    }


def solution_json(sol: StrategyProfile) -> dict:
    return {
        "kind": classify(sol).value,
        "p": [_frac_str(x) for x in sol.p.probs],
        "q": [_frac_str(x) for x in sol.q.probs],
    }


def run_result_json(result: annealer.RunResult) -> dict:
    return {
        "best_profile": profile_json(result.best_profile),
        "best_f": _frac_str(result.best_f),
        "final_profile": profile_json(result.final_profile),
        "final_f": _frac_str(result.final_f),
        "succeeded": result.succeeded,
        "final_succeeded": result.final_succeeded,
        "accepted_moves": result.accepted_moves,
        "evaluations": result.evaluations,
        "iterations": result.iterations,
        "modeled_time_s": result.modeled_time,
        "modeled_time_to_success_s": result.modeled_time_to_success,
        "first_success_iteration": result.first_success_iteration,
    }


def config_json(config: ExperimentConfig) -> dict:
    return {
        "instance": str(config.instance),
        "objective": config.objective,
        "backend": config.backend,
        "intervals": config.intervals,
        "iterations": config.iterations,
        "runs": config.runs,
        "seed": config.seed,
        "t_max": config.t_max,
        "t_min": config.t_min,
        "schedule_mode": config.schedule_mode,
        "move_both_players": config.move_both_players,
        "cim": dict(sorted(config.cim.items())),
    }


def dump_json(data: dict, path: Path) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(buffer.getvalue())


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------


def solve_command(config: ExperimentConfig, out=print) -> dict:
    """One seeded annealing run; prints a summary and returns the artifact."""
    config.validate()
    instance = load_instance(config.instance)
    game = instance.game
    schedule = build_schedule(config, game)
    backend = build_backend(config, game)
    seed_seq = annealer.run_seed(config.seed, 0)
    rng_child, backend_child = seed_seq.spawn(2)
    rng = np.random.Generator(np.random.PCG64(rng_child))
    result = annealer.anneal(
        game,
        backend.spawn(backend_child),
        schedule,
        config.intervals,
        rng,
        record_trace=config.trace,
        move_both_players=config.move_both_players,
    )
    artifact = {
        "command": "solve",
        "instance": instance.name,
        "config": config_json(config),
        "result": run_result_json(result),
    }
    best = artifact["result"]["best_profile"]
    out(f"instance {instance.name}: {game.n}x{game.m}, I={config.intervals}, "
        f"{config.iterations} iterations, backend {config.backend}")
    out(f"best profile counts: p={best['p_counts']} q={best['q_counts']}")
    out(f"best profile probs:  p={best['p']} q={best['q']}")
    out(f"best objective: {artifact['result']['best_f']}"
        f" -> {'equilibrium' if result.succeeded else 'not an equilibrium'}")
    out(f"accepted {result.accepted_moves}/{result.iterations} moves; "
        f"modeled time {result.modeled_time:.3e} s")
    return artifact


def _bench_max_qubo(config: ExperimentConfig, instance: GameInstance) -> dict:
    game = instance.game
    schedule = build_schedule(config, game)
    backend = build_backend(config, game)
    stats = annealer.run_many(
        game,
        backend,
        schedule,
        config.intervals,
        config.runs,
        config.seed,
        threads=config.threads,
        move_both_players=config.move_both_players,
    )
    distribution = [
        {
            "p_counts": list(p),
            "q_counts": list(q),
            "count": count,
            "frequency": count / stats.successes if stats.successes else 0.0,
        }
        for (p, q), count in sorted(
            stats.solution_counts.items(), key=lambda item: (-item[1], item[0])
        )
    ]
    summary = {
        "runs": stats.runs,
        "successes": stats.successes,
        "success_rate": stats.success_rate,
        "final_pair_successes": stats.final_successes,
        "final_pair_success_rate": stats.final_success_rate,
        "distinct_solutions": len(stats.solution_counts),
        "mean_modeled_time_to_success_s": stats.mean_time_to_success,
        "total_evaluations": stats.total_evaluations,
    }
    return {"stats": stats, "summary": summary, "distribution": distribution}


def _bench_s_qubo(config: ExperimentConfig, instance: GameInstance) -> dict:
    game = instance.game
    objective = qubo.SQuboObjective.with_defaults(game)
    schedule = build_schedule(config, game)
    found: dict = {}
    successes = 0
    for index in range(config.runs):
        rng = np.random.Generator(np.random.PCG64(annealer.run_seed(config.seed, index)))
        result = annealer.anneal_s_qubo(objective, schedule, rng)
        if result.succeeded:
            successes += 1
            prof = lattice.lattice_profile_of(result.decoded, config.intervals)
            if prof is not None:
                key = prof.key()
                found[key] = found.get(key, 0) + 1
    distribution = [
        {
            "p_counts": list(p),
            "q_counts": list(q),
            "count": count,
            "frequency": count / successes if successes else 0.0,
        }
        for (p, q), count in sorted(found.items(), key=lambda item: (-item[1], item[0]))
    ]
    summary = {
        "runs": config.runs,
        "successes": successes,
        "success_rate": successes / config.runs,
        "distinct_solutions": len(found),
        "search_bits": objective.bit_count,
    }
    stats_like = [
        lattice.profile_from_counts(p, q, config.intervals) for p, q in sorted(found)
    ]
    return {"found_profiles": stats_like, "summary": summary, "distribution": distribution}


def bench_command(config: ExperimentConfig, out=print) -> dict:
    """Batch experiment: success rates, solution distribution, oracle coverage."""
    config.validate()
    instance = load_instance(config.instance)
    game = instance.game
    config.outdir.mkdir(parents=True, exist_ok=True)
    stem = f"{Path(config.instance).stem}_{config.objective}_{config.backend}"

    try:
        truth = oracle.enumerate_all(game)
        oracle_info = {
            "solutions": [solution_json(s) for s in truth.solutions],
            "count": len(truth),
            "degenerate": truth.degenerate,
        }
    except SizeError:
        truth = None
        oracle_info = {"solutions": None, "count": None, "degenerate": None}

    if config.objective == "s-qubo":
        outcome = _bench_s_qubo(config, instance)
        found_profiles = outcome["found_profiles"]
    else:
        outcome = _bench_max_qubo(config, instance)
        found_profiles = outcome["stats"].distinct_solutions()

    coverage_info = None
    coverage_rows: list[list] = []
    if truth is not None:
        report = oracle.coverage(found_profiles, truth, config.intervals)
        coverage_info = {
            "intervals": config.intervals,
            "reachable": report.reachable_count,
            "found_reachable": len(report.found_reachable),
            "unreachable": len(report.unreachable),
            "proportion": report.proportion,
            "missed": [profile_json(p) for p in report.missed],
        }
        found_keys = {p.key() for p in report.found_reachable}
        for sol in truth.solutions:
            lattice_form = lattice.lattice_profile_of(sol, config.intervals)
            reachable = lattice_form is not None
            coverage_rows.append(
                [
                    " ".join(_frac_str(x) for x in sol.p.probs),
                    " ".join(_frac_str(x) for x in sol.q.probs),
                    classify(sol).value,
                    int(reachable),
                    int(reachable and lattice_form.key() in found_keys),
                ]
            )

    summary = {
        "command": "bench",
        "instance": instance.name,
        "config": config_json(config),
        "oracle": oracle_info,
        "coverage": coverage_info,
        **outcome["summary"],
    }
    dump_json(summary, config.outdir / f"{stem}_summary.json")
    _write_csv(
        config.outdir / f"{stem}_solutions.csv",
        ["p_counts", "q_counts", "count", "frequency"],
        [
            [
                " ".join(str(c) for c in row["p_counts"]),
                " ".join(str(c) for c in row["q_counts"]),
                row["count"],
                repr(row["frequency"]),
            ]
            for row in outcome["distribution"]
        ],
    )
    _write_csv(
        config.outdir / f"{stem}_coverage.csv",
        ["p", "q", "kind", "reachable", "found"],
        coverage_rows,
    )

    out(f"instance {instance.name} ({game.n}x{game.m}), objective {config.objective}, "
        f"backend {config.backend}, I={config.intervals}")
    out(f"success rate: {summary['success_rate']:.4f} over {config.runs} runs")
    if coverage_info is not None:
        prop = coverage_info["proportion"]
        out(f"coverage: {coverage_info['found_reachable']}/{coverage_info['reachable']}"
            f" reachable solutions" + (f" ({prop:.2f})" if prop is not None else ""))
    if summary.get("mean_modeled_time_to_success_s"):
        out(f"mean modeled time to first success: {summary['mean_modeled_time_to_success_s']:.3e} s")
    out(f"reports written to {config.outdir}/{stem}_*.{{json,csv}}")
    return summary


def enumerate_command(instance_path: str | Path, out=print) -> dict:
    """Print every equilibrium of an instance with exact probabilities."""
    instance = load_instance(instance_path)
    truth = oracle.enumerate_all(instance.game)
    out(f"{instance.name}: {len(truth)} equilibria"
        + (" (degenerate game: the list may be incomplete)" if truth.degenerate else ""))
    for sol, kind in truth.tagged():
        p = " ".join(_frac_str(x) for x in sol.p.probs)
        q = " ".join(_frac_str(x) for x in sol.q.probs)
        out(f"  {kind.value:<5}  p = ({p})   q = ({q})")
    return {
        "instance": instance.name,
        "count": len(truth),
        "degenerate": truth.degenerate,
        "solutions": [solution_json(s) for s in truth.solutions],
    }


def sweep_command(
    config: ExperimentConfig, intervals_grid: list[int], iterations_grid: list[int], out=print
) -> list[dict]:
    """Bench over an I x iterations grid; emits one combined CSV."""
    config.validate()
    rows = []
    results = []
    for intervals in intervals_grid:
        for iterations in iterations_grid:
            sub = replace(
                config,
                intervals=intervals,
                iterations=iterations,
                outdir=config.outdir / f"I{intervals}_iters{iterations}",
            )
            summary = bench_command(sub, out=lambda *_: None)
            results.append(summary)
            coverage_info = summary.get("coverage") or {}
            rows.append(
                [
                    intervals,
                    iterations,
                    summary["runs"],
                    repr(summary["success_rate"]),
                    coverage_info.get("reachable"),
                    coverage_info.get("found_reachable"),
                    repr(summary.get("mean_modeled_time_to_success_s")),
                ]
            )
            out(f"I={intervals} iterations={iterations}: success={summary['success_rate']:.4f}")
    config.outdir.mkdir(parents=True, exist_ok=True)
    _write_csv(
        config.outdir / "sweep.csv",
        ["intervals", "iterations", "runs", "success_rate", "reachable", "found_reachable", "mean_time_to_success_s"],
        rows,
    )
    out(f"sweep written to {config.outdir / 'sweep.csv'}")
    return results
