"""Two-phase simulated annealing over the strategy lattice.

One iteration proposes a single-quantum neighbor, evaluates the objective
through a backend (exact integer arithmetic, or the crossbar simulator),
and applies the Metropolis rule at the current temperature. The exact
backend runs through a compiled kernel; the simulator backend runs through
the Python loop below. Either way a run is fully determined by its seed and
configuration, including the optional per-iteration trace.

Success bookkeeping is deliberately strict: whatever objective drove the
search, ``succeeded`` is decided by re-evaluating the best profile with the
exact objective, so a noisy backend can never claim an equilibrium that is
not one. Both the best-seen and the final current pair are reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from concurrent.futures import ThreadPoolExecutor
from typing import Protocol

import numpy as np

from . import cim, lattice, qubo
from ._kernel import anneal_ints, seed_words_from
from .errors import BackendError, InputError
from .game import BimatrixGame
from .lattice import QuantizedProfile

Rng = np.random.Generator


@dataclass(frozen=True)
class Schedule:
    """Temperature schedule: t_max decaying to t_min over a fixed budget.

    The geometric mode multiplies by ``decay`` each iteration; constructing
    via :meth:`geometric` picks decay = (t_min/t_max)^(1/iterations) so the
    temperature lands on t_min after exactly ``iterations`` decays. A linear
    mode is available as an alternative.
    """

    t_max: float
    t_min: float
    decay: float
    iterations: int
    mode: str = "geometric"

    def __post_init__(self) -> None:
        if not (0 < self.t_min < self.t_max):
            raise InputError("need 0 < t_min < t_max")
        if self.iterations < 1:
            raise InputError("iterations must be >= 1")
        if self.mode not in ("geometric", "linear"):
            raise InputError(f"unknown schedule mode {self.mode!r}")
        if self.mode == "geometric" and not (0 < self.decay < 1):
            raise InputError("geometric decay must lie in (0, 1)")

    @classmethod
    def geometric(cls, t_max: float, t_min: float, iterations: int) -> "Schedule":
        decay = (t_min / t_max) ** (1.0 / iterations)
        return cls(t_max, t_min, decay, iterations, "geometric")

    @classmethod
    def linear(cls, t_max: float, t_min: float, iterations: int) -> "Schedule":
        return cls(t_max, t_min, 0.5, iterations, "linear")

    @classmethod
    def default_for(cls, game: BimatrixGame, iterations: int, t_min: float = 1e-3) -> "Schedule":
        """t_max = the largest entry of M + N, so early uphill moves are cheap."""
        t_max = float(
            max(
                game.M[i][j] + game.N[i][j]
                for i in range(game.n)
                for j in range(game.m)
            )
        )
        t_max = max(t_max, 1.0)
        return cls.geometric(t_max, min(t_min, t_max / 2), iterations)

    @property
    def linear_step(self) -> float:
        return (self.t_max - self.t_min) / self.iterations


@dataclass(frozen=True)
class Trace:
    """Per-iteration (objective of the current pair, temperature)."""

    objective: np.ndarray
    temperature: np.ndarray


@dataclass(frozen=True)
class RunResult:
    best_profile: QuantizedProfile
    best_f: Fraction
    final_profile: QuantizedProfile
    final_f: Fraction
    accepted_moves: int
    evaluations: int
    iterations: int
    modeled_time: float
    succeeded: bool
    final_succeeded: bool
    first_success_iteration: int | None
    uphill_proposed: int = 0
    uphill_accepted: int = 0
    trace: Trace | None = None

    @property
    def modeled_time_to_success(self) -> float | None:
        """Modeled seconds until the first exact equilibrium was visited."""
        if self.first_success_iteration is None:
            return None
        return self.modeled_time * self.first_success_iteration / self.iterations


class ObjectiveBackend(Protocol):
    def evaluate(self, prof: QuantizedProfile) -> float: ...
    def phase1(self, prof: QuantizedProfile) -> tuple: ...
    def phase2(self, prof: QuantizedProfile) -> tuple: ...
    def spawn(self, seed_seq: np.random.SeedSequence) -> "ObjectiveBackend": ...


class ExactBackend:
    """Evaluates the objective exactly via integer lattice arithmetic."""

    def __init__(self, game: BimatrixGame, timing: cim.CrossbarConfig | None = None):
        self.game = game
        self._timing = timing if timing is not None else cim.CrossbarConfig(
            intervals=1, cells_per_element=max(game.max_payoff, 1)
        )

    def evaluate(self, prof: QuantizedProfile) -> Fraction:
        return qubo.max_qubo_counts(self.game, prof)

    def phase1(self, prof: QuantizedProfile) -> tuple[Fraction, Fraction]:
        dequantized = lattice.dequantize_profile(prof)
        return (
            qubo.alpha(self.game, dequantized.q),
            qubo.beta(self.game, dequantized.p),
        )

    def phase2(self, prof: QuantizedProfile) -> tuple[Fraction, Fraction]:
        dequantized = lattice.dequantize_profile(prof)
        _, _, vmv_m, vmv_n = qubo.max_qubo_decomposed(self.game, dequantized)
        return vmv_m, vmv_n

    def spawn(self, seed_seq) -> "ExactBackend":
        return self  # stateless

    @property
    def timing_config(self) -> cim.CrossbarConfig:
        return self._timing

    @property
    def is_noisy(self) -> bool:
        return False


def two_phase_evaluate(backend, prof: QuantizedProfile):
    """phase1 max terms plus phase2 bilinear terms, combined.

    With the exact backend this equals ``qubo.max_qubo``; with the simulator
    it is the (possibly noisy) hardware estimate.
    """
    a, b = backend.phase1(prof)
    vmv_m, vmv_n = backend.phase2(prof)
    return a + b - vmv_m - vmv_n


def metropolis(delta_e: float, temperature: float, rng: Rng) -> bool:
    """Accept iff delta_e <= 0, else with probability exp(-delta_e/T).

    Draws from the rng only for uphill proposals, so acceptance of downhill
    moves never advances the stream.
    """
    if math.isnan(delta_e) or math.isinf(delta_e):
        raise BackendError(f"non-finite objective change: {delta_e}")
    if delta_e <= 0:
        return True
    return float(rng.random()) < math.exp(-delta_e / temperature)


def _modeled_time(game: BimatrixGame, schedule: Schedule, backend) -> float:
    return cim.modeled_time(schedule, cim.wta_depth_for(game), backend.timing_config)


def anneal(
    game: BimatrixGame,
    backend,
    schedule: Schedule,
    intervals: int,
    rng: Rng,
    record_trace: bool = False,
    move_both_players: bool = False,
) -> RunResult:
    """One annealing run from a uniformly random starting profile.

    The exact backend dispatches to the compiled integer kernel; other
    backends run the pure-Python loop. (seed, configuration) determines the
    result bit for bit either way.
    """
    if intervals < 1:
        raise InputError("intervals must be >= 1")
    if isinstance(backend, ExactBackend):
        return _anneal_kernel(game, backend, schedule, intervals, rng, record_trace, move_both_players)
    return _anneal_python(game, backend, schedule, intervals, rng, record_trace, move_both_players)


def _anneal_kernel(game, backend, schedule, intervals, rng, record_trace, move_both):
    start = lattice.random_profile(game.n, game.m, intervals, rng)
    words = seed_words_from(rng)
    iterations = schedule.iterations
    trace_f = np.empty(iterations if record_trace else 0, dtype=np.float64)
    trace_t = np.empty(iterations if record_trace else 0, dtype=np.float64)
    (
        best_p,
        best_q,
        best_scaled,
        final_p,
        final_q,
        final_scaled,
        accepted,
        uphill_proposed,
        uphill_accepted,
        first_zero,
    ) = anneal_ints(
        game.m_array,
        game.n_array,
        np.array(start.p.counts, dtype=np.int64),
        np.array(start.q.counts, dtype=np.int64),
        intervals,
        iterations,
        schedule.t_max,
        schedule.decay,
        schedule.linear_step,
        schedule.mode == "linear",
        move_both,
        words,
        trace_f,
        trace_t,
        record_trace,
    )
    scale_sq = intervals * intervals
    best_profile = lattice.profile_from_counts(best_p, best_q, intervals)
    final_profile = lattice.profile_from_counts(final_p, final_q, intervals)
    best_f = Fraction(int(best_scaled), scale_sq)
    final_f = Fraction(int(final_scaled), scale_sq)
    return RunResult(
        best_profile=best_profile,
        best_f=best_f,
        final_profile=final_profile,
        final_f=final_f,
        accepted_moves=int(accepted),
        evaluations=iterations + 1,
        iterations=iterations,
        modeled_time=_modeled_time(game, schedule, backend),
        succeeded=best_f == 0,
        final_succeeded=final_f == 0,
        first_success_iteration=int(first_zero) if first_zero >= 0 else None,
        uphill_proposed=int(uphill_proposed),
        uphill_accepted=int(uphill_accepted),
        trace=Trace(trace_f, trace_t) if record_trace else None,
    )


def _anneal_python(game, backend, schedule, intervals, rng, record_trace, move_both):
    current = lattice.random_profile(game.n, game.m, intervals, rng)
    value = float(backend.evaluate(current))
    if not math.isfinite(value):
        raise BackendError(f"backend returned non-finite objective {value}")
    best_profile, best_value = current, value
    first_zero = 0 if qubo.is_equilibrium_counts(game, current) else None
    accepted = 0
    uphill_proposed = 0
    uphill_accepted = 0
    iterations = schedule.iterations
    trace_f = np.empty(iterations if record_trace else 0)
    trace_t = np.empty(iterations if record_trace else 0)
    temperature = schedule.t_max
    for it in range(iterations):
        candidate = lattice.neighbor(current, rng, move_both)
        cand_value = float(backend.evaluate(candidate))
        if not math.isfinite(cand_value):
            raise BackendError(f"backend returned non-finite objective {cand_value}")
        delta = cand_value - value
        uphill = delta > 0
        if uphill:
            uphill_proposed += 1
        if metropolis(delta, temperature, rng):
            if uphill:
                uphill_accepted += 1
            accepted += 1
            current, value = candidate, cand_value
            if value < best_value:
                best_profile, best_value = current, value
            if first_zero is None and qubo.is_equilibrium_counts(game, current):
                first_zero = it + 1
        if record_trace:
            trace_f[it] = value
            trace_t[it] = temperature
        if schedule.mode == "linear":
            temperature -= schedule.linear_step
        else:
            temperature *= schedule.decay

    best_f = qubo.max_qubo_counts(game, best_profile)
    final_f = qubo.max_qubo_counts(game, current)
    return RunResult(
        best_profile=best_profile,
        best_f=best_f,
        final_profile=current,
        final_f=final_f,
        accepted_moves=accepted,
        evaluations=iterations + 1,
        iterations=iterations,
        modeled_time=_modeled_time(game, schedule, backend),
        succeeded=best_f == 0,
        final_succeeded=final_f == 0,
        first_success_iteration=first_zero,
        uphill_proposed=uphill_proposed,
        uphill_accepted=uphill_accepted,
        trace=Trace(trace_f, trace_t) if record_trace else None,
    )


@dataclass
class BatchStats:
    """Order-independent aggregation of many independent runs."""

    runs: int
    intervals: int
    successes: int = 0
    final_successes: int = 0
    total_evaluations: int = 0
    solution_counts: dict = field(default_factory=dict)
    time_to_success_sum: float = 0.0
    results: list | None = None

    @property
    def success_rate(self) -> float:
        return self.successes / self.runs

    @property
    def final_success_rate(self) -> float:
        return self.final_successes / self.runs

    @property
    def mean_time_to_success(self) -> float | None:
        if self.successes == 0:
            return None
        return self.time_to_success_sum / self.successes

    def distinct_solutions(self) -> list[QuantizedProfile]:
        return [
            lattice.profile_from_counts(p, q, self.intervals)
            for p, q in sorted(self.solution_counts)
        ]


def run_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """The deterministic per-run seed: split(master, index)."""
    return np.random.SeedSequence(master_seed, spawn_key=(index,))


def run_many(
    game: BimatrixGame,
    backend,
    schedule: Schedule,
    intervals: int,
    runs: int,
    seed: int,
    threads: int = 1,
    move_both_players: bool = False,
    collect_results: bool = False,
) -> BatchStats:
    """Independent annealing runs with per-run seeds split off a master seed.

    Every run owns its generator and backend instance, so results are
    identical at any parallelism degree and in any execution order; the
    aggregation below walks runs in index order.
    """
    if runs < 1:
        raise InputError("runs must be >= 1")

    def one(index: int) -> RunResult:
        seed_seq = run_seed(seed, index)
        rng_child, backend_child = seed_seq.spawn(2)
        rng = np.random.Generator(np.random.PCG64(rng_child))
        run_backend = backend.spawn(backend_child)
        return anneal(
            game, run_backend, schedule, intervals, rng, move_both_players=move_both_players
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, range(runs)))
    else:
        results = [one(i) for i in range(runs)]

    stats = BatchStats(runs=runs, intervals=intervals, results=results if collect_results else None)
    for result in results:
        stats.total_evaluations += result.evaluations
        if result.final_succeeded:
            stats.final_successes += 1
        if result.succeeded:
            stats.successes += 1
            key = result.best_profile.key()
            stats.solution_counts[key] = stats.solution_counts.get(key, 0) + 1
            time_to = result.modeled_time_to_success
            if time_to is not None:
                stats.time_to_success_sum += time_to
    return stats


# --------------------------------------------------------------------------
# Baseline: annealing over the slack-penalty objective's bit space
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SQuboRunResult:
    best_assignment: qubo.SQuboAssignment
    best_value: Fraction
    decoded: object  # StrategyProfile | None
    succeeded: bool
    accepted_moves: int
    evaluations: int


def anneal_s_qubo(
    obj: qubo.SQuboObjective, schedule: Schedule, rng: Rng
) -> SQuboRunResult:
    """Single-bit-flip annealing over the baseline's binary search space.

    The baseline search lives in bit vectors, so this is the natural move
    set. Success means the best assignment decodes to a valid profile that
    the exact objective confirms as an equilibrium; penalties alone are not
    trusted.
    """
    game = obj.game
    widths = [
        game.n,
        game.m,
        obj.alpha_format.width,
        obj.beta_format.width,
        obj.slack_format.width,
        obj.slack_format.width,
    ]
    total_bits = sum(widths)
    bits = [int(b) for b in rng.integers(0, 2, size=total_bits)]

    def build(vector: list[int]) -> qubo.SQuboAssignment:
        parts = []
        at = 0
        for width in widths:
            parts.append(tuple(vector[at : at + width]))
            at += width
        return qubo.SQuboAssignment(*parts)

    current = build(bits)
    value = qubo.s_qubo(obj, current)
    best, best_value = current, value
    accepted = 0
    temperature = schedule.t_max
    for _ in range(schedule.iterations):
        flip = int(rng.integers(total_bits))
        bits[flip] ^= 1
        candidate = build(bits)
        cand_value = qubo.s_qubo(obj, candidate)
        if metropolis(float(cand_value - value), temperature, rng):
            accepted += 1
            current, value = candidate, cand_value
            if value < best_value:
                best, best_value = current, value
        else:
            bits[flip] ^= 1
        if schedule.mode == "linear":
            temperature -= schedule.linear_step
        else:
            temperature *= schedule.decay

    decoded = qubo.decode_assignment(best)
    succeeded = decoded is not None and qubo.max_qubo(game, decoded) == 0
    return SQuboRunResult(
        best_assignment=best,
        best_value=best_value,
        decoded=decoded,
        succeeded=succeeded,
        accepted_moves=accepted,
        evaluations=schedule.iterations + 1,
    )
