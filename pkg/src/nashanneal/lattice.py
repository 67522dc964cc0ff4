"""The quantized strategy simplex and the annealer's move generator.

Probabilities are restricted to multiples of 1/I and stored as integer
counts summing to I, which is how the simplex constraint stays satisfied
by construction throughout a run.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import InputError
from .game import MixedStrategy

Rng = np.random.Generator


@dataclass(frozen=True)
class QuantizedStrategy:
    """A strategy on the 1/I lattice: nonnegative counts summing to I."""

    counts: tuple[int, ...]
    intervals: int

    def __post_init__(self) -> None:
        if self.intervals < 1:
            raise InputError("interval count must be >= 1")
        if not self.counts:
            raise InputError("a strategy needs at least one action")
        if any(c < 0 or not isinstance(c, int) for c in self.counts):
            raise InputError("counts must be nonnegative integers")
        if sum(self.counts) != self.intervals:
            raise InputError(
                f"counts {self.counts} sum to {sum(self.counts)}, expected {self.intervals}"
            )

    def __len__(self) -> int:
        return len(self.counts)


@dataclass(frozen=True)
class QuantizedProfile:
    """A lattice strategy pair sharing one interval count."""

    p: QuantizedStrategy
    q: QuantizedStrategy

    def __post_init__(self) -> None:
        if self.p.intervals != self.q.intervals:
            raise InputError("both strategies must use the same interval count")

    @property
    def intervals(self) -> int:
        return self.p.intervals

    def key(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """Hashable identity used for exact deduplication."""
        return (self.p.counts, self.q.counts)


def dequantize(strategy: QuantizedStrategy) -> MixedStrategy:
    """Counts to exact probabilities counts[i]/I."""
    return MixedStrategy(tuple(Fraction(c, strategy.intervals) for c in strategy.counts))


def dequantize_profile(prof: QuantizedProfile):
    from .game import StrategyProfile

    return StrategyProfile(dequantize(prof.p), dequantize(prof.q))


def quantize(strategy: MixedStrategy, intervals: int) -> QuantizedStrategy:
    """Round a strategy onto the lattice by largest-remainder apportionment.

    Exact whenever every I*prob is an integer; otherwise the leftover quanta
    go to the largest fractional remainders (ties broken toward lower index,
    so the result is deterministic).
    """
    if intervals < 1:
        raise InputError("interval count must be >= 1")
    scaled = [p * intervals for p in strategy.probs]
    base = [int(s) for s in scaled]  # floor: probs are nonnegative
    leftover = intervals - sum(base)
    remainders = sorted(
        range(len(scaled)), key=lambda i: (scaled[i] - base[i], -i), reverse=True
    )
    for i in remainders[:leftover]:
        base[i] += 1
    return QuantizedStrategy(tuple(base), intervals)


def is_on_lattice(strategy: MixedStrategy, intervals: int) -> bool:
    return all((p * intervals).denominator == 1 for p in strategy.probs)


def random_counts(actions: int, intervals: int, rng: Rng) -> tuple[int, ...]:
    """One count vector drawn uniformly from all vectors summing to I.

    Stars-and-bars: a uniform (actions-1)-subset of bar positions among
    I + actions - 1 slots induces a uniform composition.
    """
    if actions < 1 or intervals < 1:
        raise InputError("actions and intervals must be >= 1")
    if actions == 1:
        return (intervals,)
    bars = np.sort(rng.choice(intervals + actions - 1, size=actions - 1, replace=False))
    return _bars_to_counts(bars, intervals, actions)


def random_counts_batch(actions: int, intervals: int, size: int, rng: Rng) -> np.ndarray:
    """Vectorized version of :func:`random_counts`; returns (size, actions) int64."""
    if actions < 1 or intervals < 1:
        raise InputError("actions and intervals must be >= 1")
    if actions == 1:
        return np.full((size, 1), intervals, dtype=np.int64)
    slots = intervals + actions - 1
    # argsort of iid uniforms = random permutation; first columns = uniform subset
    bars = np.sort(rng.random((size, slots)).argsort(axis=1)[:, : actions - 1], axis=1)
    counts = np.empty((size, actions), dtype=np.int64)
    counts[:, 0] = bars[:, 0]
    if actions > 2:
        counts[:, 1:-1] = np.diff(bars, axis=1) - 1
    counts[:, -1] = (slots - 1) - bars[:, -1]
    return counts


def _bars_to_counts(bars: np.ndarray, intervals: int, actions: int) -> tuple[int, ...]:
    counts = [int(bars[0])]
    for a, b in zip(bars[:-1], bars[1:]):
        counts.append(int(b - a - 1))
    counts.append(intervals + actions - 2 - int(bars[-1]))
    return tuple(counts)


def random_profile(n: int, m: int, intervals: int, rng: Rng) -> QuantizedProfile:
    """Uniformly random lattice profile; deterministic given the rng state."""
    return QuantizedProfile(
        QuantizedStrategy(random_counts(n, intervals, rng), intervals),
        QuantizedStrategy(random_counts(m, intervals, rng), intervals),
    )


def _transfer_one(counts: tuple[int, ...], rng: Rng) -> tuple[int, ...]:
    """Move a single quantum from a random nonempty action to a different one."""
    donors = [i for i, c in enumerate(counts) if c > 0]
    donor = donors[int(rng.integers(len(donors)))]
    offset = int(rng.integers(len(counts) - 1))
    recipient = offset if offset < donor else offset + 1
    out = list(counts)
    out[donor] -= 1
    out[recipient] += 1
    return tuple(out)


def neighbor(prof: QuantizedProfile, rng: Rng, move_both_players: bool = False) -> QuantizedProfile:
    """One annealing move: shift one quantum within one player's strategy.

    The player is chosen uniformly; a single-action player cannot move, so
    the other one is used instead, and a 1x1 profile is returned unchanged.
    With ``move_both_players`` both strategies shift one quantum each.
    """
    n, m = len(prof.p), len(prof.q)
    if n == 1 and m == 1:
        return prof
    intervals = prof.intervals
    if move_both_players:
        p_counts = _transfer_one(prof.p.counts, rng) if n > 1 else prof.p.counts
        q_counts = _transfer_one(prof.q.counts, rng) if m > 1 else prof.q.counts
        return QuantizedProfile(
            QuantizedStrategy(p_counts, intervals), QuantizedStrategy(q_counts, intervals)
        )
    player = int(rng.integers(2))
    if player == 0 and n == 1:
        player = 1
    elif player == 1 and m == 1:
        player = 0
    if player == 0:
        return QuantizedProfile(
            QuantizedStrategy(_transfer_one(prof.p.counts, rng), intervals), prof.q
        )
    return QuantizedProfile(
        prof.p, QuantizedStrategy(_transfer_one(prof.q.counts, rng), intervals)
    )


def profile_from_counts(p_counts, q_counts, intervals: int) -> QuantizedProfile:
    return QuantizedProfile(
        QuantizedStrategy(tuple(int(c) for c in p_counts), intervals),
        QuantizedStrategy(tuple(int(c) for c in q_counts), intervals),
    )


def lattice_profile_of(strategy_pair, intervals: int) -> QuantizedProfile | None:
    """Exact lattice representation of a rational profile, or None if off-lattice."""
    p, q = strategy_pair.p, strategy_pair.q
    if not (is_on_lattice(p, intervals) and is_on_lattice(q, intervals)):
        return None
    return profile_from_counts(
        [int(prob * intervals) for prob in p.probs],
        [int(prob * intervals) for prob in q.probs],
        intervals,
    )
