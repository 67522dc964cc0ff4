"""Two-player bimatrix games with exact rational arithmetic.

Payoffs are canonicalized to nonnegative integers at load time (see
``normalize_payoffs``); strategies are vectors of ``fractions.Fraction``.
Keeping everything rational means the central predicate of the whole
package, "this profile is an equilibrium", is a plain equality test with
no tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import cached_property
from math import lcm
from typing import Sequence

import numpy as np

from .errors import DimensionError, InputError

RationalLike = Fraction | int | float | str


def as_fraction(value: RationalLike) -> Fraction:
    """Convert a number or ``"a/b"`` string to an exact Fraction."""
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError, OverflowError, TypeError) as exc:
        raise InputError(f"not a finite rational: {value!r}") from exc


class PureOrMixed(Enum):
    PURE = "pure"
    MIXED = "mixed"


@dataclass(frozen=True)
class BimatrixGame:
    """A two-player game in strategic form.

    ``M[i][j]`` and ``N[i][j]`` are the row and column player's payoffs when
    row action ``i`` meets column action ``j``. Both matrices share the same
    shape and hold nonnegative integers; arbitrary rational payoffs enter
    through :func:`normalize_payoffs`, which rescales and shifts them without
    changing the equilibrium set.
    """

    name: str
    M: tuple[tuple[int, ...], ...]
    N: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        if not self.M or not self.M[0]:
            raise DimensionError("payoff matrices must be at least 1x1")
        rows, cols = len(self.M), len(self.M[0])
        for matrix, label in ((self.M, "M"), (self.N, "N")):
            if len(matrix) != rows or any(len(row) != cols for row in matrix):
                raise DimensionError(f"{label} must be a {rows}x{cols} matrix")
            for row in matrix:
                for entry in row:
                    if not isinstance(entry, int) or isinstance(entry, bool) or entry < 0:
                        raise InputError(
                            f"{label} entries must be nonnegative integers, got {entry!r}"
                        )

    @classmethod
    def from_lists(cls, name: str, m_rows: Sequence[Sequence[int]], n_rows: Sequence[Sequence[int]]) -> "BimatrixGame":
        def freeze(rows):
            out = []
            for row in rows:
                frozen = []
                for entry in row:
                    value = int(entry)
                    if value != entry:
                        raise InputError(f"payoff entry {entry!r} is not an integer")
                    frozen.append(value)
                out.append(tuple(frozen))
            return tuple(out)

        return cls(name, freeze(m_rows), freeze(n_rows))

    @property
    def n(self) -> int:
        """Row player's action count."""
        return len(self.M)

    @property
    def m(self) -> int:
        """Column player's action count."""
        return len(self.M[0])

    @cached_property
    def m_array(self) -> np.ndarray:
        return np.array(self.M, dtype=np.int64)

    @cached_property
    def n_array(self) -> np.ndarray:
        return np.array(self.N, dtype=np.int64)

    @cached_property
    def max_payoff(self) -> int:
        return max(max(max(row) for row in self.M), max(max(row) for row in self.N))


@dataclass(frozen=True)
class MixedStrategy:
    """A probability vector over one player's actions, exact rationals."""

    probs: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if not self.probs:
            raise InputError("a strategy needs at least one action")
        if any(p < 0 for p in self.probs):
            raise InputError("strategy probabilities must be nonnegative")
        if sum(self.probs) != 1:
            raise InputError(f"strategy probabilities must sum to 1, got {sum(self.probs)}")

    @classmethod
    def from_values(cls, values: Sequence[RationalLike]) -> "MixedStrategy":
        return cls(tuple(as_fraction(v) for v in values))

    @classmethod
    def pure(cls, index: int, size: int) -> "MixedStrategy":
        return cls(tuple(Fraction(1 if k == index else 0) for k in range(size)))

    @classmethod
    def uniform(cls, size: int) -> "MixedStrategy":
        return cls(tuple(Fraction(1, size) for _ in range(size)))

    def support(self) -> tuple[int, ...]:
        return tuple(i for i, p in enumerate(self.probs) if p > 0)

    def __len__(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class StrategyProfile:
    """A pair of strategies, one per player."""

    p: MixedStrategy
    q: MixedStrategy


def _check_dims(game: BimatrixGame, prof: StrategyProfile) -> None:
    if len(prof.p) != game.n or len(prof.q) != game.m:
        raise DimensionError(
            f"profile is {len(prof.p)}x{len(prof.q)} but game {game.name!r} is {game.n}x{game.m}"
        )


def _matvec(matrix: tuple[tuple[int, ...], ...], vec: tuple[Fraction, ...]) -> list[Fraction]:
    return [sum((row[j] * vec[j] for j in range(len(vec))), Fraction(0)) for row in matrix]


def payoff(game: BimatrixGame, prof: StrategyProfile) -> tuple[Fraction, Fraction]:
    """Expected payoffs (p'Mq, p'Nq) for the two players, exact."""
    _check_dims(game, prof)
    mq = _matvec(game.M, prof.q.probs)
    nq = _matvec(game.N, prof.q.probs)
    f1 = sum((prof.p.probs[i] * mq[i] for i in range(game.n)), Fraction(0))
    f2 = sum((prof.p.probs[i] * nq[i] for i in range(game.n)), Fraction(0))
    return f1, f2


def epsilon_ne_gap(game: BimatrixGame, prof: StrategyProfile) -> tuple[Fraction, Fraction]:
    """Best-response regrets (g1, g2) of the two players.

    g1 = max_i (Mq)_i - p'Mq and g2 = max_j (N'p)_j - p'Nq. Both are >= 0,
    and the profile is an exact Nash equilibrium iff both are 0. Checking
    only pure deviations suffices: each player's payoff is linear in their
    own strategy, so the best response to a fixed opponent is always
    attained at a pure strategy.
    """
    _check_dims(game, prof)
    mq = _matvec(game.M, prof.q.probs)
    ntp = _matvec(tuple(zip(*game.N)), prof.p.probs)
    f1 = sum((prof.p.probs[i] * mq[i] for i in range(game.n)), Fraction(0))
    f2 = sum((prof.q.probs[j] * ntp[j] for j in range(game.m)), Fraction(0))
    return max(mq) - f1, max(ntp) - f2


def is_epsilon_ne(game: BimatrixGame, prof: StrategyProfile, eps: RationalLike) -> bool:
    """True iff both best-response regrets are <= eps."""
    threshold = as_fraction(eps)
    if threshold < 0:
        raise InputError("eps must be nonnegative")
    g1, g2 = epsilon_ne_gap(game, prof)
    return g1 <= threshold and g2 <= threshold


def classify(prof: StrategyProfile) -> PureOrMixed:
    """Pure iff each strategy puts all probability on a single action."""
    if len(prof.p.support()) == 1 and len(prof.q.support()) == 1:
        return PureOrMixed.PURE
    return PureOrMixed.MIXED


@dataclass(frozen=True)
class AffineRecord:
    """The (scale, shift) transform applied by :func:`normalize_payoffs`.

    stored = scale * raw + shift, with one shift per matrix. Positive scaling
    and per-matrix constant shifts preserve every player's best-response
    ordering, so the equilibrium set of the stored game equals that of the
    raw game.
    """

    scale: int
    shift_m: int
    shift_n: int

    def to_raw_m(self, stored: RationalLike) -> Fraction:
        return Fraction(as_fraction(stored) - self.shift_m, self.scale)

    def to_raw_n(self, stored: RationalLike) -> Fraction:
        return Fraction(as_fraction(stored) - self.shift_n, self.scale)

    @property
    def is_identity(self) -> bool:
        return self.scale == 1 and self.shift_m == 0 and self.shift_n == 0


def normalize_payoffs(
    m_raw: Sequence[Sequence[RationalLike]],
    n_raw: Sequence[Sequence[RationalLike]],
    name: str = "game",
) -> tuple[BimatrixGame, AffineRecord]:
    """Canonicalize rational payoff matrices to nonnegative integers.

    Uses the smallest integer scale (the lcm of all denominators) and the
    smallest per-matrix shifts that make every entry a nonnegative integer.
    """
    m_frac = [[as_fraction(e) for e in row] for row in m_raw]
    n_frac = [[as_fraction(e) for e in row] for row in n_raw]
    denominators = [e.denominator for row in m_frac + n_frac for e in row]
    if not denominators:
        raise InputError("payoff matrices must be nonempty")
    scale = lcm(*denominators)
    m_scaled = [[int(e * scale) for e in row] for row in m_frac]
    n_scaled = [[int(e * scale) for e in row] for row in n_frac]
    shift_m = max(0, -min(e for row in m_scaled for e in row))
    shift_n = max(0, -min(e for row in n_scaled for e in row))
    game = BimatrixGame(
        name,
        tuple(tuple(e + shift_m for e in row) for row in m_scaled),
        tuple(tuple(e + shift_n for e in row) for row in n_scaled),
    )
    return game, AffineRecord(scale, shift_m, shift_n)
