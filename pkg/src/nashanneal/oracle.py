"""Exact ground-truth enumeration of Nash equilibria for small games.

Support enumeration with fraction-free integer elimination: no floating
point touches the ground truth, so membership in the enumerated set is an
equality test. Degenerate games (best-response ties, singular indifference
systems, equilibrium continua) are flagged rather than fully enumerated.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Iterable, Sequence

from .errors import SizeError
from .game import (
    BimatrixGame,
    MixedStrategy,
    PureOrMixed,
    StrategyProfile,
    classify,
)
from .lattice import QuantizedProfile, lattice_profile_of

MAX_ACTIONS = 12


# --------------------------------------------------------------------------
# Exact linear algebra
# --------------------------------------------------------------------------


def _solve_integer_augmented(
    aug: list[list[int]], n_var: int
) -> tuple[str, list[int] | None, int]:
    """Solve an integer augmented system exactly.

    Returns ('unique', numerators, denominator) with denominator > 0, or
    ('inconsistent' | 'underdetermined', None, 0). Elimination is the Bareiss
    fraction-free scheme, so every intermediate stays an integer; the
    solution is re-verified against the input rows before being returned.
    """
    n_eq = len(aug)
    original = [row[:] for row in aug]
    prev = 1
    rank = 0
    pivot_cols: list[int] = []
    for col in range(n_var):
        pivot = next((r for r in range(rank, n_eq) if aug[r][col] != 0), None)
        if pivot is None:
            continue
        aug[rank], aug[pivot] = aug[pivot], aug[rank]
        lead = aug[rank][col]
        for r in range(rank + 1, n_eq):
            factor = aug[r][col]
            row_r, row_k = aug[r], aug[rank]
            for c in range(col, n_var + 1):
                row_r[c] = (row_r[c] * lead - factor * row_k[c]) // prev
        prev = lead
        pivot_cols.append(col)
        rank += 1

    for r in range(rank, n_eq):
        if aug[r][n_var] != 0:
            return "inconsistent", None, 0
    if rank < n_var:
        return "underdetermined", None, 0

    solution: list[Fraction] = [Fraction(0)] * n_var
    for r in range(rank - 1, -1, -1):
        col = pivot_cols[r]
        acc = Fraction(aug[r][n_var])
        for c in range(col + 1, n_var):
            acc -= aug[r][c] * solution[c]
        solution[col] = acc / aug[r][col]

    den = lcm(*(s.denominator for s in solution)) if solution else 1
    nums = [int(s * den) for s in solution]
    for row in original:
        if sum(row[j] * nums[j] for j in range(n_var)) != row[n_var] * den:
            return "inconsistent", None, 0
    return "unique", nums, den


def solve_rational_system(
    rows: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]
) -> tuple[str, tuple[Fraction, ...] | None]:
    """Solve A x = b exactly over the rationals.

    Returns ('unique', x), ('inconsistent', None) or ('underdetermined', None).
    Each equation is cleared to integers and handed to the fraction-free core.
    """
    n_var = len(rows[0]) if rows else 0
    aug: list[list[int]] = []
    for row, b in zip(rows, rhs):
        scale = lcm(*(Fraction(e).denominator for e in (*row, b)))
        aug.append([int(e * scale) for e in (*row, b)])
    status, nums, den = _solve_integer_augmented(aug, n_var)
    if status != "unique":
        return status, None
    return "unique", tuple(Fraction(num, den) for num in nums)


# --------------------------------------------------------------------------
# Enumeration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class NeSolutionSet:
    """All enumerated equilibria of one game, canonically ordered."""

    solutions: tuple[StrategyProfile, ...]
    degenerate: bool

    def tagged(self) -> tuple[tuple[StrategyProfile, PureOrMixed], ...]:
        return tuple((sol, classify(sol)) for sol in self.solutions)

    def pure(self) -> tuple[StrategyProfile, ...]:
        return tuple(s for s in self.solutions if classify(s) is PureOrMixed.PURE)

    def mixed(self) -> tuple[StrategyProfile, ...]:
        return tuple(s for s in self.solutions if classify(s) is PureOrMixed.MIXED)

    def __len__(self) -> int:
        return len(self.solutions)

    def __contains__(self, prof: StrategyProfile) -> bool:
        return any(s == prof for s in self.solutions)


def enumerate_pure(game: BimatrixGame) -> list[StrategyProfile]:
    """All pure equilibria by exhaustive scan for mutual best responses."""
    col_max = [max(game.M[i][j] for i in range(game.n)) for j in range(game.m)]
    row_max = [max(game.N[i][j] for j in range(game.m)) for i in range(game.n)]
    found = []
    for i in range(game.n):
        for j in range(game.m):
            if game.M[i][j] == col_max[j] and game.N[i][j] == row_max[i]:
                found.append(
                    StrategyProfile(
                        MixedStrategy.pure(i, game.n), MixedStrategy.pure(j, game.m)
                    )
                )
    return found


def _indifference_solution(
    matrix: Sequence[Sequence[int]],
    own_support: Sequence[int],
    opp_support: Sequence[int],
    size: int,
    transpose: bool,
) -> tuple[str, list[int] | None, int, int]:
    """Solve for the strategy on ``own_support`` equalizing the opponent's
    payoff over ``opp_support``.

    Returns (status, full-length numerator vector, value numerator, common
    denominator > 0): the strategy is nums/den and the equalized payoff is
    value/den, all exact. ``matrix`` is the opponent's payoff matrix; with
    ``transpose`` the strategy multiplies from the left (row player's
    strategy in N), otherwise from the right (column player's strategy in M).
    """
    k = len(own_support)
    aug: list[list[int]] = []
    for target in opp_support:
        coeffs = [
            matrix[source][target] if transpose else matrix[target][source]
            for source in own_support
        ]
        aug.append(coeffs + [-1, 0])  # last unknown: the common payoff value
    aug.append([1] * k + [0, 1])
    status, nums, den = _solve_integer_augmented(aug, k + 1)
    if status != "unique":
        return status, None, 0, 0
    full = [0] * size
    for idx, num in zip(own_support, nums[:k]):
        full[idx] = num
    return "unique", full, nums[k], den


def _support_candidate(
    game: BimatrixGame, support_p: Sequence[int], support_q: Sequence[int]
) -> tuple[str, StrategyProfile | None, bool]:
    """Try one support pair. Returns (status, profile, degenerate_hint).

    The hint fires whenever a solved strategy (a valid simplex point by
    construction) has more pure best responses than its own support size,
    which is the classical degeneracy marker. It is reported even for
    candidates that end up infeasible on the other side: the witness
    strategy exists in the game either way, and losing the hint would let
    equilibrium continua slip past the flag.
    """
    status_q, q_nums, value_p, den_q = _indifference_solution(
        game.M, support_q, support_p, game.m, transpose=False
    )
    if status_q != "unique":
        return status_q, None, status_q == "underdetermined"
    if any(q_nums[j] <= 0 for j in support_q):
        return "infeasible", None, False

    # best responses of the row player against q, in integers scaled by den_q
    row_payoffs = [sum(game.M[i][j] * q_nums[j] for j in range(game.m)) for i in range(game.n)]
    row_best = max(row_payoffs)
    degenerate = row_payoffs.count(row_best) > len(support_q)
    if value_p != row_best:
        return "infeasible", None, degenerate

    status_p, p_nums, value_q, den_p = _indifference_solution(
        game.N, support_p, support_q, game.n, transpose=True
    )
    if status_p != "unique":
        return status_p, None, degenerate or status_p == "underdetermined"
    if any(p_nums[i] <= 0 for i in support_p):
        return "infeasible", None, degenerate

    col_payoffs = [sum(game.N[i][j] * p_nums[i] for i in range(game.n)) for j in range(game.m)]
    col_best = max(col_payoffs)
    degenerate = degenerate or col_payoffs.count(col_best) > len(support_p)
    if value_q != col_best:
        return "infeasible", None, degenerate

    profile = StrategyProfile(
        MixedStrategy(tuple(Fraction(num, den_p) for num in p_nums)),
        MixedStrategy(tuple(Fraction(num, den_q) for num in q_nums)),
    )
    return "solution", profile, degenerate


def _sort_key(profile: StrategyProfile):
    return (
        profile.p.support(),
        profile.q.support(),
        profile.p.probs,
        profile.q.probs,
    )


def enumerate_all(game: BimatrixGame) -> NeSolutionSet:
    """All equilibria by support enumeration, exact.

    Equal-size support pairs suffice for nondegenerate games; when any
    degeneracy marker appears (singular or underdetermined indifference
    system, best-response ties outside a support) the unequal-size pairs are
    scanned as well and the result carries ``degenerate=True``. Equilibrium
    continua are not expanded: the flag is the signal that the finite list
    may not be exhaustive.
    """
    if game.n > MAX_ACTIONS or game.m > MAX_ACTIONS:
        raise SizeError(
            f"support enumeration limited to {MAX_ACTIONS} actions per player"
        )
    found: dict[tuple, StrategyProfile] = {}
    # Pure strategies are checked for degeneracy witnesses exhaustively: a
    # pure strategy with two or more tied best responses already makes the
    # game degenerate, whether or not any equilibrium sits on the tie.
    # Mixed-strategy witnesses are counted as the support scan solves them.
    degenerate = False
    for j in range(game.m):
        column = [game.M[i][j] for i in range(game.n)]
        if column.count(max(column)) > 1:
            degenerate = True
    for i in range(game.n):
        row = list(game.N[i])
        if row.count(max(row)) > 1:
            degenerate = True

    def scan(pairs: Iterable[tuple[Sequence[int], Sequence[int]]]) -> None:
        nonlocal degenerate
        for support_p, support_q in pairs:
            status, profile, hint = _support_candidate(game, support_p, support_q)
            degenerate = degenerate or hint
            if status == "solution" and profile is not None:
                found.setdefault((profile.p.probs, profile.q.probs), profile)

    scan(
        (sp, sq)
        for k in range(1, min(game.n, game.m) + 1)
        for sp in itertools.combinations(range(game.n), k)
        for sq in itertools.combinations(range(game.m), k)
    )
    if degenerate:
        scan(
            (sp, sq)
            for a in range(1, game.n + 1)
            for b in range(1, game.m + 1)
            if a != b
            for sp in itertools.combinations(range(game.n), a)
            for sq in itertools.combinations(range(game.m), b)
        )

    solutions = tuple(sorted(found.values(), key=_sort_key))
    return NeSolutionSet(solutions, degenerate)


# --------------------------------------------------------------------------
# Coverage scoring
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CoverageReport:
    """How much of the ground truth a batch of found profiles recovers.

    Truth solutions whose probabilities are not multiples of 1/I cannot be
    represented on the lattice and are listed as unreachable; the proportion
    is computed over the reachable ones only.
    """

    intervals: int
    reachable: tuple[QuantizedProfile, ...]
    unreachable: tuple[StrategyProfile, ...]
    found_reachable: tuple[QuantizedProfile, ...]
    missed: tuple[QuantizedProfile, ...]

    @property
    def reachable_count(self) -> int:
        return len(self.reachable)

    @property
    def proportion(self) -> float | None:
        if not self.reachable:
            return None
        return len(self.found_reachable) / len(self.reachable)


def coverage(
    found: Iterable[QuantizedProfile], truth: NeSolutionSet, intervals: int
) -> CoverageReport:
    found_keys = {prof.key() for prof in found}
    reachable: list[QuantizedProfile] = []
    unreachable: list[StrategyProfile] = []
    hits: list[QuantizedProfile] = []
    missed: list[QuantizedProfile] = []
    for solution in truth.solutions:
        lattice_form = lattice_profile_of(solution, intervals)
        if lattice_form is None:
            unreachable.append(solution)
            continue
        reachable.append(lattice_form)
        if lattice_form.key() in found_keys:
            hits.append(lattice_form)
        else:
            missed.append(lattice_form)
    return CoverageReport(
        intervals, tuple(reachable), tuple(unreachable), tuple(hits), tuple(missed)
    )
