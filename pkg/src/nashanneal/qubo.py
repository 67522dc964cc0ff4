"""Objective functions whose minima encode Nash equilibria.

Two objectives live here:

* the max-form objective  f = max(Mq) + max(N'p) - p'(M+N)q,  which equals
  the sum of both players' best-response regrets, so f >= 0 always and
  f = 0 exactly at the equilibria (no penalty weights, no slack variables);
* the slack-penalty binary baseline, which squeezes the same optimization
  into a QUBO over bit vectors and fixed-point codewords at the cost of
  distorting the objective.

On the 1/I lattice the max-form objective times I^2 is an integer, which is
what the annealer kernel and the bulk test helpers evaluate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, EncodingError, InputError, SizeError
from .game import BimatrixGame, MixedStrategy, StrategyProfile, _check_dims, _matvec
from .lattice import QuantizedProfile


def alpha(game: BimatrixGame, q: MixedStrategy) -> Fraction:
    """max(Mq): the row player's best-response payoff against q."""
    if len(q) != game.m:
        raise DimensionError(f"q has {len(q)} entries, game has {game.m} columns")
    return max(_matvec(game.M, q.probs))


def beta(game: BimatrixGame, p: MixedStrategy) -> Fraction:
    """max(N'p): the column player's best-response payoff against p."""
    if len(p) != game.n:
        raise DimensionError(f"p has {len(p)} entries, game has {game.n} rows")
    return max(_matvec(tuple(zip(*game.N)), p.probs))


def max_qubo_decomposed(
    game: BimatrixGame, prof: StrategyProfile
) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """The objective's three components, with the bilinear term split per matrix.

    Returns (alpha, beta, p'Mq, p'Nq); the objective is the first two minus
    the last two. This is the reference contract the crossbar backend must
    reproduce exactly when its noise knobs are all zero.
    """
    _check_dims(game, prof)
    mq = _matvec(game.M, prof.q.probs)
    ntp = _matvec(tuple(zip(*game.N)), prof.p.probs)
    vmv_m = sum((prof.p.probs[i] * mq[i] for i in range(game.n)), Fraction(0))
    vmv_n = sum((prof.q.probs[j] * ntp[j] for j in range(game.m)), Fraction(0))
    return max(mq), max(ntp), vmv_m, vmv_n


def max_qubo(game: BimatrixGame, prof: StrategyProfile) -> Fraction:
    """The max-form objective value, exact.

    Identity worth keeping in mind: f equals g1 + g2 from
    :func:`nashanneal.game.epsilon_ne_gap`, hence f >= 0 everywhere and
    f = 0 iff the profile is an exact Nash equilibrium.
    """
    a, b, vm, vn = max_qubo_decomposed(game, prof)
    return a + b - vm - vn


def scaled_objective(game: BimatrixGame, p_counts: Sequence[int], q_counts: Sequence[int]) -> int:
    """I^2 * f at a lattice profile, as an exact Python integer.

    With counts c_p, c_q summing to I:
    I^2*f = I*max(M c_q) + I*max(N' c_p) - c_p'(M+N)c_q.
    """
    if len(p_counts) != game.n or len(q_counts) != game.m:
        raise DimensionError("count vectors do not match the game dimensions")
    intervals = sum(p_counts)
    m_rows, n_rows = game.M, game.N
    best_m = max(sum(row[j] * q_counts[j] for j in range(game.m)) for row in m_rows)
    best_n = max(
        sum(n_rows[i][j] * p_counts[i] for i in range(game.n)) for j in range(game.m)
    )
    vmv = sum(
        p_counts[i] * sum((m_rows[i][j] + n_rows[i][j]) * q_counts[j] for j in range(game.m))
        for i in range(game.n)
    )
    return intervals * (best_m + best_n) - vmv


def scaled_objective_batch(
    game: BimatrixGame, p_counts: np.ndarray, q_counts: np.ndarray, intervals: int
) -> np.ndarray:
    """Vectorized ``scaled_objective`` over row-aligned count matrices.

    ``p_counts`` is (B, n) and ``q_counts`` (B, m), each row summing to
    ``intervals``. Returns int64 values of I^2 * f; exact as long as the
    intermediate products stay inside int64, which holds for every game this
    package targets (payoffs and interval counts far below 2^31).
    """
    m_arr, n_arr = game.m_array, game.n_array
    best_m = (q_counts @ m_arr.T).max(axis=1)
    best_n = (p_counts @ n_arr).max(axis=1)
    vmv = ((p_counts @ (m_arr + n_arr)) * q_counts).sum(axis=1)
    return intervals * (best_m + best_n) - vmv


def max_qubo_counts(game: BimatrixGame, prof: QuantizedProfile) -> Fraction:
    """Exact objective value of a lattice profile via integer accounting."""
    return Fraction(
        scaled_objective(game, prof.p.counts, prof.q.counts), prof.intervals**2
    )


def is_equilibrium_counts(game: BimatrixGame, prof: QuantizedProfile) -> bool:
    return scaled_objective(game, prof.p.counts, prof.q.counts) == 0


# --------------------------------------------------------------------------
# Slack-penalty QUBO baseline
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class FixedPointFormat:
    """Unsigned fixed-point codeword layout, MSB first."""

    integer_bits: int
    fraction_bits: int

    def __post_init__(self) -> None:
        if self.integer_bits < 0 or self.fraction_bits < 0 or self.width < 1:
            raise InputError("fixed-point format needs at least one bit")

    @property
    def width(self) -> int:
        return self.integer_bits + self.fraction_bits

    @property
    def resolution(self) -> Fraction:
        return Fraction(1, 2**self.fraction_bits)

    @property
    def max_value(self) -> Fraction:
        return Fraction(2**self.width - 1, 2**self.fraction_bits)

    def decode(self, bits: Sequence[int]) -> Fraction:
        if len(bits) != self.width:
            raise EncodingError(f"expected {self.width} bits, got {len(bits)}")
        if any(b not in (0, 1) for b in bits):
            raise EncodingError(f"codeword bits must be 0/1, got {tuple(bits)}")
        raw = 0
        for b in bits:
            raw = (raw << 1) | b
        return Fraction(raw, 2**self.fraction_bits)

    def encode(self, value) -> tuple[int, ...]:
        """Exact codeword for a representable value (used by tests and search)."""
        frac = Fraction(value)
        raw = frac * 2**self.fraction_bits
        if raw.denominator != 1 or not 0 <= raw <= 2**self.width - 1:
            raise EncodingError(f"{value} is not representable in {self}")
        raw = int(raw)
        return tuple((raw >> (self.width - 1 - k)) & 1 for k in range(self.width))

    def all_values(self) -> Iterable[Fraction]:
        step = self.resolution
        for raw in range(2**self.width):
            yield raw * step


@dataclass(frozen=True)
class SQuboObjective:
    """The slack-penalty baseline objective and its knobs.

    f = -p'(M+N)q + alpha + beta
        + A (sum_i p_i - 1)^2 + B (sum_j q_j - 1)^2
        + C (sum_{i,j} m_ij q_j - alpha + zeta)^2
        + D (sum_{j,i} n_ij p_i - beta + eta)^2

    evaluated literally with the constraint residuals aggregated over both
    indices. A per-row formulation (one slack per best-response inequality)
    would be the more standard reading; only the aggregated form is
    implemented here, and the baseline's looseness is the point of keeping
    it around. alpha, beta, zeta, eta come from unsigned fixed-point codes.
    """

    game: BimatrixGame
    weight_a: Fraction
    weight_b: Fraction
    weight_c: Fraction
    weight_d: Fraction
    alpha_format: FixedPointFormat
    beta_format: FixedPointFormat
    slack_format: FixedPointFormat

    def __post_init__(self) -> None:
        if min(self.weight_a, self.weight_b, self.weight_c, self.weight_d) < 0:
            raise InputError("penalty weights must be nonnegative")

    @classmethod
    def with_defaults(cls, game: BimatrixGame) -> "SQuboObjective":
        """Default weights 2*max_payoff + 1 and integer bits covering the payoffs."""
        top = max(game.max_payoff, 1)
        weight = Fraction(2 * game.max_payoff + 1)
        fmt = FixedPointFormat(integer_bits=top.bit_length(), fraction_bits=3)
        return cls(game, weight, weight, weight, weight, fmt, fmt, fmt)

    @cached_property
    def bit_count(self) -> int:
        return (
            self.game.n
            + self.game.m
            + self.alpha_format.width
            + self.beta_format.width
            + 2 * self.slack_format.width
        )


@dataclass(frozen=True)
class SQuboAssignment:
    """One point of the baseline's binary search space."""

    p_bits: tuple[int, ...]
    q_bits: tuple[int, ...]
    alpha_code: tuple[int, ...]
    beta_code: tuple[int, ...]
    zeta_code: tuple[int, ...]
    eta_code: tuple[int, ...]

    def __post_init__(self) -> None:
        for bits in (self.p_bits, self.q_bits, self.alpha_code, self.beta_code, self.zeta_code, self.eta_code):
            if any(b not in (0, 1) for b in bits):
                raise EncodingError("assignment entries must be 0/1")


def s_qubo(obj: SQuboObjective, asg: SQuboAssignment) -> Fraction:
    """Evaluate the slack-penalty objective at one binary assignment."""
    game = obj.game
    if len(asg.p_bits) != game.n or len(asg.q_bits) != game.m:
        raise EncodingError("p_bits/q_bits lengths do not match the game")
    a_val = obj.alpha_format.decode(asg.alpha_code)
    b_val = obj.beta_format.decode(asg.beta_code)
    zeta = obj.slack_format.decode(asg.zeta_code)
    eta = obj.slack_format.decode(asg.eta_code)
    p, q = asg.p_bits, asg.q_bits
    bilinear = sum(
        (game.M[i][j] + game.N[i][j]) * p[i] * q[j]
        for i in range(game.n)
        for j in range(game.m)
    )
    sum_m_q = sum(game.M[i][j] * q[j] for i in range(game.n) for j in range(game.m))
    sum_n_p = sum(game.N[i][j] * p[i] for i in range(game.n) for j in range(game.m))
    return (
        -Fraction(bilinear)
        + a_val
        + b_val
        + obj.weight_a * (sum(p) - 1) ** 2
        + obj.weight_b * (sum(q) - 1) ** 2
        + obj.weight_c * (sum_m_q - a_val + zeta) ** 2
        + obj.weight_d * (sum_n_p - b_val + eta) ** 2
    )


def decode_assignment(asg: SQuboAssignment) -> StrategyProfile | None:
    """The strategy profile an assignment denotes, or None.

    Bit vectors are only valid strategies when exactly one bit is set, so
    mixed profiles are never representable in this search space.
    """
    if sum(asg.p_bits) != 1 or sum(asg.q_bits) != 1:
        return None
    return StrategyProfile(
        MixedStrategy.from_values(asg.p_bits), MixedStrategy.from_values(asg.q_bits)
    )


def _best_code_pair(
    value_fmt: FixedPointFormat, slack_fmt: FixedPointFormat, target: int, weight: Fraction
) -> tuple[Fraction, Fraction, Fraction]:
    """min over codewords (v, s) of  v + weight*(target - v + s)^2.

    For each slack value the summand is convex in v, so on the uniform code
    grid the minimum sits at one of the two grid neighbors of the continuous
    argmin; that keeps the scan exact while avoiding the full product grid.
    """
    step = value_fmt.resolution
    v_max_raw = 2**value_fmt.width - 1
    best = None
    for slack in slack_fmt.all_values():
        if weight == 0:
            candidates = (Fraction(0),)
        else:
            center = Fraction(target) + slack - Fraction(1, 2 * weight)
            raw = center / step
            lo = min(max(int(raw), 0), v_max_raw)
            candidates = {lo * step, min(lo + 1, v_max_raw) * step}
        for v in candidates:
            cost = v + weight * (target - v + slack) ** 2
            key = (cost, v, slack)
            if best is None or key < best:
                best = key
    assert best is not None
    return best  # (cost, value, slack)


def minimize_s_qubo(obj: SQuboObjective) -> tuple[Fraction, tuple[SQuboAssignment, ...]]:
    """Exhaustively minimize the baseline objective over its binary space.

    Enumerates every (p_bits, q_bits) pair; the codeword part of the
    objective separates into an (alpha, zeta) term depending only on q and a
    (beta, eta) term depending only on p, each minimized exactly per pair.
    Returns the global minimum and one canonical minimizing assignment per
    minimizing (p_bits, q_bits) pair.
    """
    game = obj.game
    if game.n + game.m > 24:
        raise SizeError("exhaustive minimization limited to n + m <= 24 bits")
    mn = [[game.M[i][j] + game.N[i][j] for j in range(game.m)] for i in range(game.n)]
    col_sums_m = [sum(game.M[i][j] for i in range(game.n)) for j in range(game.m)]
    row_sums_n = [sum(game.N[i][j] for j in range(game.m)) for i in range(game.n)]

    alpha_side: dict[int, tuple[Fraction, Fraction, Fraction]] = {}
    beta_side: dict[int, tuple[Fraction, Fraction, Fraction]] = {}
    best_value = None
    winners: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
    for p_bits in itertools.product((0, 1), repeat=game.n):
        s_n = sum(row_sums_n[i] for i in range(game.n) if p_bits[i])
        if s_n not in beta_side:
            beta_side[s_n] = _best_code_pair(
                obj.beta_format, obj.slack_format, s_n, obj.weight_d
            )
        pen_p = obj.weight_a * (sum(p_bits) - 1) ** 2
        for q_bits in itertools.product((0, 1), repeat=game.m):
            s_m = sum(col_sums_m[j] for j in range(game.m) if q_bits[j])
            if s_m not in alpha_side:
                alpha_side[s_m] = _best_code_pair(
                    obj.alpha_format, obj.slack_format, s_m, obj.weight_c
                )
            bilinear = sum(
                mn[i][j]
                for i in range(game.n)
                for j in range(game.m)
                if p_bits[i] and q_bits[j]
            )
            value = (
                -Fraction(bilinear)
                + pen_p
                + obj.weight_b * (sum(q_bits) - 1) ** 2
                + alpha_side[s_m][0]
                + beta_side[s_n][0]
            )
            if best_value is None or value < best_value:
                best_value = value
                winners = [(p_bits, q_bits)]
            elif value == best_value:
                winners.append((p_bits, q_bits))

    assignments = []
    for p_bits, q_bits in winners:
        s_m = sum(col_sums_m[j] for j in range(game.m) if q_bits[j])
        s_n = sum(row_sums_n[i] for i in range(game.n) if p_bits[i])
        _, a_val, zeta = alpha_side[s_m]
        _, b_val, eta = beta_side[s_n]
        assignments.append(
            SQuboAssignment(
                p_bits,
                q_bits,
                obj.alpha_format.encode(a_val),
                obj.beta_format.encode(b_val),
                obj.slack_format.encode(zeta),
                obj.slack_format.encode(eta),
            )
        )
    assert best_value is not None
    return best_value, tuple(assignments)
