"""Tests for the game model: payoffs, regrets, classification, normalization."""

from fractions import Fraction

import numpy as np
import pytest

from nashanneal import (
    BimatrixGame,
    DimensionError,
    InputError,
    MixedStrategy,
    PureOrMixed,
    StrategyProfile,
    classify,
    epsilon_ne_gap,
    is_epsilon_ne,
    normalize_payoffs,
    payoff,
)
from nashanneal.oracle import enumerate_all

from conftest import random_game


def F(value) -> Fraction:
    return Fraction(value)


def profile(p_values, q_values) -> StrategyProfile:
    return StrategyProfile(
        MixedStrategy.from_values(p_values), MixedStrategy.from_values(q_values)
    )


class TestPayoff:
    def test_battle_of_the_sexes_coordination(self, bos):
        assert payoff(bos, profile([1, 0], [1, 0])) == (F(2), F(1))

    def test_unit_vectors_select_entries(self, rng):
        for _ in range(20):
            game = random_game(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)))
            i = int(rng.integers(game.n))
            j = int(rng.integers(game.m))
            prof = StrategyProfile(
                MixedStrategy.pure(i, game.n), MixedStrategy.pure(j, game.m)
            )
            assert payoff(game, prof) == (F(game.M[i][j]), F(game.N[i][j]))

    def test_constant_matrices_give_constant_payoff(self):
        game = BimatrixGame.from_lists("const", [[1, 1], [1, 1]], [[1, 1], [1, 1]])
        for p, q in ([(1, 0), (0, 1)], [("1/2", "1/2"), ("1/3", "2/3")]):
            assert payoff(game, profile(p, q)) == (F(1), F(1))

    def test_bilinearity_in_p(self, rng):
        for _ in range(30):
            game = random_game(rng, 3, 3)
            q = MixedStrategy.from_values(["1/6", "1/2", "1/3"])
            p1 = MixedStrategy.from_values(["1/2", "1/4", "1/4"])
            p2 = MixedStrategy.from_values(["1/3", "1/3", "1/3"])
            lam = Fraction(2, 5)
            blend = MixedStrategy(
                tuple(lam * a + (1 - lam) * b for a, b in zip(p1.probs, p2.probs))
            )
            f_blend = payoff(game, StrategyProfile(blend, q))[0]
            f1 = payoff(game, StrategyProfile(p1, q))[0]
            f2 = payoff(game, StrategyProfile(p2, q))[0]
            assert f_blend == lam * f1 + (1 - lam) * f2

    def test_dimension_mismatch(self, bos):
        with pytest.raises(DimensionError):
            payoff(bos, profile([1, 0, 0], [1, 0]))


class TestEpsilonNeGap:
    def test_pure_equilibrium_has_zero_gap(self, bos):
        assert epsilon_ne_gap(bos, profile([1, 0], [1, 0])) == (F(0), F(0))

    def test_mixed_equilibrium_has_zero_gap(self, bos):
        assert epsilon_ne_gap(bos, profile(["2/3", "1/3"], ["1/3", "2/3"])) == (F(0), F(0))

    def test_miscoordination_gap(self, bos):
        # independently derived: Mq = (0,1) so g1 = 1 - 0; N'p = (1,0) so g2 = 1 - 0
        assert epsilon_ne_gap(bos, profile([1, 0], [0, 1])) == (F(1), F(1))

    def test_gaps_are_nonnegative(self, rng):
        for _ in range(200):
            game = random_game(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)))
            prof = StrategyProfile(
                _rounded_simplex(rng.dirichlet(np.ones(game.n))),
                _rounded_simplex(rng.dirichlet(np.ones(game.m))),
            )
            g1, g2 = epsilon_ne_gap(game, prof)
            assert g1 >= 0 and g2 >= 0


def _rounded_simplex(values) -> MixedStrategy:
    fracs = [Fraction(float(v)).limit_denominator(60) for v in values[:-1]]
    fracs.append(1 - sum(fracs))
    if fracs[-1] < 0:
        fracs[-1] = Fraction(0)
        total = sum(fracs)
        fracs = [f / total for f in fracs]
    return MixedStrategy(tuple(fracs))


class TestIsEpsilonNe:
    def test_exact_ne_at_zero_eps(self, bos):
        assert is_epsilon_ne(bos, profile([1, 0], [1, 0]), 0)

    def test_non_ne_at_zero_eps(self, bos):
        assert not is_epsilon_ne(bos, profile([1, 0], [0, 1]), 0)

    def test_threshold_semantics(self, bos):
        # the miscoordination profile has gap (1, 1)
        bad = profile([1, 0], [0, 1])
        assert not is_epsilon_ne(bos, bad, "1/2")
        assert is_epsilon_ne(bos, bad, 1)
        assert is_epsilon_ne(bos, bad, 2)

    def test_negative_eps_rejected(self, bos):
        with pytest.raises(InputError):
            is_epsilon_ne(bos, profile([1, 0], [1, 0]), -1)

    def test_agrees_with_oracle_on_small_games(self, rng):
        from nashanneal.lattice import dequantize_profile, lattice_profile_of, random_profile

        checked = 0
        while checked < 25:
            game = random_game(rng, int(rng.integers(2, 5)), int(rng.integers(2, 5)))
            truth = enumerate_all(game)
            if truth.degenerate:
                continue
            checked += 1
            for solution in truth.solutions:
                assert is_epsilon_ne(game, solution, 0)
            member_keys = set()
            for solution in truth.solutions:
                lattice_form = lattice_profile_of(solution, 12)
                if lattice_form is not None:
                    member_keys.add(lattice_form.key())
            for _ in range(40):
                prof = random_profile(game.n, game.m, 12, rng)
                strategy = dequantize_profile(prof)
                assert is_epsilon_ne(game, strategy, 0) == (prof.key() in member_keys)


class TestClassify:
    def test_pure(self):
        assert classify(profile([1, 0], [0, 1])) is PureOrMixed.PURE

    def test_half_half_is_mixed(self):
        assert classify(profile(["1/2", "1/2"], [1, 0])) is PureOrMixed.MIXED

    def test_fully_mixed(self):
        assert classify(profile(["2/3", "1/3"], ["1/3", "2/3"])) is PureOrMixed.MIXED


class TestNormalizePayoffs:
    def test_minimal_shift(self):
        game, record = normalize_payoffs([[-1, 0], [0, 1]], [[0, 0], [0, 0]])
        assert game.M == ((0, 1), (1, 2))
        assert (record.scale, record.shift_m) == (1, 1)

    def test_denominator_clearing(self):
        game, record = normalize_payoffs([["1/2", 0], [0, 1]], [[0, 0], [0, 0]])
        assert game.M == ((1, 0), (0, 2))
        assert (record.scale, record.shift_m) == (2, 0)

    def test_identity_on_nonnegative_integers(self):
        game, record = normalize_payoffs([[2, 0], [0, 1]], [[1, 0], [0, 2]])
        assert record.is_identity
        assert game.M == ((2, 0), (0, 1))

    def test_raw_values_recoverable(self):
        game, record = normalize_payoffs([["-1/3", "1/2"]], [["5/7", -2]])
        for i in range(1):
            for j in range(2):
                assert record.to_raw_m(game.M[i][j]) == Fraction([["-1/3", "1/2"]][i][j])
                assert record.to_raw_n(game.N[i][j]) == Fraction([["5/7", -2]][i][j])

    def test_non_finite_rejected(self):
        with pytest.raises(InputError):
            normalize_payoffs([[float("nan")]], [[0]])
        with pytest.raises(InputError):
            normalize_payoffs([[float("inf")]], [[0]])

    def test_equilibrium_set_preserved(self, rng):
        # the normalized game and an independently scaled-and-shifted copy of
        # the same raw payoffs must enumerate to the same equilibrium set
        checked = 0
        while checked < 15:
            n, m = int(rng.integers(2, 4)), int(rng.integers(2, 4))
            raw_m = [
                [Fraction(int(rng.integers(-6, 7)), int(rng.choice([1, 2, 3, 6]))) for _ in range(m)]
                for _ in range(n)
            ]
            raw_n = [
                [Fraction(int(rng.integers(-6, 7)), int(rng.choice([1, 2, 3, 6]))) for _ in range(m)]
                for _ in range(n)
            ]
            game, _ = normalize_payoffs(raw_m, raw_n)
            truth = enumerate_all(game)
            if truth.degenerate:
                continue
            checked += 1
            alt_m = [[int(e * 12) + 100 for e in row] for row in raw_m]
            alt_n = [[int(e * 12) + 100 for e in row] for row in raw_n]
            alt_truth = enumerate_all(BimatrixGame.from_lists("alt", alt_m, alt_n))
            assert {(s.p.probs, s.q.probs) for s in truth.solutions} == {
                (s.p.probs, s.q.probs) for s in alt_truth.solutions
            }


class TestValidation:
    def test_rejects_negative_entries(self):
        with pytest.raises(InputError):
            BimatrixGame.from_lists("bad", [[-1, 0]], [[0, 0]])

    def test_rejects_mismatched_shapes(self):
        with pytest.raises(DimensionError):
            BimatrixGame.from_lists("bad", [[1, 0]], [[0], [1]])

    def test_strategy_must_sum_to_one(self):
        with pytest.raises(InputError):
            MixedStrategy.from_values(["1/2", "1/3"])

    def test_strategy_rejects_negative(self):
        with pytest.raises(InputError):
            MixedStrategy.from_values(["3/2", "-1/2"])
