"""Tests for the exact enumeration oracle and coverage scoring."""

from fractions import Fraction

import numpy as np
import pytest

from nashanneal import (
    BimatrixGame,
    MixedStrategy,
    PureOrMixed,
    SizeError,
    StrategyProfile,
    classify,
    coverage,
    enumerate_all,
    enumerate_pure,
    is_epsilon_ne,
)
from nashanneal.lattice import lattice_profile_of, profile_from_counts, random_counts_batch
from nashanneal.oracle import solve_rational_system
from nashanneal.qubo import scaled_objective_batch

from conftest import random_game


def F(value):
    return Fraction(value)


class TestSolver:
    def test_unique_solution(self):
        rows = [[F(2), F(1)], [F(1), F(-1)]]
        status, solution = solve_rational_system(rows, [F(3), F(0)])
        assert status == "unique"
        assert solution == (F(1), F(1))

    def test_rational_coefficients(self):
        rows = [[F("1/2"), F("1/3")], [F("1/4"), F(1)]]
        status, solution = solve_rational_system(rows, [F(1), F(2)])
        assert status == "unique"
        assert solution is not None
        for row, rhs in zip(rows, [F(1), F(2)]):
            assert row[0] * solution[0] + row[1] * solution[1] == rhs

    def test_inconsistent(self):
        status, _ = solve_rational_system([[F(1), F(1)], [F(2), F(2)]], [F(1), F(3)])
        assert status == "inconsistent"

    def test_underdetermined(self):
        status, _ = solve_rational_system([[F(1), F(1)], [F(2), F(2)]], [F(1), F(2)])
        assert status == "underdetermined"

    def test_overdetermined_consistent(self):
        rows = [[F(1), F(0)], [F(0), F(1)], [F(1), F(1)]]
        status, solution = solve_rational_system(rows, [F(2), F(3), F(5)])
        assert status == "unique" and solution == (F(2), F(3))

    def test_fuzz_against_numpy(self, rng):
        for _ in range(100):
            size = int(rng.integers(1, 6))
            a = rng.integers(-9, 10, size=(size, size))
            x = rng.integers(-9, 10, size=size)
            b = a @ x
            rows = [[F(int(e)) for e in row] for row in a]
            status, solution = solve_rational_system(rows, [F(int(e)) for e in b])
            if status == "unique":
                assert solution == tuple(F(int(e)) for e in x) or np.linalg.matrix_rank(a) < size
            else:
                assert np.linalg.matrix_rank(a) < size


class TestEnumeratePure:
    def test_battle_of_the_sexes(self, bos):
        found = {(s.p.probs, s.q.probs) for s in enumerate_pure(bos)}
        e = lambda i: MixedStrategy.pure(i, 2).probs
        assert found == {(e(0), e(0)), (e(1), e(1))}

    def test_matching_pennies_has_none(self):
        game = BimatrixGame.from_lists("mp", [[1, 0], [0, 1]], [[0, 1], [1, 0]])
        assert enumerate_pure(game) == []

    def test_constant_game_every_cell(self):
        game = BimatrixGame.from_lists("c", [[2, 2], [2, 2]], [[2, 2], [2, 2]])
        assert len(enumerate_pure(game)) == 4

    def test_agrees_with_support_enumeration(self, rng):
        for _ in range(40):
            game = random_game(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)))
            pure_scan = {(s.p.probs, s.q.probs) for s in enumerate_pure(game)}
            from_all = {
                (s.p.probs, s.q.probs)
                for s in enumerate_all(game).solutions
                if classify(s) is PureOrMixed.PURE
            }
            assert pure_scan == from_all


class TestEnumerateAll:
    def test_battle_of_the_sexes_three_solutions(self, bos):
        truth = enumerate_all(bos)
        assert len(truth) == 3 and not truth.degenerate
        kinds = [kind for _, kind in truth.tagged()]
        assert kinds.count(PureOrMixed.PURE) == 2
        mixed = truth.mixed()[0]
        assert mixed.p.probs == (F("2/3"), F("1/3"))
        assert mixed.q.probs == (F("1/3"), F("2/3"))

    def test_one_by_one_game(self):
        game = BimatrixGame.from_lists("t", [[4]], [[7]])
        truth = enumerate_all(game)
        assert len(truth) == 1 and classify(truth.solutions[0]) is PureOrMixed.PURE

    def test_every_solution_is_an_equilibrium(self, rng):
        for _ in range(60):
            game = random_game(rng, int(rng.integers(1, 5)), int(rng.integers(1, 5)))
            for solution in enumerate_all(game).solutions:
                assert is_epsilon_ne(game, solution, 0)

    def test_no_duplicates(self, rng):
        for _ in range(40):
            game = random_game(rng, 3, 3)
            sols = enumerate_all(game).solutions
            keys = {(s.p.probs, s.q.probs) for s in sols}
            assert len(keys) == len(sols)

    def test_completeness_on_fine_grid(self, rng):
        # every lattice zero of the objective at I=60 must be an enumerated
        # solution, for nondegenerate random games
        checked = 0
        while checked < 40:
            n, m = int(rng.integers(2, 4)), int(rng.integers(2, 4))
            game = random_game(rng, n, m)
            truth = enumerate_all(game)
            if truth.degenerate:
                continue
            checked += 1
            intervals = 60
            pc = random_counts_batch(n, intervals, 3000, rng)
            qc = random_counts_batch(m, intervals, 3000, rng)
            values = scaled_objective_batch(game, pc, qc, intervals)
            solution_keys = set()
            for s in truth.solutions:
                lattice_form = lattice_profile_of(s, intervals)
                if lattice_form is not None:
                    solution_keys.add(lattice_form.key())
            for idx in np.nonzero(values == 0)[0]:
                key = (tuple(int(c) for c in pc[idx]), tuple(int(c) for c in qc[idx]))
                assert key in solution_keys

    def test_degenerate_constant_game_flagged(self):
        game = BimatrixGame.from_lists("flat", [[1, 1], [1, 1]], [[1, 1], [1, 1]])
        truth = enumerate_all(game)
        assert truth.degenerate

    def test_degenerate_tie_flagged(self):
        # two identical rows make the column player's best response ambiguous
        game = BimatrixGame.from_lists("tie", [[3, 0], [3, 0]], [[1, 0], [1, 0]])
        assert enumerate_all(game).degenerate

    def test_size_limit(self):
        big = [[0] * 13 for _ in range(13)]
        with pytest.raises(SizeError):
            enumerate_all(BimatrixGame.from_lists("big", big, big))

    def test_canonical_order_is_stable(self, bos):
        first = enumerate_all(bos).solutions
        second = enumerate_all(bos).solutions
        assert first == second
        supports = [(s.p.support(), s.q.support()) for s in first]
        assert supports == sorted(supports)


class TestCoverage:
    def test_full_coverage(self, bos):
        truth = enumerate_all(bos)
        found = [lattice_profile_of(s, 12) for s in truth.solutions]
        report = coverage(found, truth, 12)
        assert report.reachable_count == 3
        assert report.proportion == 1.0
        assert report.missed == ()

    def test_bos_reachability_depends_on_intervals(self, bos):
        truth = enumerate_all(bos)
        assert coverage([], truth, 12).reachable_count == 3
        report10 = coverage([], truth, 10)
        assert report10.reachable_count == 2
        assert len(report10.unreachable) == 1

    def test_partial_coverage(self, bos):
        truth = enumerate_all(bos)
        found = [profile_from_counts((12, 0), (12, 0), 12)]
        report = coverage(found, truth, 12)
        assert report.proportion == pytest.approx(1 / 3)
        assert len(report.missed) == 2

    def test_no_reachable_solutions(self):
        game = BimatrixGame.from_lists("mp", [[1, 0], [0, 1]], [[0, 1], [1, 0]])
        truth = enumerate_all(game)
        report = coverage([], truth, 3)  # the half-half mix needs even I
        assert report.reachable_count == 0
        assert report.proportion is None
