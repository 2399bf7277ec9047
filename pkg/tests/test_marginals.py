import collections
import math

import numpy as np
import pytest

from conftest import BRAESS_FAMILY
from ccgopt.errors import EmptyFamilyError
from ccgopt.graphs import Graph, StrategyClass
from ccgopt.marginals import (brute_force_marginal, marginal_values,
                              sample_strategies, sample_strategy,
                              softmin_marginal)
from ccgopt.tape import Tape, values
from ccgopt.zdd import Zdd, build_family


def tape_marginal(zdd, costs):
    tape = Tape()
    return values(softmin_marginal(zdd, tape.inputs(costs)))


class TestSoftminMarginal:
    def test_braess_zero_cost_is_uniform(self, braess_zdd):
        x = tape_marginal(braess_zdd, np.zeros(5))
        np.testing.assert_allclose(x, 0.5, atol=1e-14)

    def test_braess_blocked_edge(self, braess_zdd):
        x = tape_marginal(braess_zdd, np.array([0.0, 0, 50, 0, 0]))
        np.testing.assert_allclose(x, [0.5, 0.5, 0.0, 0.5, 0.5], atol=1e-10)

    def test_single_set_family(self, single_edge_zdd):
        assert tape_marginal(single_edge_zdd, np.array([13.7]))[0] == \
            pytest.approx(1.0, abs=1e-15)

    def test_family_with_empty_set_only(self):
        zdd = Zdd.terminal(2, (1, 2), True)
        np.testing.assert_array_equal(tape_marginal(zdd, np.zeros(2)), 0.0)

    def test_empty_family_raises(self):
        zdd = Zdd.terminal(2, (1, 2), False)
        with pytest.raises(EmptyFamilyError):
            tape_marginal(zdd, np.zeros(2))


class TestBruteForceOracle:
    def test_braess_uniform(self):
        x = brute_force_marginal(BRAESS_FAMILY, np.zeros(5), 5)
        np.testing.assert_allclose(x, 0.5)

    def test_two_singletons(self):
        x = brute_force_marginal([(1,), (2,)], np.array([0.0, math.log(3)]), 2)
        np.testing.assert_allclose(x, [0.75, 0.25], atol=1e-15)

    def test_single_set(self):
        x = brute_force_marginal([(1,)], np.array([-4.2]), 1)
        np.testing.assert_allclose(x, [1.0])

    def test_empty_raises(self):
        with pytest.raises(EmptyFamilyError):
            brute_force_marginal([], np.zeros(1), 1)


class TestOracleEquivalence:
    def test_random_costs_all_fixtures(self, braess_zdd, k4_zdd, grid3x3_zdd,
                                       steiner6_zdd, single_edge_zdd):
        # last entry: single-terminal family containing the empty set,
        # whose diagram routes lo arcs straight into the true terminal
        sparse_steiner = build_family(
            Graph(3, [(0, 1), (1, 2)], np.ones(2), ("terminals", (1,))),
            StrategyClass("steiner"))
        rng = np.random.default_rng(3)
        for zdd in (braess_zdd, k4_zdd, grid3x3_zdd, steiner6_zdd,
                    single_edge_zdd, sparse_steiner):
            sets = zdd.enumerate_sets(10**4)
            for _ in range(25):
                costs = rng.uniform(-20, 20, zdd.n)
                got = tape_marginal(zdd, costs)
                want = brute_force_marginal(sets, costs, zdd.n)
                assert np.max(np.abs(got - want)) <= 1e-10

    def test_hull_membership(self, grid3x3_zdd):
        rng = np.random.default_rng(5)
        for _ in range(50):
            x = tape_marginal(grid3x3_zdd, rng.uniform(-20, 20, grid3x3_zdd.n))
            assert np.all(x >= 0.0) and np.all(x <= 1.0)

    def test_float_path_matches_tape_path(self, steiner6_zdd):
        rng = np.random.default_rng(9)
        for _ in range(20):
            costs = rng.uniform(-10, 10, steiner6_zdd.n)
            np.testing.assert_allclose(marginal_values(steiner6_zdd, costs),
                                       tape_marginal(steiner6_zdd, costs),
                                       atol=1e-13)


class TestShiftInvariance:
    def test_equal_cardinality_family(self, k4_zdd):
        # Hamiltonian cycles all have 4 edges, so a constant cost shift
        # multiplies every set weight equally and marginals are unchanged
        rng = np.random.default_rng(17)
        costs = rng.uniform(-3, 3, k4_zdd.n)
        base = tape_marginal(k4_zdd, costs)
        shifted = tape_marginal(k4_zdd, costs + 7.0)
        np.testing.assert_allclose(shifted, base, atol=1e-12)

    def test_mixed_cardinality_family_shifts(self, braess_zdd):
        # path lengths differ (2 vs 3 edges), so the shift reweights
        costs = np.array([0.0, 0.1, -0.2, 0.3, 0.0])
        base = tape_marginal(braess_zdd, costs)
        shifted = tape_marginal(braess_zdd, costs + 7.0)
        assert np.max(np.abs(shifted - base)) > 1e-3


class TestMarginalGradients:
    def test_jacobian_matches_finite_differences(self, braess_zdd):
        rng = np.random.default_rng(1)
        point = rng.uniform(-2, 2, 5)
        tape = Tape()
        cv = tape.inputs(point)
        x = softmin_marginal(braess_zdd, cv)
        jac = np.array([tape.backward(xi) for xi in x])
        h = 1e-5
        for j in range(5):
            plus, minus = point.copy(), point.copy()
            plus[j] += h
            minus[j] -= h
            fd = (marginal_values(braess_zdd, plus)
                  - marginal_values(braess_zdd, minus)) / (2 * h)
            rel = np.abs(jac[:, j] - fd) / (1.0 + np.abs(fd))
            assert np.max(rel) <= 1e-5

    def test_tape_growth_within_budget(self, braess_zdd, k4_zdd, grid3x3_zdd,
                                       steiner6_zdd, single_edge_zdd):
        for zdd in (braess_zdd, k4_zdd, grid3x3_zdd, steiner6_zdd,
                    single_edge_zdd):
            tape = Tape()
            costs = tape.inputs(np.linspace(-1, 1, zdd.n))
            before = len(tape)
            softmin_marginal(zdd, costs)
            added = len(tape) - before
            assert added <= 8 * len(zdd), \
                f"added {added} nodes for |Z|={len(zdd)}"


class TestSampling:
    def test_single_set_always(self, single_edge_zdd):
        for seed in range(5):
            assert sample_strategy(single_edge_zdd, np.zeros(1), seed) == (1,)

    def test_uniform_frequencies(self, braess_zdd):
        samples = sample_strategies(braess_zdd, np.zeros(5), 42, 100_000)
        counts = collections.Counter(samples)
        sigma = math.sqrt(0.25 * 0.75 / 100_000)
        for member in BRAESS_FAMILY:
            freq = counts[member] / 100_000
            assert abs(freq - 0.25) <= 3 * sigma

    def test_blocked_edge_never_sampled(self, braess_zdd):
        samples = sample_strategies(braess_zdd, np.array([0.0, 0, 50, 0, 0]),
                                    123, 10_000)
        assert all(3 not in s for s in samples)

    def test_reproducible(self, braess_zdd):
        a = sample_strategies(braess_zdd, np.array([0.3, 0, -1, 0, 2]), 7, 50)
        b = sample_strategies(braess_zdd, np.array([0.3, 0, -1, 0, 2]), 7, 50)
        assert a == b

    def test_proportional_to_weight(self, braess_zdd):
        # weight ratio between the 2-edge paths and 3-edge paths at cost 1
        costs = np.ones(5)
        samples = sample_strategies(braess_zdd, costs, 31, 50_000)
        counts = collections.Counter(samples)
        heavy = counts[(1, 4)] + counts[(2, 5)]
        light = counts[(1, 3, 5)] + counts[(2, 3, 4)]
        expected_ratio = math.exp(-2.0) / math.exp(-3.0)
        assert heavy / max(light, 1) == pytest.approx(expected_ratio, rel=0.1)

    def test_empty_family_raises(self):
        with pytest.raises(EmptyFamilyError):
            sample_strategy(Zdd.terminal(1, (1,), False), np.zeros(1), 0)
