import itertools

import numpy as np
import pytest

from occulaw.core import all_multi_indices, transition_kernel, uniform, validate_generator
from occulaw.errors import BudgetExceeded, InvalidParameter
from occulaw.moments import limit_moment, theta_generator
from occulaw.oracle import (
    cesaro_marginal,
    exact_marginal,
    exact_moment,
    exact_occupation_law,
)
from occulaw.spectral import kernel_product, stationary_distribution

from conftest import random_generator


def enumerate_law(G, zeta, pi, n):
    """Sum over every path X_0..X_n; exponential, for tiny n only."""
    m = G.m
    kernels = [transition_kernel(G, zeta, k) for k in range(1, n + 1)]
    law = {}
    for path in itertools.product(range(m), repeat=n + 1):
        p = pi[path[0]]
        for k in range(1, n + 1):
            p *= kernels[k - 1][path[k - 1], path[k]]
        if p == 0:
            continue
        counts = tuple(int(c) for c in np.bincount(path[1:], minlength=m))
        law[counts] = law.get(counts, 0.0) + p
    return law


class TestExactMarginal:
    def test_burn_in_keeps_pi(self, g_left):
        pi = [0.2, 0.5, 0.3]
        np.testing.assert_array_equal(exact_marginal(g_left, 1.0, pi, 3), pi)

    def test_symmetric_invariance(self):
        G = validate_generator([[-1.5, 1.5], [1.5, -1.5]])
        for n in (1, 2, 10, 1000):
            np.testing.assert_allclose(exact_marginal(G, 1.0, [0.5, 0.5], n), [0.5, 0.5], atol=1e-14)

    def test_matches_kernel_product(self, g_right):
        pi = np.array([0.1, 0.6, 0.3])
        np.testing.assert_allclose(exact_marginal(g_right, 0.8, pi, 300), pi @ kernel_product(g_right, 0.8, 1, 300), atol=1e-14)

    def test_converges(self, g_right):
        nu = stationary_distribution(g_right)
        assert np.max(np.abs(exact_marginal(g_right, 1.0, [1, 0, 0], 10_000) - nu)) <= 0.01


class TestExactLaw:
    def test_single_step(self, g_right):
        pi = np.array([0.2, 0.3, 0.5])
        law = exact_occupation_law(g_right, 1.0, pi, 1)
        step = pi @ transition_kernel(g_right, 1.0, 1)
        for k in range(3):
            key = tuple(int(i == k) for i in range(3))
            assert law.support[key] == pytest.approx(step[k])

    def test_two_steps_hand(self):
        law = exact_occupation_law(theta_generator((1, 1)), 1.0, [1, 0], 2)
        assert law.support == pytest.approx({(2, 0): 0.5, (1, 1): 0.5})

    @pytest.mark.parametrize("m,n,zeta", [(2, 9, 1.0), (3, 6, 1.0), (3, 6, 0.4), (4, 4, 1.2)])
    def test_against_path_enumeration(self, m, n, zeta):
        rng = np.random.default_rng(m * 100 + n)
        G = random_generator(rng, m, 0.1, 1.0)
        pi = rng.dirichlet(np.ones(m))
        brute = enumerate_law(G, zeta, pi, n)
        law = exact_occupation_law(G, zeta, pi, n)
        assert set(law.support) <= set(brute)
        for key, p in brute.items():
            assert law.support.get(key, 0.0) == pytest.approx(p, abs=1e-14)

    def test_dense_and_sparse_agree(self, g_right):
        dense = exact_occupation_law(g_right, 1.0, uniform(3), 30, dense=True)
        sparse = exact_occupation_law(g_right, 1.0, uniform(3), 30, dense=False)
        assert set(dense.support) == set(sparse.support)
        for key, p in dense.support.items():
            assert sparse.support[key] == pytest.approx(p, abs=1e-15)

    def test_mass_and_keys(self):
        rng = np.random.default_rng(4)
        for m, n in ((2, 2000), (3, 200), (4, 25)):
            G = random_generator(rng, m)
            law = exact_occupation_law(G, 1.0, uniform(m), n)
            assert abs(law.total_mass() - 1.0) <= 1e-10
            assert np.all(law.counts.sum(axis=1) == n)
            assert np.all(law.probs >= 0)

    def test_marginal_consistency(self, g_right):
        law = exact_occupation_law(g_right, 1.0, uniform(3), 40)
        for i in range(3):
            direct = np.zeros(41)
            for key, p in law.support.items():
                direct[key[i]] += p
            np.testing.assert_allclose(law.marginal(i), direct, atol=1e-15)

    def test_budget(self, g_right):
        with pytest.raises(BudgetExceeded):
            exact_occupation_law(g_right, 1.0, uniform(3), 1000)
        with pytest.raises(BudgetExceeded):
            exact_occupation_law(g_right, 1.0, uniform(3), 50, budget=1e3)

    def test_variance_shrinks_zeta_below_one(self):
        G = validate_generator([[-0.5, 0.5], [0.8, -0.8]])
        var = []
        for n in (2**6, 2**10):
            law = exact_occupation_law(G, 0.3, [0.5, 0.5], n)
            mean = law.moment((1, 0))
            var.append(law.moment((2, 0)) - mean**2)
        assert var[1] < var[0]


class TestExactMoment:
    def test_cesaro_identity(self, g_right):
        pi = [0.6, 0.1, 0.3]
        for n in (1, 5, 64, 500):
            ces = cesaro_marginal(g_right, 1.0, pi, n)
            manual = np.mean([exact_marginal(g_right, 1.0, pi, j) for j in range(1, n + 1)], axis=0)
            np.testing.assert_allclose(ces, manual, atol=1e-13)
            for k in range(3):
                gamma = tuple(int(i == k) for i in range(3))
                assert exact_moment(g_right, 1.0, pi, n, gamma) == pytest.approx(ces[k], abs=1e-12)

    def test_recursion_matches_law(self):
        rng = np.random.default_rng(8)
        for m, n in ((2, 200), (3, 60), (4, 12)):
            G = random_generator(rng, m)
            pi = rng.dirichlet(np.ones(m))
            law = exact_occupation_law(G, 0.9, pi, n)
            for g in all_multi_indices(m, 4):
                assert exact_moment(G, 0.9, pi, n, g) == pytest.approx(law.moment(g), abs=1e-12)
                assert exact_moment(G, 0.9, pi, n, g, method="law") == pytest.approx(law.moment(g), abs=1e-14)

    def test_trend_to_uniform_second_moment(self):
        G = theta_generator((1, 1))
        errs = [abs(exact_moment(G, 1.0, [1, 0], n, (2, 0)) - 1 / 3) for n in (64, 256, 1024)]
        assert errs[0] > errs[1] > errs[2]

    def test_bad_method(self, g_right):
        with pytest.raises(InvalidParameter):
            exact_moment(g_right, 1.0, uniform(3), 5, (1, 0, 0), method="magic")

    def test_near_limit_at_large_n(self, g_right):
        for g in all_multi_indices(3, 3):
            assert exact_moment(g_right, 1.0, uniform(3), 4096, g) == pytest.approx(limit_moment(g_right, g).value, abs=5e-3)
