"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line (collected again in the terminal
summary) and then asserts the same condition. Wall-clock limits count
toward the verdict. All seeds are fixed up front.
"""
import time

import numpy as np
import pytest
from scipy import stats

from occulaw.core import ChainConfig, all_multi_indices, is_stochastic, transition_kernel, uniform, validate_generator
from occulaw.experiments import PLANE_VERTICES, ball_fraction, run_figure2
from occulaw.moments import (
    dirichlet_moment,
    limit_moment,
    resolvent_stack,
    theta_generator,
    theta_resolvent_closed_form,
    vertex_decay_slope,
)
from occulaw.oracle import exact_marginal, exact_moment
from occulaw.simulate import ensemble_occupations
from occulaw.spectral import (
    kernel_product,
    kernel_product_spectral,
    limit_marginal_zeta_gt1,
    resolvent,
    stationary_distribution,
)

from conftest import G_LEFT, G_RIGHT, random_generator

pytestmark = pytest.mark.acceptance


def _verdict(report, label, ok, detail, elapsed, limit):
    ok = bool(ok) and elapsed < limit
    report(label, ok, f"{detail}; {elapsed:.1f}s of {limit:.0f}s")
    assert ok


def test_c1_dirichlet_equivalence(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    worst, count = 0.0, 0
    for k in range(200):
        m = (2, 3, 4)[k % 3]
        theta = rng.uniform(0.1, 5.0, m)
        G = theta_generator(theta)
        res = resolvent_stack(G, 4)
        for g in all_multi_indices(m, 5):
            diff = abs(limit_moment(G, g, _resolvents=res).value - dirichlet_moment(theta, g))
            worst = max(worst, diff)
            count += 1
    _verdict(report, "1 Dirichlet equivalence", worst <= 1e-9, f"max diff {worst:.2e} over {count} moments",
             time.perf_counter() - t0, 60)


def test_c2_closed_form_resolvent(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(102)
    worst = 0.0
    for _ in range(100):
        theta = rng.uniform(0.1, 5.0, int(rng.integers(2, 6)))
        G = theta_generator(theta)
        for l in range(1, 9):
            worst = max(worst, np.max(np.abs(resolvent(G, l) - theta_resolvent_closed_form(theta, l))))
    _verdict(report, "2 closed-form resolvent", worst <= 1e-10, f"max entry diff {worst:.2e}",
             time.perf_counter() - t0, 30)


def test_c3_beta_limit(report):
    t0 = time.perf_counter()
    ks = {}
    for c in (0.5, 1.0, 2.0):
        config = ChainConfig(theta_generator((c, c)), 1.0, None, 10_000, seed=103)
        z1 = ensemble_occupations(config, 2000).replicas[:, 0]
        ks[c] = stats.kstest(z1, stats.beta(c, c).cdf).statistic
    detail = ", ".join(f"c={c:g}: KS {d:.4f}" for c, d in ks.items())
    _verdict(report, "3 Beta limit", max(ks.values()) <= 0.05, detail, time.perf_counter() - t0, 120)


def test_c4_oracle_equivalence(report):
    """A trial is one (G, gamma) pair; it agrees when the Monte Carlo estimate
    is within 3 standard errors of the exact moment at all three horizons."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(104)
    horizons = (2**6, 2**8, 2**10)
    agree, monotone, trials = 0, 0, 100
    for t in range(trials):
        m = 2 if t < trials // 2 else 3
        G = random_generator(rng, m)
        indices = all_multi_indices(m, 3)
        gamma = indices[int(rng.integers(len(indices)))].gamma
        limit = limit_moment(G, gamma).value
        ok, errs = True, []
        for n in horizons:
            exact = exact_moment(G, 1.0, uniform(m), n, gamma)
            errs.append(abs(exact - limit))
            z = ensemble_occupations(ChainConfig(G, 1.0, None, n, seed=1000 + t), 5000).replicas
            sample = np.prod(z ** np.array(gamma), axis=1)
            se = sample.std(ddof=1) / np.sqrt(len(sample))
            ok &= abs(sample.mean() - exact) <= 3 * se
        agree += ok
        monotone += all(b <= a + 1e-12 for a, b in zip(errs, errs[1:]))
    detail = f"MC agreement {agree}/{trials}, monotone error {monotone}/{trials}"
    _verdict(report, "4 oracle equivalence", agree >= 95 and monotone == trials, detail,
             time.perf_counter() - t0, 300)


def test_c5_regime_separation(report):
    t0 = time.perf_counter()
    G = validate_generator(G_RIGHT)
    nu = stationary_distribution(G)
    pi = uniform(3)

    low = ensemble_occupations(ChainConfig(G, 0.3, pi, 100_000, seed=105), 200)
    share_close = np.mean(np.max(np.abs(low.replicas - nu), axis=1) <= 0.05)

    high = ensemble_occupations(ChainConfig(G, 1.5, pi, 100_000, seed=106), 200)
    target = limit_marginal_zeta_gt1(G, 1.5, pi, tol=1e-8)
    freq = high.final_frequencies()
    se = np.sqrt(target * (1 - target) / high.R)
    within = bool(np.all(np.abs(freq - target) <= 3 * se))
    near_vertex = np.mean(np.min(np.abs(high.replicas[:, None, :] - np.eye(3)).sum(axis=2), axis=1) <= 0.1)

    mid = ensemble_occupations(ChainConfig(G, 1.0, pi, 10_000, seed=107), 200)
    spread = mid.std()[0]

    ok = share_close >= 0.95 and within and near_vertex >= 0.95 and spread > 0.05
    detail = (f"(a) {share_close:.3f} within 0.05; (b) final freq within 3se: {within}, "
              f"near vertex {near_vertex:.3f}; (c) std Z_1 {spread:.3f}")
    _verdict(report, "5 regime separation", ok, detail, time.perf_counter() - t0, 300)


def test_c6_marginal_convergence(report):
    t0 = time.perf_counter()
    worst = 0.0
    for entries in (G_LEFT, G_RIGHT):
        G = validate_generator(entries)
        nu = stationary_distribution(G)
        for i in range(3):
            pi = np.eye(3)[i]
            worst = max(worst, np.max(np.abs(exact_marginal(G, 1.0, pi, 10_000) - nu)))
    _verdict(report, "6 marginal convergence", worst <= 0.01, f"sup-norm {worst:.2e}",
             time.perf_counter() - t0, 30)


def test_c7_vertex_decay(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(107)
    worst = 0.0
    for _ in range(20):
        G = random_generator(rng, 3)
        for l in range(3):
            d = G.entries[l, l]
            worst = max(worst, abs(vertex_decay_slope(G, l, 50, 500) - d) / abs(d))
    _verdict(report, "7 vertex-moment decay", worst <= 0.10, f"max relative slope error {worst:.3f}",
             time.perf_counter() - t0, 60)


def test_c8_figure2(report):
    t0 = time.perf_counter()
    res = run_figure2(validate_generator(G_LEFT), n=10_000, replicas=1000, seed=108)
    occ = res.histogram.interior_occupancy()
    center = PLANE_VERTICES.mean(axis=0)
    big = ball_fraction(res.points, center, 0.2)
    small = ball_fraction(res.points, center, 0.002)
    ok = occ >= 0.99 and big > 0 and small <= big / 10
    detail = f"interior bins occupied {occ:.3f}; ball fraction r=0.2: {big:.3f}, r=0.002: {small:.4f}"
    _verdict(report, "8 simplex histogram coverage", ok, detail, time.perf_counter() - t0, 120)


def test_c9_property_suites(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(109)
    cases = 1000
    failures = {}

    bad = 0
    for _ in range(cases):
        G = random_generator(rng, int(rng.integers(2, 5)), 0.05, 5.0)
        indices = all_multi_indices(G.m, 3)
        g = indices[int(rng.integers(len(indices)))]
        lhs = sum(limit_moment(G, g.plus(i)).value for i in range(G.m))
        bad += abs(lhs - limit_moment(G, g).value) > 1e-9
    failures["marginalization"] = bad

    bad = 0
    for _ in range(cases):
        G = random_generator(rng, int(rng.integers(2, 7)), 0.05, 5.0)
        zeta = float(rng.uniform(0.2, 3.0))
        n = int(rng.integers(1, 10_000))
        bad += not is_stochastic(transition_kernel(G, zeta, n))
    failures["stochasticity"] = bad

    bad = 0
    for _ in range(cases):
        G = random_generator(rng, int(rng.integers(2, 7)), 0.05, 5.0)
        zeta = float(rng.uniform(0.2, 3.0))
        n = int(rng.integers(1, 10_000))
        nu = stationary_distribution(G)
        bad += np.max(np.abs(nu @ transition_kernel(G, zeta, n) - nu)) > 1e-10
    failures["left invariance"] = bad

    bad = 0
    for _ in range(cases):
        G = random_generator(rng, int(rng.integers(2, 6)), 0.05, 5.0)
        zeta = float(rng.choice([0.5, 1.0, 1.5]))
        i = int(rng.integers(1, 50))
        j = i + int(rng.integers(0, 2000))
        diff = np.max(np.abs(kernel_product_spectral(G, zeta, i, j) - kernel_product(G, zeta, i, j)))
        bad += diff > 1e-8
    failures["spectral product"] = bad

    bad = 0
    for _ in range(cases):
        G = random_generator(rng, int(rng.integers(2, 5)), 0.05, 5.0)
        config = ChainConfig(G, float(rng.uniform(0.3, 2.0)), None, int(rng.integers(1, 300)),
                             seed=int(rng.integers(0, 2**63)))
        a = ensemble_occupations(config, 4, workers=1)
        b = ensemble_occupations(config, 4, workers=2, chunk=1)
        bad += a.counts.tobytes() != b.counts.tobytes() or a.final_states.tobytes() != b.final_states.tobytes()
    failures["seed reproducibility"] = bad

    detail = ", ".join(f"{k} {cases - v}/{cases}" for k, v in failures.items())
    _verdict(report, "9 property suites", not any(failures.values()), detail, time.perf_counter() - t0, 300)
