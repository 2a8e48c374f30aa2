"""Exact finite-horizon quantities used as ground truth for the simulator.

Counts always refer to ``X_1..X_n``; ``X_0`` is drawn from ``pi`` and not
counted.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import stirling2

from .core import GeneratorMatrix, as_multi_index, burn_in_threshold, check_distribution, transition_kernel
from .errors import BudgetExceeded, InvalidParameter

DEFAULT_BUDGET = 1e8
DENSE_MAX_STATES = 3


@dataclass(frozen=True)
class ExactOccupationLaw:
    """Law of the count vector ``n * Z_n``: ``probs[r]`` is the chance of ``counts[r]``."""

    horizon: int
    counts: np.ndarray
    probs: np.ndarray

    @cached_property
    def support(self) -> dict[tuple[int, ...], float]:
        return {tuple(int(c) for c in row): float(p) for row, p in zip(self.counts, self.probs)}

    @property
    def m(self) -> int:
        return self.counts.shape[1]

    def total_mass(self) -> float:
        return float(self.probs.sum())

    def marginal(self, i: int) -> np.ndarray:
        """Law of ``n * Z_{i,n}`` as a vector indexed by count ``0..n``."""
        return np.bincount(self.counts[:, i], weights=self.probs, minlength=self.horizon + 1)

    def expectation(self, f) -> float:
        return float(np.sum(self.probs * f(self.counts / self.horizon)))

    def moment(self, gamma) -> float:
        gamma = np.asarray(as_multi_index(gamma).gamma)
        z = self.counts / self.horizon
        return float(np.sum(self.probs * np.prod(z**gamma, axis=1)))

    def to_csv_rows(self):
        for row, p in zip(self.counts, self.probs):
            yield [*(int(c) for c in row), float(p)]


def exact_marginal(G: GeneratorMatrix, zeta: float, pi, n: int) -> np.ndarray:
    """Law of ``X_n``: ``pi^T P_1 ... P_n``, chained as vector-matrix products."""
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    row = np.array(check_distribution(pi, G.m), dtype=np.float64)
    eye = np.eye(G.m)
    for k in range(burn_in_threshold(G, zeta) + 1, n + 1):
        row = row @ (eye + G.entries / float(k) ** zeta)
    return row


def cesaro_marginal(G: GeneratorMatrix, zeta: float, pi, n: int) -> np.ndarray:
    """``(1/n) sum_{j=1}^n law(X_j)``, which equals ``E[Z_n]``."""
    row = np.array(check_distribution(pi, G.m), dtype=np.float64)
    eye = np.eye(G.m)
    burn = burn_in_threshold(G, zeta)
    acc = np.zeros(G.m)
    for k in range(1, n + 1):
        if k > burn:
            row = row @ (eye + G.entries / float(k) ** zeta)
        acc += row
    return acc / n


def law_cost(m: int, n: int) -> float:
    return float(n) ** (m - 1) * m * n


def exact_occupation_law(
    G: GeneratorMatrix, zeta: float, pi, n: int, budget: float = DEFAULT_BUDGET, dense: bool | None = None
) -> ExactOccupationLaw:
    """Exact joint law of the occupation counts by dynamic programming.

    The DP state is (current position, counts of states ``1..m-1``); the last
    count is implied. ``m <= 3`` uses a dense lattice, larger ``m`` a dict.
    """
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    pi = check_distribution(pi, G.m)
    m = G.m
    cost = law_cost(m, n)
    if cost > budget:
        raise BudgetExceeded(f"n^(m-1)*m*n = {cost:.3g} state-updates exceeds budget {budget:.3g}")
    if dense is None:
        dense = m <= DENSE_MAX_STATES
    if dense:
        return _law_dense(G, zeta, pi, n)
    return _law_sparse(G, zeta, pi, n)


def _law_dense(G, zeta, pi, n) -> ExactOccupationLaw:
    m = G.m
    d = m - 1
    A = np.zeros((m,) + (n + 1,) * d)
    A[(slice(None),) + (0,) * d] = pi
    for k in range(1, n + 1):
        P = transition_kernel(G, zeta, k)
        # counts after step k-1 lie in [0, k-1]; after step k in [0, k]
        old = A[(slice(None),) + (slice(0, k),) * d]
        moved = np.tensordot(P.T, old, axes=(1, 0))
        new = np.zeros((m,) + (k + 1,) * d)
        for y in range(m):
            if y < d:
                idx = [slice(0, k)] * d
                idx[y] = slice(1, k + 1)
                new[(y, *idx)] = moved[y]
            else:
                new[(y,) + (slice(0, k),) * d] = moved[y]
        A[(slice(None),) + (slice(0, k + 1),) * d] = new
    law = A.sum(axis=0)
    grids = np.indices(law.shape).reshape(d, -1).T
    probs = law.reshape(-1)
    last = n - grids.sum(axis=1)
    keep = (last >= 0) & (probs > 0)
    counts = np.column_stack([grids[keep], last[keep]]).astype(np.int64)
    return ExactOccupationLaw(n, counts, probs[keep])


def _law_sparse(G, zeta, pi, n) -> ExactOccupationLaw:
    m = G.m
    layer: dict[tuple, float] = {(x, (0,) * m): float(pi[x]) for x in range(m) if pi[x] > 0}
    for k in range(1, n + 1):
        P = transition_kernel(G, zeta, k)
        nxt: dict[tuple, float] = defaultdict(float)
        for (x, counts), p in layer.items():
            for y in range(m):
                w = P[x, y]
                if w > 0:
                    c = list(counts)
                    c[y] += 1
                    nxt[(y, tuple(c))] += p * w
        layer = nxt
    merged: dict[tuple, float] = defaultdict(float)
    for (_, counts), p in layer.items():
        merged[counts] += p
    keys = sorted(merged)
    counts = np.array(keys, dtype=np.int64).reshape(-1, m)
    probs = np.array([merged[c] for c in keys])
    return ExactOccupationLaw(n, counts, probs)


def _binomial_moments(G: GeneratorMatrix, zeta: float, pi, n: int, gamma) -> dict[tuple, float]:
    """``E[prod_i C(N_i, b_i)]`` for every ``b <= gamma``, ``N_i = n Z_{i,n}``.

    Uses ``C(N + 1, b) = C(N, b) + C(N, b - 1)``: carrying one vector per
    ``b`` indexed by the current state, a step is ``a_b <- a_b P`` followed
    by ``a_b(y) += (a_{b - e_y} P)(y)`` when ``b_y >= 1``.
    """
    m = G.m
    betas = list(itertools.product(*(range(g + 1) for g in gamma)))
    index = {b: r for r, b in enumerate(betas)}
    lower = np.full((m, len(betas)), -1, dtype=np.intp)
    for r, b in enumerate(betas):
        for y in range(m):
            if b[y] >= 1:
                lower[y, r] = index[b[:y] + (b[y] - 1,) + b[y + 1:]]
    A = np.zeros((len(betas), m))
    A[index[(0,) * m]] = pi
    burn = burn_in_threshold(G, zeta)
    eye = np.eye(m)
    for k in range(1, n + 1):
        B = A if k <= burn else A @ (eye + G.entries / float(k) ** zeta)
        A = B.copy()
        for y in range(m):
            has = lower[y] >= 0
            A[has, y] += B[lower[y, has], y]
    totals = A.sum(axis=1)
    return {b: float(totals[r]) for r, b in enumerate(betas)}


def exact_moment(
    G: GeneratorMatrix,
    zeta: float,
    pi,
    n: int,
    gamma,
    method: str = "recursion",
    budget: float = DEFAULT_BUDGET,
) -> float:
    """``E[prod_i Z_{i,n}^{gamma_i}]`` computed exactly (up to float rounding).

    ``method="recursion"`` tracks binomial moments of the counts
    (``O(n m^2 prod(gamma_i + 1))``) and converts them with Stirling numbers
    of the second kind; ``method="law"`` integrates the monomial against
    :func:`exact_occupation_law` and is subject to ``budget``.
    """
    gamma = as_multi_index(gamma)
    if gamma.m != G.m:
        raise InvalidParameter("gamma length differs from the number of states")
    if n < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    pi = check_distribution(pi, G.m)
    if method == "law":
        return exact_occupation_law(G, zeta, pi, n, budget=budget).moment(gamma)
    if method != "recursion":
        raise InvalidParameter(f"unknown method {method!r}")
    binom = _binomial_moments(G, zeta, pi, n, gamma.gamma)
    # N^g = sum_j S(g, j) j! C(N, j)
    coef = [
        [float(stirling2(g, j, exact=True) * math.factorial(j)) for j in range(g + 1)] for g in gamma.gamma
    ]
    total = 0.0
    for b, value in binom.items():
        w = math.prod(coef[i][b[i]] for i in range(G.m))
        if w:
            total += w * value
    return total / float(n) ** gamma.total
