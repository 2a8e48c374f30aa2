"""Seeded Monte Carlo simulation of paths, occupation vectors and ensembles.

Random streams
--------------
Replica ``r`` of an ensemble with master seed ``s`` draws from
``numpy.random.Generator(PCG64(replica_seed(s, r)))`` where ``replica_seed``
is the SplitMix64 finaliser applied to ``s + (r + 1) * 0x9E3779B97F4A7C15``
(all arithmetic mod 2**64). Uniform number 0 of the stream picks ``X_0`` and
uniform number ``k`` drives the step ``X_{k-1} -> X_k``, one draw per step
even while the kernel is still the identity. Both draws use inverse-CDF
sampling over states in index order.

Replicas are advanced together in numpy, but each one reads only its own
stream, so results do not depend on how replicas are batched or on the
number of worker threads.
"""
from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import ChainConfig, burn_in_threshold
from .errors import InvalidParameter

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
_BLOCK_FLOATS = 1 << 22


def splitmix64(x: int) -> int:
    z = x & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def replica_seed(master: int, index: int) -> int:
    return splitmix64((master + (index + 1) * GOLDEN) & MASK64)


def default_workers() -> int:
    env = os.environ.get("OCCULAW_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise InvalidParameter(f"OCCULAW_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise InvalidParameter("OCCULAW_THREADS must be >= 1")
        return n
    return 1


@dataclass(frozen=True)
class Trajectory:
    """States ``X_0, ..., X_n`` (0-based labels); ``states[0]`` is ``x0``."""

    states: np.ndarray
    config: ChainConfig
    replica: int = 0

    @property
    def x0(self) -> int:
        return int(self.states[0])

    @property
    def horizon(self) -> int:
        return len(self.states) - 1


@dataclass
class EnsembleResult:
    """Per-replica summaries, ordered by replica index."""

    replicas: np.ndarray  # (R, m) occupation vectors
    counts: np.ndarray  # (R, m) integer occupation counts
    switch_counts: np.ndarray
    final_states: np.ndarray
    last_switch: np.ndarray  # 0 when the replica never moved
    seeds: np.ndarray
    horizon: int
    elapsed: float
    config: ChainConfig | None = None

    @property
    def R(self) -> int:
        return self.replicas.shape[0]

    def mean(self) -> np.ndarray:
        return self.replicas.mean(axis=0)

    def std(self) -> np.ndarray:
        return self.replicas.std(axis=0, ddof=1) if self.R > 1 else np.zeros(self.replicas.shape[1])

    def final_frequencies(self) -> np.ndarray:
        m = self.replicas.shape[1]
        return np.bincount(self.final_states, minlength=m) / self.R

    def to_csv_rows(self):
        """Rows ``replica_index, Z_1..Z_m, switch_count, final_state`` with 1-based states."""
        for r in range(self.R):
            yield [r, *(float(v) for v in self.replicas[r]), int(self.switch_counts[r]), int(self.final_states[r]) + 1]


def _uniform_block(rngs, width: int) -> np.ndarray:
    return np.stack([g.random(width) for g in rngs])


def _run_batch(config: ChainConfig, seeds, record_path: bool = False):
    """Advance every replica in ``seeds`` through ``config.horizon`` steps."""
    G = config.generator.entries
    m = config.m
    n = config.horizon
    zeta = config.zeta
    R = len(seeds)
    rngs = [np.random.Generator(np.random.PCG64(int(s))) for s in seeds]
    rows = np.arange(R)

    cum_eye = np.cumsum(np.eye(m), axis=1)
    cum_gen = np.cumsum(G, axis=1)
    # the last cumulative entry must never be <= u, whatever the rounding
    cum_eye[:, -1] = 2.0
    cum_gen[:, -1] = 0.0

    width = max(1, min(n + 1, _BLOCK_FLOATS // max(R, 1)))
    block = _uniform_block(rngs, width)
    offset = 0

    pi_cum = np.cumsum(config.initial)
    pi_cum[-1] = 2.0
    state = np.searchsorted(pi_cum, block[:, 0], side="right")
    state = np.minimum(state, m - 1)

    counts = np.zeros((R, m), dtype=np.int64)
    entry = np.ones(R, dtype=np.int64)
    switches = np.zeros(R, dtype=np.int64)
    last_switch = np.zeros(R, dtype=np.int64)
    path = None
    if record_path:
        path = np.empty((R, n + 1), dtype=np.int64)
        path[:, 0] = state

    burn = burn_in_threshold(config.generator, zeta)
    for k in range(1, n + 1):
        col = k - offset
        if col >= width:
            offset += width
            width = max(1, min(n + 1 - offset, _BLOCK_FLOATS // max(R, 1)))
            block = _uniform_block(rngs, width)
            col = 0
        if k > burn:
            u = block[:, col]
            cum = cum_eye + cum_gen * (float(k) ** -zeta)
            nxt = (cum[state] <= u[:, None]).sum(axis=1)
            moved = nxt != state
            if moved.any():
                idx = rows[moved]
                counts[idx, state[idx]] += k - entry[idx]
                entry[idx] = k
                switches[idx] += 1
                last_switch[idx] = k
                state = nxt
        if record_path:
            path[:, k] = state
    counts[rows, state] += n + 1 - entry
    return counts, switches, state.copy(), last_switch, path


def simulate_path(config: ChainConfig, replica: int = 0) -> Trajectory:
    """Sample ``X_0..X_n`` using the stream of replica ``replica`` under ``config.seed``."""
    seed = replica_seed(config.seed, replica)
    *_, path = _run_batch(config, [seed], record_path=True)
    return Trajectory(states=path[0], config=config, replica=replica)


def occupation_vector(t: Trajectory) -> np.ndarray:
    """Frequencies of each state over ``X_1..X_n`` (``X_0`` excluded)."""
    states = np.asarray(t.states)
    n = len(states) - 1
    if n < 1:
        raise InvalidParameter("occupation vector needs horizon >= 1")
    return np.bincount(states[1:], minlength=t.config.m) / n


def switch_count(t: Trajectory) -> int:
    """Number of ``k >= 2`` with ``X_k != X_{k-1}``."""
    s = np.asarray(t.states)[1:]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def ensemble_occupations(
    config: ChainConfig, replicas: int, workers: int | None = None, chunk: int | None = None
) -> EnsembleResult:
    """Simulate ``replicas`` independent chains and summarise each one.

    ``workers`` defaults to ``$OCCULAW_THREADS`` (or 1). Results are
    identical for any ``workers``/``chunk`` choice.
    """
    if int(replicas) != replicas or replicas < 1:
        raise InvalidParameter(f"replicas must be an integer >= 1, got {replicas}")
    replicas = int(replicas)
    workers = default_workers() if workers is None else int(workers)
    seeds = np.array([replica_seed(config.seed, r) for r in range(replicas)], dtype=np.uint64)
    if chunk is None:
        chunk = max(1, -(-replicas // workers))
    spans = [(a, min(a + chunk, replicas)) for a in range(0, replicas, chunk)]

    t0 = time.perf_counter()
    if workers > 1 and len(spans) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda ab: _run_batch(config, seeds[ab[0]:ab[1]]), spans))
    else:
        parts = [_run_batch(config, seeds[a:b]) for a, b in spans]
    elapsed = time.perf_counter() - t0

    counts = np.concatenate([p[0] for p in parts])
    return EnsembleResult(
        replicas=counts / config.horizon,
        counts=counts,
        switch_counts=np.concatenate([p[1] for p in parts]),
        final_states=np.concatenate([p[2] for p in parts]),
        last_switch=np.concatenate([p[3] for p in parts]),
        seeds=seeds,
        horizon=config.horizon,
        elapsed=elapsed,
        config=config,
    )


def switch_probability_bound(config: ChainConfig) -> float:
    """Upper bound on the expected number of switches up to the horizon.

    The chance of leaving state ``i`` at step ``k`` is ``|G(i,i)|/k**zeta``
    beyond burn-in, so the expected switch count is at most
    ``sum_{k > n(G,zeta)} max_i |G(i,i)| / k**zeta``.
    """
    burn = burn_in_threshold(config.generator, config.zeta)
    k = np.arange(burn + 1, config.horizon + 1, dtype=np.float64)
    return float(config.generator.max_abs_diagonal * np.sum(k**-config.zeta))
