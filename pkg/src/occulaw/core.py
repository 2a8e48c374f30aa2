"""Domain types, generator validation and the one-step kernels.

States are 0-based everywhere in the library. The CLI converts to the 1-based
labels ``1..m`` on input and output.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import (
    InvalidDistribution,
    InvalidParameter,
    NonPositiveOffDiagonal,
    NotSquare,
    RowSumViolation,
    TooSmall,
)

DIAGONAL_TOL = 1e-9
PROB_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """A validated member of the class of generators with positive off-diagonals.

    Build instances with :func:`validate_generator`; the constructor trusts
    its input. Instances are immutable and hashable so spectral results can
    be memoised per generator.
    """

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(self.entries))

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.entries)

    @property
    def max_abs_diagonal(self) -> float:
        return float(np.max(-self.diagonal))

    def __eq__(self, other):
        if not isinstance(other, GeneratorMatrix):
            return NotImplemented
        return self.entries.shape == other.entries.shape and np.array_equal(
            self.entries, other.entries
        )

    def __hash__(self):
        return hash((self.entries.shape, self.entries.tobytes()))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def to_json(self) -> dict:
        return {"m": self.m, "entries": self.entries.tolist()}


def validate_generator(M) -> GeneratorMatrix:
    """Check ``M`` is a generator with strictly positive off-diagonal rates.

    The diagonal is rebuilt as minus the off-diagonal row sum, provided the
    supplied diagonal is within ``1e-9`` of that value, so row sums vanish to
    machine precision downstream.
    """
    if isinstance(M, GeneratorMatrix):
        M = M.entries
    a = np.asarray(M, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSquare(f"generator must be a square matrix, got shape {a.shape}")
    m = a.shape[0]
    if m < 2:
        raise TooSmall(f"generator needs at least 2 states, got {m}")
    if not np.all(np.isfinite(a)):
        raise InvalidParameter("generator entries must be finite")
    off = ~np.eye(m, dtype=bool)
    if np.any(a[off] <= 0):
        i, j = np.argwhere((a <= 0) & off)[0]
        raise NonPositiveOffDiagonal(
            f"off-diagonal entry G({i + 1},{j + 1}) = {a[i, j]} is not positive"
        )
    out = a.copy()
    np.fill_diagonal(out, 0.0)
    diag = -out.sum(axis=1)
    bad = np.abs(np.diag(a) - diag) > DIAGONAL_TOL
    if np.any(bad):
        i = int(np.argmax(bad))
        raise RowSumViolation(
            f"row {i + 1} sums to {a[i].sum():.3e}; diagonal must be {diag[i]!r}"
        )
    np.fill_diagonal(out, diag)
    return GeneratorMatrix(out)


def load_generator(path) -> GeneratorMatrix:
    """Read ``{"m": int, "entries": [[...], ...]}`` from a JSON file."""
    data = json.loads(Path(path).read_text())
    return generator_from_json(data)


def generator_from_json(data: dict) -> GeneratorMatrix:
    if not isinstance(data, dict) or "entries" not in data:
        raise InvalidParameter('generator JSON needs an "entries" field')
    unknown = set(data) - {"m", "entries"}
    if unknown:
        raise InvalidParameter(f"unknown generator fields: {sorted(unknown)}")
    G = validate_generator(data["entries"])
    if "m" in data and int(data["m"]) != G.m:
        raise NotSquare(f'"m" = {data["m"]} but entries are {G.m}x{G.m}')
    return G


def check_distribution(pi, m: int | None = None) -> np.ndarray:
    p = np.asarray(pi, dtype=np.float64)
    if p.ndim != 1:
        raise InvalidDistribution("distribution must be a vector")
    if m is not None and p.shape[0] != m:
        raise InvalidDistribution(f"distribution has {p.shape[0]} entries, expected {m}")
    if np.any(p < 0) or abs(p.sum() - 1.0) > PROB_TOL:
        raise InvalidDistribution(f"not a probability vector: {p.tolist()}")
    return _frozen(p)


def uniform(m: int) -> np.ndarray:
    return np.full(m, 1.0 / m)


@dataclass(frozen=True)
class ChainConfig:
    generator: GeneratorMatrix
    zeta: float
    initial: np.ndarray = field(default=None)
    horizon: int = 1
    seed: int = 0

    def __post_init__(self):
        if not isinstance(self.generator, GeneratorMatrix):
            object.__setattr__(self, "generator", validate_generator(self.generator))
        if not self.zeta > 0:
            raise InvalidParameter(f"zeta must be positive, got {self.zeta}")
        object.__setattr__(self, "zeta", float(self.zeta))
        m = self.generator.m
        pi = uniform(m) if self.initial is None else self.initial
        object.__setattr__(self, "initial", check_distribution(pi, m))
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise InvalidParameter(f"horizon must be an integer >= 1, got {self.horizon}")
        object.__setattr__(self, "horizon", int(self.horizon))
        object.__setattr__(self, "seed", int(self.seed) & 0xFFFFFFFFFFFFFFFF)

    @property
    def m(self) -> int:
        return self.generator.m


@dataclass(frozen=True)
class MultiIndex:
    """Exponents ``gamma`` of a monomial on the simplex; ``total`` is their sum."""

    gamma: tuple[int, ...]

    def __post_init__(self):
        g = tuple(int(v) for v in self.gamma)
        if any(v < 0 for v in g) or any(v != w for v, w in zip(g, self.gamma)):
            raise InvalidParameter(f"multi-index entries must be non-negative integers: {self.gamma}")
        if sum(g) < 1:
            raise InvalidParameter("multi-index must have total degree >= 1")
        object.__setattr__(self, "gamma", g)

    @property
    def total(self) -> int:
        return sum(self.gamma)

    @property
    def m(self) -> int:
        return len(self.gamma)

    def __len__(self):
        return len(self.gamma)

    def __iter__(self):
        return iter(self.gamma)

    def __getitem__(self, i):
        return self.gamma[i]

    def plus(self, i: int) -> "MultiIndex":
        g = list(self.gamma)
        g[i] += 1
        return MultiIndex(tuple(g))

    @classmethod
    def unit(cls, m: int, i: int, k: int = 1) -> "MultiIndex":
        g = [0] * m
        g[i] = k
        return cls(tuple(g))


def as_multi_index(gamma) -> MultiIndex:
    if isinstance(gamma, MultiIndex):
        return gamma
    return MultiIndex(tuple(gamma))


def all_multi_indices(m: int, max_total: int, min_total: int = 1):
    """Every gamma in N^m with ``min_total <= sum <= max_total``, graded then lexicographic."""
    out = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            out.append(prefix + (remaining,))
            return
        for v in range(remaining, -1, -1):
            rec(prefix + (v,), remaining - v, slots - 1)

    for total in range(max(min_total, 1), max_total + 1):
        rec((), total, m)
    return [MultiIndex(g) for g in out]


def burn_in_threshold(G: GeneratorMatrix, zeta: float) -> int:
    """Smallest index after which ``I + G/n**zeta`` is guaranteed stochastic."""
    if not zeta > 0:
        raise InvalidParameter(f"zeta must be positive, got {zeta}")
    d = G.max_abs_diagonal
    value = d ** (1.0 / zeta)
    n = math.ceil(value)
    # guard against pow rounding a perfect power just above an integer
    if n - 1 >= 1 and abs(value - (n - 1)) <= 1e-12 * max(1.0, value):
        n -= 1
    return int(n)


def transition_kernel(G: GeneratorMatrix, zeta: float, n: int) -> np.ndarray:
    """One-step transition matrix used between times ``n - 1`` and ``n``."""
    if n < 1:
        raise InvalidParameter(f"kernel index must be >= 1, got {n}")
    m = G.m
    if n <= burn_in_threshold(G, zeta):
        return np.eye(m)
    return np.eye(m) + G.entries / float(n) ** zeta


def is_stochastic(P, tol: float = PROB_TOL) -> bool:
    P = np.asarray(P)
    return bool(
        np.all(P >= -tol) and np.all(P <= 1 + tol) and np.allclose(P.sum(axis=1), 1.0, rtol=0, atol=tol)
    )
