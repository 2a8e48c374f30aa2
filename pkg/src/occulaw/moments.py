"""Exact moments of the limiting occupation law when ``zeta = 1``.

For a multi-index ``gamma`` of total degree ``d >= 2`` the limit moment is

    (1/d) * sum over arrangements s of the multiset {1^g1, ..., m^gm}
            nu(s_1) * prod_{i=1}^{d-1} (iI - G)^{-1}(s_i, s_{i+1})

where every distinct arrangement carries weight ``prod_k g_k!``. The
generator ``Theta(theta)`` (constant column rates) turns this into the
Dirichlet(theta) moments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import gammaln

from .core import GeneratorMatrix, MultiIndex, all_multi_indices, as_multi_index, validate_generator
from .errors import DegreeOverflow, InvalidParameter, NonPositiveTheta
from .spectral import resolvent, stationary_distribution

DEFAULT_DEGREE_CAP = 10


class MomentMethod(str, Enum):
    PERMUTATION_FORMULA = "permutation_formula"
    DIRICHLET_CLOSED_FORM = "dirichlet_closed_form"
    VERTEX_RECURSION = "vertex_recursion"


@dataclass(frozen=True)
class MomentValue:
    value: float
    gamma: MultiIndex
    method: MomentMethod

    def __float__(self):
        return self.value


@dataclass(frozen=True)
class ThetaParams:
    theta: tuple[float, ...]

    def __post_init__(self):
        t = tuple(float(v) for v in self.theta)
        if len(t) < 2:
            raise InvalidParameter("theta needs at least 2 entries")
        if not all(v > 0 and math.isfinite(v) for v in t):
            raise NonPositiveTheta(f"theta entries must be positive: {t}")
        object.__setattr__(self, "theta", t)

    @property
    def total(self) -> float:
        return math.fsum(self.theta)

    @property
    def m(self) -> int:
        return len(self.theta)

    def as_array(self) -> np.ndarray:
        return np.array(self.theta)


def as_theta(theta) -> ThetaParams:
    return theta if isinstance(theta, ThetaParams) else ThetaParams(tuple(theta))


def multiset_permutations(gamma, cap: int = DEFAULT_DEGREE_CAP):
    """Yield ``(arrangement, multiplicity)`` for each distinct arrangement.

    Arrangements are tuples of 0-based states in lexicographic order; the
    multiplicity ``prod_k gamma_k!`` is the same for all of them.
    """
    gamma = as_multi_index(gamma)
    _check_cap(gamma, cap)
    weight = math.prod(math.factorial(g) for g in gamma)
    seq = [s for s, g in enumerate(gamma) for _ in range(g)]
    d = len(seq)
    while True:
        yield tuple(seq), weight
        # next lexicographic permutation
        i = d - 2
        while i >= 0 and seq[i] >= seq[i + 1]:
            i -= 1
        if i < 0:
            return
        j = d - 1
        while seq[j] <= seq[i]:
            j -= 1
        seq[i], seq[j] = seq[j], seq[i]
        seq[i + 1:] = reversed(seq[i + 1:])


def _check_cap(gamma: MultiIndex, cap: int):
    if gamma.total > cap:
        raise DegreeOverflow(f"total degree {gamma.total} exceeds cap {cap}")


def _arrangements(gamma: MultiIndex, cap: int) -> tuple[np.ndarray, int]:
    perms = [p for p, _ in multiset_permutations(gamma, cap)]
    weight = math.prod(math.factorial(g) for g in gamma)
    return np.array(perms, dtype=np.intp), weight


def limit_moment(G: GeneratorMatrix, gamma, cap: int = DEFAULT_DEGREE_CAP, _resolvents=None) -> MomentValue:
    """Moment ``E[x_1^g1 ... x_m^gm]`` of the limit occupation law."""
    gamma = as_multi_index(gamma)
    if gamma.m != G.m:
        raise InvalidParameter(f"gamma has {gamma.m} entries, generator has {G.m} states")
    _check_cap(gamma, cap)
    nu = stationary_distribution(G)
    d = gamma.total
    if d == 1:
        return MomentValue(float(nu[gamma.gamma.index(1)]), gamma, MomentMethod.PERMUTATION_FORMULA)
    res = _resolvents if _resolvents is not None else resolvent_stack(G, d - 1)
    perms, weight = _arrangements(gamma, cap)
    terms = nu[perms[:, 0]]
    for i in range(d - 1):
        terms = terms * res[i][perms[:, i], perms[:, i + 1]]
    value = weight * float(np.sum(terms)) / d
    return MomentValue(value, gamma, MomentMethod.PERMUTATION_FORMULA)


def resolvent_stack(G: GeneratorMatrix, count: int) -> list[np.ndarray]:
    """``[(1I - G)^{-1}, ..., (count I - G)^{-1}]``."""
    return [resolvent(G, i) for i in range(1, count + 1)]


def moment_table(G: GeneratorMatrix, max_degree: int, cap: int = DEFAULT_DEGREE_CAP) -> list[MomentValue]:
    if max_degree > cap:
        raise DegreeOverflow(f"max degree {max_degree} exceeds cap {cap}")
    res = resolvent_stack(G, max(max_degree - 1, 0))
    return [limit_moment(G, g, cap, _resolvents=res) for g in all_multi_indices(G.m, max_degree)]


def theta_generator(theta) -> GeneratorMatrix:
    """Generator whose column ``j`` off the diagonal is ``theta_j``."""
    theta = as_theta(theta)
    t = theta.as_array()
    M = np.tile(t, (theta.m, 1))
    np.fill_diagonal(M, t - theta.total)
    return validate_generator(M)


def _rising(a: float, k: int) -> float:
    return math.prod(a + i for i in range(k))


def dirichlet_moment(theta, gamma) -> float:
    """``prod_i theta_i^(gamma_i rising) / thetabar^(gammabar rising)``."""
    theta = as_theta(theta)
    gamma = as_multi_index(gamma)
    if gamma.m != theta.m:
        raise InvalidParameter("theta and gamma lengths differ")
    total = theta.total
    if total + gamma.total > 30:
        log_num = sum(gammaln(t + g) - gammaln(t) for t, g in zip(theta.theta, gamma.gamma))
        log_den = gammaln(total + gamma.total) - gammaln(total)
        return float(np.exp(log_num - log_den))
    num = math.prod(_rising(t, g) for t, g in zip(theta.theta, gamma.gamma))
    return num / _rising(total, gamma.total)


def theta_resolvent_closed_form(theta, l: int) -> np.ndarray:
    """``(lI - Theta)^{-1} = F_{l+1} / (l (l + thetabar))``.

    ``F_{l+1}`` has ``theta_k`` in column ``k`` off the diagonal and
    ``theta_j + l`` on the diagonal.
    """
    theta = as_theta(theta)
    if int(l) != l or l < 1:
        raise InvalidParameter(f"l must be a positive integer, got {l}")
    t = theta.as_array()
    F = np.tile(t, (theta.m, 1)) + l * np.eye(theta.m)
    return F / (l * (l + theta.total))


def vertex_moment_sequence(G: GeneratorMatrix, l: int, K: int) -> np.ndarray:
    """Moments ``E[x_l^k]`` for ``k = 1..K`` via ``a_{k+1} = (I - G/k)^{-1}(l,l) a_k``."""
    if K < 1:
        raise InvalidParameter(f"K must be >= 1, got {K}")
    if not 0 <= l < G.m:
        raise InvalidParameter(f"state {l} out of range")
    out = np.empty(K)
    out[0] = stationary_distribution(G)[l]
    eye = np.eye(G.m)
    e_l = eye[:, l]
    for k in range(1, K):
        # (I - G/k)^{-1}(l, l) from one column solve
        col = np.linalg.solve(eye - G.entries / k, e_l)
        out[k] = col[l] * out[k - 1]
    return out


def vertex_decay_slope(G: GeneratorMatrix, l: int, k_min: int = 50, k_max: int = 500) -> float:
    """Least-squares slope of ``log E[x_l^k]`` against ``log k`` on ``[k_min, k_max]``."""
    alpha = vertex_moment_sequence(G, l, k_max)
    k = np.arange(k_min, k_max + 1)
    slope, _ = np.polyfit(np.log(k), np.log(alpha[k - 1]), 1)
    return float(slope)
