"""Linear algebra on generators.

Stationary laws, resolvents, eigendecompositions, exact products of the
one-step kernels and the position limit for ``zeta > 1``. Complex arithmetic
stays inside this module; every exported matrix is real.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy.linalg import expm
from scipy.special import zeta as hurwitz_zeta

from .core import (
    GeneratorMatrix,
    burn_in_threshold,
    check_distribution,
)
from .errors import (
    BadRange,
    InvalidParameter,
    NotDiagonalizable,
    SingularSolve,
    ZetaNotGreaterThanOne,
)

RECONSTRUCTION_TOL = 1e-8
CONDITION_LIMIT = 1e8
IMAG_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    right_vectors: np.ndarray
    inverse_vectors: np.ndarray
    condition: float
    reconstruction_error: float

    @property
    def is_diagonalizable(self) -> bool:
        return self.condition <= CONDITION_LIMIT and self.reconstruction_error <= RECONSTRUCTION_TOL


def _real(a: np.ndarray, what: str) -> np.ndarray:
    a = np.asarray(a)
    if np.iscomplexobj(a):
        scale = max(1.0, float(np.max(np.abs(a.real))))
        if np.max(np.abs(a.imag)) > IMAG_TOL * scale:
            raise SingularSolve(f"{what}: imaginary residue {np.max(np.abs(a.imag)):.2e}")
        a = a.real
    return np.ascontiguousarray(a, dtype=np.float64)


def stationary_distribution(G: GeneratorMatrix) -> np.ndarray:
    """Positive left null vector of ``G`` normalised to unit sum.

    Solves ``nu^T G = 0`` with one (redundant) balance equation replaced by
    the normalisation row.
    """
    return _stationary(G).copy()


@lru_cache(maxsize=256)
def _stationary(G: GeneratorMatrix) -> np.ndarray:
    m = G.m
    A = G.entries.T.copy()
    A[-1, :] = 1.0
    b = np.zeros(m)
    b[-1] = 1.0
    try:
        nu = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSolve(f"stationary system is singular: {exc}") from None
    if not np.all(np.isfinite(nu)) or np.any(nu <= 0):
        raise SingularSolve(f"stationary solve returned non-positive entries {nu.tolist()}")
    nu /= nu.sum()
    nu.setflags(write=False)
    return nu


def resolvent(G: GeneratorMatrix, x: float) -> np.ndarray:
    """``(xI - G)^{-1}`` for ``x >= 1``."""
    if not x >= 1:
        raise InvalidParameter(f"resolvent needs x >= 1, got {x}")
    m = G.m
    try:
        return np.linalg.solve(x * np.eye(m) - G.entries, np.eye(m))
    except np.linalg.LinAlgError as exc:
        raise SingularSolve(f"xI - G is singular at x={x}: {exc}") from None


@lru_cache(maxsize=256)
def spectral_decomposition(G: GeneratorMatrix) -> SpectralDecomposition:
    lam, V = np.linalg.eig(G.entries)
    order = np.lexsort((lam.imag, -lam.real))
    lam, V = lam[order], V[:, order]
    cond = float(np.linalg.cond(V))
    if not np.isfinite(cond) or cond > 1e15:
        Vinv = np.full_like(V, np.nan)
        err = math.inf
    else:
        Vinv = np.linalg.inv(V)
        recon = V @ np.diag(lam) @ Vinv
        err = float(np.max(np.abs(recon - G.entries)) / np.max(np.abs(G.entries)))
    for a in (lam, V, Vinv):
        a.setflags(write=False)
    return SpectralDecomposition(lam, V, Vinv, cond, err)


def kernel_product(G: GeneratorMatrix, zeta: float, i: int, j: int) -> np.ndarray:
    """``P_i P_{i+1} ... P_j`` by direct left-to-right accumulation."""
    if i < 1 or i > j:
        raise BadRange(f"need 1 <= i <= j, got i={i}, j={j}")
    m = G.m
    out = np.eye(m)
    start = max(i, burn_in_threshold(G, zeta) + 1)
    for k in range(start, j + 1):
        out = out @ (np.eye(m) + G.entries / float(k) ** zeta)
    return out


def kernel_product_spectral(G: GeneratorMatrix, zeta: float, i: int, j: int) -> np.ndarray:
    """Same product through the eigenbasis: ``V diag(prod_k (1 + lam/k**zeta)) V^{-1}``.

    Costs ``O((j - i) m + m^3)``. Factors at or below the burn-in index are
    the identity and are skipped.
    """
    if i < 1 or i > j:
        raise BadRange(f"need 1 <= i <= j, got i={i}, j={j}")
    dec = spectral_decomposition(G)
    if not dec.is_diagonalizable:
        raise NotDiagonalizable(
            f"eigenvector condition {dec.condition:.2e}, reconstruction error {dec.reconstruction_error:.2e}"
        )
    start = max(i, burn_in_threshold(G, zeta) + 1)
    if start > j:
        return np.eye(G.m)
    scale = np.arange(start, j + 1, dtype=np.float64) ** -zeta
    factors = 1.0 + np.outer(dec.eigenvalues, scale)
    d = np.prod(factors, axis=1)
    out = (dec.right_vectors * d) @ dec.inverse_vectors
    return _real(out, "spectral kernel product")


def kernel_product_auto(G: GeneratorMatrix, zeta: float, i: int, j: int) -> np.ndarray:
    """Spectral path when the eigendecomposition is trustworthy, naive otherwise."""
    if spectral_decomposition(G).is_diagonalizable:
        return kernel_product_spectral(G, zeta, i, j)
    return kernel_product(G, zeta, i, j)


def contraction_coefficient(P) -> float:
    """Dobrushin coefficient: half the largest total-variation distance between rows."""
    P = np.asarray(P, dtype=np.float64)
    diff = np.abs(P[:, None, :] - P[None, :, :]).sum(axis=2)
    return float(min(1.0, max(0.0, 0.5 * diff.max())))


def contraction_coefficient_overlap(P) -> float:
    """``1 - min_{x,y} sum_z min(P(x,z), P(y,z))``; equal to the above for stochastic P."""
    P = np.asarray(P, dtype=np.float64)
    overlap = np.minimum(P[:, None, :], P[None, :, :]).sum(axis=2)
    return float(min(1.0, max(0.0, 1.0 - overlap.min())))


def _log_series_tail(G: np.ndarray, zeta: float, start: int, tol: float) -> np.ndarray:
    """``sum_{n >= start} log(I + G/n**zeta)`` via the Mercator series.

    Requires ``||G|| / start**zeta < 1``; the k-th series term is
    ``(-1)^(k+1) G^k / k * hurwitz_zeta(k*zeta, start)``.
    """
    norm = float(np.linalg.norm(G, 2))
    m = G.shape[0]
    total = np.zeros((m, m))
    power = np.eye(m)
    for k in range(1, 200):
        power = power @ G
        weight = float(hurwitz_zeta(k * zeta, start))
        total += ((-1) ** (k + 1) / k) * weight * power
        if norm**k * weight / k < tol * 1e-3:
            break
    return total


def limit_marginal_zeta_gt1(
    G: GeneratorMatrix, zeta: float, pi, tol: float = 1e-10, head: int | None = None
) -> np.ndarray:
    """Position limit ``pi^T prod_{n >= 1} P_n`` for ``zeta > 1``.

    The product is accumulated directly up to ``head`` and the remaining
    infinite tail is applied in closed form: all factors are polynomials in
    ``G`` and commute, so the tail equals ``expm(sum_{n > head} log(I + G/n**zeta))``,
    whose series coefficients are Hurwitz zeta values. Works for every G,
    diagonalizable or not.
    """
    if not zeta > 1:
        raise ZetaNotGreaterThanOne(f"zeta must exceed 1, got {zeta}")
    pi = check_distribution(pi, G.m)
    norm = float(np.linalg.norm(G.entries, 2))
    n0 = burn_in_threshold(G, zeta)
    if head is None:
        head = max(n0 + 1, 256, math.ceil((10.0 * norm) ** (1.0 / zeta)))
    head = max(head, n0)
    row = np.array(pi, dtype=np.float64)
    m = G.m
    for k in range(n0 + 1, head + 1):
        row = row @ (np.eye(m) + G.entries / float(k) ** zeta)
    tail = expm(_log_series_tail(G.entries, zeta, head + 1, tol))
    row = row @ tail
    return row / row.sum()


def limit_marginal_eigen(G: GeneratorMatrix, zeta: float, pi, dps: int = 30) -> np.ndarray:
    """Eigen-product form ``pi^T V D' V^{-1}``, ``D'(i,i) = prod_{n > n(G,zeta)} (1 + lam_i/n**zeta)``.

    Each scalar product is summed in log form by ``mpmath.nsum`` with
    Euler-Maclaurin acceleration (the terms decay only algebraically, which
    defeats the default Richardson/Shanks extrapolation). Only valid for
    diagonalizable G.
    """
    if not zeta > 1:
        raise ZetaNotGreaterThanOne(f"zeta must exceed 1, got {zeta}")
    pi = check_distribution(pi, G.m)
    dec = spectral_decomposition(G)
    if not dec.is_diagonalizable:
        raise NotDiagonalizable("eigen-product formula needs a diagonalizable generator")
    n0 = burn_in_threshold(G, zeta)
    d = np.empty(G.m, dtype=np.complex128)
    with mpmath.workdps(dps):
        z = mpmath.mpf(zeta)
        for idx, lam in enumerate(dec.eigenvalues):
            if abs(lam) < 1e-12:
                d[idx] = 1.0
                continue
            lam_mp = mpmath.mpc(lam.real, lam.imag)
            log_sum = mpmath.nsum(
                lambda n: mpmath.log(1 + lam_mp / mpmath.power(n, z)),
                [n0 + 1, mpmath.inf],
                method="euler-maclaurin",
            )
            d[idx] = complex(mpmath.exp(log_sum))
    row = pi @ ((dec.right_vectors * d) @ dec.inverse_vectors)
    row = _real(row, "eigen-product marginal")
    return row / row.sum()
