"""Experiment drivers behind the CLI: the simplex-to-plane map, the
three-state histogram experiment and the zeta regime report."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import ChainConfig, GeneratorMatrix, all_multi_indices, burn_in_threshold, uniform
from .errors import InvalidParameter, NotSimplexPoint
from .moments import moment_table
from .simulate import EnsembleResult, ensemble_occupations
from .spectral import limit_marginal_zeta_gt1, stationary_distribution

SQRT2 = math.sqrt(2.0)
# images of the vertices e_1, e_2, e_3; pairwise sqrt(2) apart
PLANE_VERTICES = np.array(
    [
        [SQRT2, 0.0],
        [0.0, 0.0],
        [SQRT2 * 0.5, SQRT2 * math.sqrt(3.0) / 2.0],
    ]
)
SIMPLEX_TOL = 1e-9


def simplex_to_plane(x) -> np.ndarray:
    """Linear map of a point (or an ``(N, 3)`` batch) of the 2-simplex to the plane."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != 3:
        raise NotSimplexPoint(f"expected 3 barycentric coordinates, got shape {x.shape}")
    if np.any(x < -SIMPLEX_TOL) or np.any(np.abs(x.sum(axis=-1) - 1.0) > SIMPLEX_TOL):
        raise NotSimplexPoint("point is not in the simplex")
    return x @ PLANE_VERTICES


def plane_to_simplex(p) -> np.ndarray:
    """Inverse of :func:`simplex_to_plane` on the triangle's affine hull."""
    p = np.asarray(p, dtype=np.float64)
    T = (PLANE_VERTICES[[0, 2]] - PLANE_VERTICES[1]).T
    lam = (p - PLANE_VERTICES[1]) @ np.linalg.inv(T).T
    x1, x3 = lam[..., 0], lam[..., 1]
    return np.stack([x1, 1.0 - x1 - x3, x3], axis=-1)


def _in_triangle(p, strict=True) -> np.ndarray:
    b = plane_to_simplex(p)
    if strict:
        return np.all(b > 0, axis=-1)
    return np.all(b >= -1e-12, axis=-1)


@dataclass
class TriangleHistogram:
    """Fixed-width square-ish grid over the bounding box of the mapped triangle."""

    bins: int
    counts: np.ndarray  # (bins, bins), [ix, iy]
    x_edges: np.ndarray
    y_edges: np.ndarray

    @property
    def centers(self):
        return 0.5 * (self.x_edges[:-1] + self.x_edges[1:]), 0.5 * (self.y_edges[:-1] + self.y_edges[1:])

    def _corner_mask(self, strict: bool, how) -> np.ndarray:
        xs, ys = self.x_edges, self.y_edges
        corners = [(xs[:-1, None], ys[None, :-1]), (xs[1:, None], ys[None, :-1]),
                   (xs[:-1, None], ys[None, 1:]), (xs[1:, None], ys[None, 1:])]
        flags = []
        for cx, cy in corners:
            pts = np.stack(np.broadcast_arrays(cx, cy), axis=-1)
            flags.append(_in_triangle(pts, strict=strict))
        return how(np.stack(flags), axis=0)

    def interior_mask(self) -> np.ndarray:
        """Bins lying entirely inside the open triangle."""
        return self._corner_mask(True, np.all)

    def intersecting_mask(self) -> np.ndarray:
        """Bins that meet the closed triangle; the rest are suppressed on output."""
        mask = self._corner_mask(False, np.any)
        # bins holding a triangle vertex but no triangle-side corner
        for vx, vy in PLANE_VERTICES:
            ix = min(np.searchsorted(self.x_edges, vx, side="right") - 1, self.bins - 1)
            iy = min(np.searchsorted(self.y_edges, vy, side="right") - 1, self.bins - 1)
            mask[ix, iy] = True
        return mask | (self.counts > 0)

    def interior_occupancy(self) -> float:
        mask = self.interior_mask()
        return float(np.mean(self.counts[mask] > 0)) if mask.any() else float("nan")

    def rows(self, include_empty: bool = False):
        """``(bin_x, bin_y, count)`` rows using bin centres, skipping exterior bins."""
        cx, cy = self.centers
        keep = self.intersecting_mask() if include_empty else self.counts > 0
        for ix in range(self.bins):
            for iy in range(self.bins):
                if keep[ix, iy]:
                    yield [float(cx[ix]), float(cy[iy]), int(self.counts[ix, iy])]


def triangle_histogram(points: np.ndarray, bins: int) -> TriangleHistogram:
    if bins < 1:
        raise InvalidParameter("bins must be >= 1")
    x_edges = np.linspace(0.0, SQRT2, bins + 1)
    y_edges = np.linspace(0.0, SQRT2 * math.sqrt(3.0) / 2.0, bins + 1)
    H, _, _ = np.histogram2d(points[:, 0], points[:, 1], bins=[x_edges, y_edges])
    return TriangleHistogram(bins, H.astype(np.int64), x_edges, y_edges)


def ball_fraction(points: np.ndarray, center, radius: float) -> float:
    """Share of plane points within ``radius`` of ``center``."""
    d = np.linalg.norm(np.asarray(points) - np.asarray(center), axis=1)
    return float(np.mean(d < radius))


@dataclass
class Figure2Result:
    ensemble: EnsembleResult
    points: np.ndarray | None
    histogram: TriangleHistogram | None
    nu: np.ndarray


def run_figure2(
    G: GeneratorMatrix,
    n: int = 10_000,
    replicas: int = 1000,
    seed: int = 0,
    bins: int = 10,
    zeta: float = 1.0,
    pi=None,
    workers: int | None = None,
) -> Figure2Result:
    """Occupation vectors of ``replicas`` runs, mapped to the plane and binned when ``m = 3``."""
    pi = uniform(G.m) if pi is None else pi
    config = ChainConfig(G, zeta, pi, n, seed)
    ens = ensemble_occupations(config, replicas, workers=workers)
    nu = stationary_distribution(G)
    if G.m != 3:
        return Figure2Result(ens, None, None, nu)
    pts = simplex_to_plane(ens.replicas)
    return Figure2Result(ens, pts, triangle_histogram(pts, bins), nu)


def _standard_errors(ens: EnsembleResult) -> np.ndarray:
    p = ens.final_frequencies()
    return np.sqrt(p * (1 - p) / ens.R)


@dataclass
class RegimeBlock:
    zeta: float
    ensemble: EnsembleResult
    regime: str
    comparator: np.ndarray
    moments: list = field(default_factory=list)

    def summary(self) -> dict:
        ens = self.ensemble
        freq = ens.final_frequencies()
        se = _standard_errors(ens)
        out = {
            "zeta": self.zeta,
            "regime": self.regime,
            "burn_in": burn_in_threshold(ens.config.generator, self.zeta),
            "mean": ens.mean().tolist(),
            "std": ens.std().tolist(),
            "mean_switch_count": float(ens.switch_counts.mean()),
            "final_state_frequencies": freq.tolist(),
            "final_state_standard_errors": se.tolist(),
            "comparator": self.comparator.tolist(),
        }
        if self.regime == "point_mixture":
            out["comparator_name"] = "limit_marginal"
            dist = np.min(np.abs(ens.replicas[:, None, :] - np.eye(ens.replicas.shape[1])[None]).sum(axis=2), axis=1)
            out["share_near_vertex"] = float(np.mean(dist <= 0.1))
            out["max_final_freq_z"] = float(np.max(np.abs(freq - self.comparator) / np.maximum(se, 1e-12)))
        else:
            out["comparator_name"] = "stationary"
            out["max_abs_mean_error"] = float(np.max(np.abs(ens.mean() - self.comparator)))
        if self.moments:
            out["moments"] = [
                {
                    "gamma": list(mv.gamma.gamma),
                    "limit": mv.value,
                    "ensemble": float(np.mean(np.prod(ens.replicas ** np.array(mv.gamma.gamma), axis=1))),
                    "method": mv.method.value,
                }
                for mv in self.moments
            ]
        return out


def regime_of(zeta: float) -> str:
    if zeta < 1:
        return "constant"
    if zeta == 1:
        return "spreading"
    return "point_mixture"


def run_regime_report(
    G: GeneratorMatrix,
    zetas,
    n: int = 10_000,
    replicas: int = 200,
    seed: int = 0,
    pi=None,
    moment_degree: int = 2,
    workers: int | None = None,
) -> tuple[dict, list[RegimeBlock]]:
    """Ensemble summaries per ``zeta`` next to the theoretical limit of that regime."""
    pi = uniform(G.m) if pi is None else np.asarray(pi, dtype=np.float64)
    nu = stationary_distribution(G)
    blocks = []
    for zeta in zetas:
        zeta = float(zeta)
        config = ChainConfig(G, zeta, pi, n, seed)
        ens = ensemble_occupations(config, replicas, workers=workers)
        regime = regime_of(zeta)
        if regime == "point_mixture":
            comp = limit_marginal_zeta_gt1(G, zeta, pi, tol=1e-8)
        else:
            comp = nu
        moments = moment_table(G, moment_degree) if regime == "spreading" else []
        blocks.append(RegimeBlock(zeta, ens, regime, comp, moments))
    report = {
        "generator": G.entries.tolist(),
        "stationary": nu.tolist(),
        "initial": list(map(float, pi)),
        "horizon": n,
        "replicas": replicas,
        "seed": seed,
        "blocks": [b.summary() for b in blocks],
    }
    return report, blocks
