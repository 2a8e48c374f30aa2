"""Figure rendering for the report commands (files only, Agg backend)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .experiments import PLANE_VERTICES, TriangleHistogram  # noqa: E402


def _triangle_outline(ax):
    tri = np.vstack([PLANE_VERTICES, PLANE_VERTICES[:1]])
    ax.plot(tri[:, 0], tri[:, 1], color="k", lw=0.8)
    for label, (x, y), off in zip(("1", "2", "3"), PLANE_VERTICES, ((6, -4), (-12, -4), (6, 2))):
        ax.annotate(label, (x, y), textcoords="offset points", xytext=off, fontsize=9)


def plot_triangle_histogram(hist: TriangleHistogram, path, title: str = "", points=None):
    fig, ax = plt.subplots(figsize=(5, 4.5))
    masked = np.ma.masked_where(~hist.intersecting_mask(), hist.counts.astype(float))
    mesh = ax.pcolormesh(hist.x_edges, hist.y_edges, masked.T, cmap="viridis", shading="flat")
    fig.colorbar(mesh, ax=ax, label="replicas")
    if points is not None:
        ax.scatter(points[:, 0], points[:, 1], s=1.5, c="w", alpha=0.35, lw=0)
    _triangle_outline(ax)
    ax.set_aspect("equal")
    ax.set_xlim(-0.12, hist.x_edges[-1] + 0.12)
    ax.set_ylim(-0.08, hist.y_edges[-1] + 0.08)
    ax.set_xlabel("plane x")
    ax.set_ylabel("plane y")
    if title:
        ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)


def plot_regime_report(blocks, path, state: int = 0):
    """One histogram of ``Z_{state,n}`` per zeta, with the regime comparator marked."""
    fig, axes = plt.subplots(1, len(blocks), figsize=(3.2 * len(blocks), 3), squeeze=False)
    for ax, block in zip(axes[0], blocks):
        z = block.ensemble.replicas[:, state]
        ax.hist(z, bins=30, range=(0, 1), color="0.4")
        ax.axvline(block.comparator[state], color="C3", lw=1)
        ax.set_title(f"zeta = {block.zeta:g} ({block.regime})", fontsize=9)
        ax.set_xlabel(f"Z_{state + 1}")
    axes[0, 0].set_ylabel("replicas")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return Path(path)
