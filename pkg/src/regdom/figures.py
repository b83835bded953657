"""Report figures, rendered headlessly next to the delimited output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150
_META = {"Software": "regdom"}


def _save(fig, path) -> None:
    fig.savefig(path, dpi=_DPI, metadata=_META, bbox_inches="tight")
    plt.close(fig)


def _plane_view(surface):
    """Heights restricted to the first two axes (middle slice above d=2)."""
    h = surface.heights
    idx = tuple(slice(None) if i < 2 else h.shape[i] // 2
                for i in range(h.ndim))
    return surface.axes[0], surface.axes[1], h[idx]


def level_figure(surface, path, title: str) -> None:
    ax0, ax1, h = _plane_view(surface)
    fig, ax = plt.subplots(figsize=(5.4, 4.4))
    im = ax.pcolormesh(ax0, ax1, h.T, shading="nearest", cmap="viridis")
    fig.colorbar(im, ax=ax, label="height t")
    ax.set_xlabel("y1")
    ax.set_ylabel("y2")
    ax.set_aspect("equal")
    ax.set_title(title)
    _save(fig, path)


def singularity_figure(complex_, half_width: float, path) -> None:
    fig, ax = plt.subplots(figsize=(4.8, 4.8))
    L = half_width
    for edge in complex_.edges:
        if edge.kind == "segment":
            pts = np.stack([edge.p0, edge.p1])
        else:
            span = 4.0 * L
            pts = np.stack([edge.p0, edge.p0 + span * edge.direction])
            if edge.kind == "line":
                pts[0] = edge.p0 - span * edge.direction
        ax.plot(pts[:, 0], pts[:, 1], "-", color="tab:blue", lw=1.8)
    for vert in complex_.vertices:
        ax.plot(vert.y[0], vert.y[1], "o", color="tab:red", ms=6)
    ax.set_xlim(-L, L)
    ax.set_ylim(-L, L)
    ax.set_aspect("equal")
    ax.set_xlabel("y1")
    ax.set_ylabel("y2")
    ax.set_title("initial singularity")
    _save(fig, path)


def curvature_figure(h_values, a: float, d: int, path) -> None:
    vals = np.asarray(h_values, dtype=float)
    vals = vals[np.isfinite(vals)]
    fig, ax = plt.subplots(figsize=(5.6, 3.8))
    ax.hist(vals, bins=80, color="tab:gray")
    ax.axvline(-1.0 / a, color="tab:red", ls="--", label="-1/a")
    ax.axvline(-1.0 / (d * a), color="tab:blue", ls="--",
               label=f"-1/({d}a)")
    ax.set_xlabel("estimated mean curvature")
    ax.set_ylabel("nodes")
    ax.legend()
    ax.set_title(f"level a={a:g}")
    _save(fig, path)


def flow_figure(times, closed_by_node: dict, estimated_by_node: dict, path) -> None:
    fig, ax = plt.subplots(figsize=(5.6, 3.8))
    for node, series in sorted(closed_by_node.items()):
        ax.plot(times, series, "-", lw=1.6, label=f"node {node}")
    for node, series in sorted(estimated_by_node.items()):
        ax.plot(times, series, "x", ms=5, color="black")
    ax.set_xlabel("flow time t")
    ax.set_ylabel("mean curvature")
    ax.legend(fontsize=8)
    ax.set_title("normal flow: closed form (lines) vs estimator (x)")
    _save(fig, path)


def cmc_figure(solution, path) -> None:
    ax0, ax1, h = _plane_view(solution.surface)
    fig, (left, right) = plt.subplots(1, 2, figsize=(9.2, 3.9))
    im = left.pcolormesh(ax0, ax1, h.T, shading="nearest", cmap="viridis")
    fig.colorbar(im, ax=left, label="height t")
    left.set_xlabel("y1")
    left.set_ylabel("y2")
    left.set_aspect("equal")
    left.set_title(f"c = {solution.c:g}")
    right.semilogy(solution.residual_history, "-", color="tab:blue")
    right.set_xlabel("iteration")
    right.set_ylabel("sup-norm residual")
    right.set_title("convergence")
    _save(fig, path)


def cmc_time_figure(tau, neg_inv, d: int, path) -> None:
    tau = np.asarray(tau, dtype=float)
    neg_inv = np.asarray(neg_inv, dtype=float)
    fig, ax = plt.subplots(figsize=(4.6, 4.4))
    ax.plot(tau, neg_inv, "o", ms=4, color="tab:blue")
    lim = np.linspace(0.0, max(tau.max(), neg_inv.max()) * 1.05, 40)
    ax.plot(lim, lim, "--", color="tab:red", label="-1/t_cmc = tau")
    ax.plot(lim, d * lim, "--", color="tab:green",
            label=f"-1/t_cmc = {d} tau")
    ax.set_xlabel("cosmological time tau")
    ax.set_ylabel("-1 / t_cmc")
    ax.legend(fontsize=8)
    _save(fig, path)
