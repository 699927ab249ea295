"""Matplotlib renderings of the pipeline outputs (file backend only)."""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

DPI = 120
SCATTER_MAX = 5_000


def fig_exponents(lyap, path) -> None:
    """Exponent estimates with 3-sigma error bars."""
    gammas = np.asarray(lyap.gammas)
    err = 3.0 * np.asarray(lyap.stderr)
    idx = np.arange(1, len(gammas) + 1)
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.errorbar(idx, gammas, yerr=err, fmt="o", capsize=4)
    ax.axhline(0.0, color="gray", lw=0.8)
    ax.set_xticks(idx)
    ax.set_xlabel("exponent index")
    ax.set_ylabel("nats per step")
    ax.set_title(f"Lyapunov spectrum (m={lyap.m}, D={lyap.D:.3f})"
                 if np.isfinite(lyap.D) else "Lyapunov spectrum")
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def fig_corr_fit(diag, path, title: str) -> None:
    """Pair-correlation curve with the fitted power law."""
    radii = np.asarray(diag.radii)
    c_r = np.asarray(diag.c_r)
    keep = c_r > 0
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    ax.loglog(radii[keep], c_r[keep], "o", ms=4, label="pair fraction")
    if np.isfinite(diag.slope):
        line = np.exp(diag.intercept) * radii[keep] ** diag.slope
        ax.loglog(radii[keep], line, "-",
                  label=f"slope {diag.slope:.3f} (R$^2$={diag.r_squared:.4f})")
    ax.set_xlabel("radius")
    ax.set_ylabel("C(r)")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def fig_direction_cloud(fcloud, path) -> None:
    """Direction cloud: angle histogram on the line bundle, else distance histogram."""
    frames = fcloud.frames
    fig, ax = plt.subplots(figsize=(4.5, 3.2))
    if fcloud.d == 2 and fcloud.m == 1:
        ang = np.mod(np.arctan2(frames[:, 1, 0], frames[:, 0, 0]), np.pi)
        ax.hist(ang, bins=120, density=True)
        ax.set_xlabel("direction angle (mod pi)")
        ax.set_ylabel("density")
    else:
        from .grassmann import pairwise_dist
        take = frames[: min(len(frames), 512)]
        dmat = pairwise_dist(take)
        vals = dmat[np.triu_indices_from(dmat, k=1)]
        ax.hist(vals, bins=80, density=True)
        ax.set_xlabel("pairwise subspace distance")
        ax.set_ylabel("density")
    ax.set_title("stationary direction sample")
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def fig_measure_cloud(mcloud, path) -> None:
    """Attractor sample in the first two coordinates, colored by first symbol."""
    pts = mcloud.points
    pref = mcloud.prefixes
    if len(pts) > SCATTER_MAX:
        step = len(pts) // SCATTER_MAX
        pts, pref = pts[::step], pref[::step]
    fig, ax = plt.subplots(figsize=(4.2, 4.2))
    x = pts[:, 0]
    y = pts[:, 1] if pts.shape[1] > 1 else np.zeros(len(pts))
    ax.scatter(x, y, c=pref, s=1.5, cmap="tab10", linewidths=0)
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x1")
    ax.set_ylabel("x2")
    ax.set_title("measure sample by first symbol")
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def render_all(vr, figdir) -> dict:
    """Render every figure the report's data supports; returns name -> path."""
    paths = {}

    p = os.path.join(figdir, "exponents.png")
    fig_exponents(vr.lyapunov, p)
    paths["fig_exponents"] = p

    if vr.furstenberg_diag is not None:
        p = os.path.join(figdir, "furstenberg_corr.png")
        fig_corr_fit(vr.furstenberg_diag, p, "direction-measure correlation fit")
        paths["fig_furstenberg_corr"] = p
    if vr.fcloud is not None:
        p = os.path.join(figdir, "direction_cloud.png")
        fig_direction_cloud(vr.fcloud, p)
        paths["fig_direction_cloud"] = p
    if vr.measure_diag is not None:
        p = os.path.join(figdir, "measure_corr.png")
        fig_corr_fit(vr.measure_diag, p, "measure correlation fit")
        paths["fig_measure_corr"] = p
    if vr.mcloud is not None:
        p = os.path.join(figdir, "attractor.png")
        fig_measure_cloud(vr.mcloud, p)
        paths["fig_attractor"] = p
    return paths
