"""Matplotlib renderers for the CLI report path.

Figures are a display layer only; the CSV/JSON outputs carry the
ground-truth numbers.  Everything is rendered headless to SVG with a
fixed hash salt and no embedded date, keeping files reproducible.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

matplotlib.rcParams["svg.hashsalt"] = "growthpoly"

_META = {"Date": None}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata=_META, bbox_inches="tight")
    plt.close(fig)


def render_boundary(path, boundary_z, measure=None, marks=None, title=""):
    """Droplet boundary, optionally colored by the conformal measure."""
    fig, ax = plt.subplots(figsize=(5, 5))
    z = np.asarray(boundary_z)
    if measure is not None:
        pts = ax.scatter(z.real, z.imag, c=np.asarray(measure), s=4,
                         cmap="viridis")
        fig.colorbar(pts, ax=ax, label="conformal measure")
    else:
        ax.plot(z.real, z.imag, "-", lw=1.0)
    for label, w in (marks or {}).items():
        ax.plot([w.real], [w.imag], "x", ms=8, label=label)
    if marks:
        ax.legend(loc="best", fontsize=8)
    ax.set_aspect("equal")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    if title:
        ax.set_title(title)
    _save(fig, path)


def render_profiles(path, theta, rho, conformal, degree):
    """Boundary density profile against the conformal measure (shapes)."""
    fig, ax = plt.subplots(figsize=(6, 4))
    rho = np.asarray(rho)
    conformal = np.asarray(conformal)
    shift = np.exp(np.mean(np.log(conformal)) - np.mean(np.log(rho)))
    ax.plot(theta, conformal, lw=1.5, label="conformal measure")
    ax.plot(theta, rho * shift, "--", lw=1.2,
            label=f"density n={degree} (mean-matched)")
    ax.set_xlabel("theta")
    ax.set_ylabel("boundary density")
    ax.legend(loc="best", fontsize=8)
    _save(fig, path)


def render_raster(path, xs, ys, values, boundary_z=None, title=""):
    """Filled contours of the weighted density with boundary overlay."""
    fig, ax = plt.subplots(figsize=(5.5, 5))
    vals = np.asarray(values)
    levels = np.linspace(0.0, vals.max() if vals.max() > 0 else 1.0, 24)
    cs = ax.contourf(xs, ys, vals, levels=levels, cmap="magma")
    fig.colorbar(cs, ax=ax, label="density")
    if boundary_z is not None:
        zb = np.asarray(boundary_z)
        ax.plot(np.append(zb.real, zb.real[0]),
                np.append(zb.imag, zb.imag[0]), "c-", lw=1.0)
    ax.set_aspect("equal")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    if title:
        ax.set_title(title)
    _save(fig, path)


def render_kl(path, degrees, raw, adjusted):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.semilogy(degrees, np.abs(np.asarray(raw)), "o-", label="raw")
    ax.semilogy(degrees, np.asarray(adjusted), "s-", label="mean adjusted")
    ax.set_xlabel("degree n")
    ax.set_ylabel("divergence from conformal measure")
    ax.legend(loc="best", fontsize=8)
    _save(fig, path)


def render_zeros(path, zeros_by_degree, boundary_z=None, trajectory=None):
    fig, ax = plt.subplots(figsize=(5.5, 5))
    if boundary_z is not None:
        zb = np.asarray(boundary_z)
        ax.plot(np.append(zb.real, zb.real[0]),
                np.append(zb.imag, zb.imag[0]), "k-", lw=0.8,
                label="boundary")
    for degree, zs in zeros_by_degree.items():
        zs = np.asarray(zs)
        ax.plot(zs.real, zs.imag, ".", ms=4, label=f"zeros n={degree}")
    if trajectory is not None:
        tp = np.asarray(trajectory)
        ax.plot(tp.real, tp.imag, "r-", lw=1.4, label="critical trajectory")
    ax.set_aspect("equal")
    ax.legend(loc="best", fontsize=8)
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    _save(fig, path)


def render_evolution(path, boundaries, cusp_t0=None):
    """Nested droplet boundaries for a grid of areas."""
    fig, ax = plt.subplots(figsize=(5.5, 5))
    cmap = plt.get_cmap("viridis")
    n = max(len(boundaries), 2)
    for idx, (t0, zb) in enumerate(boundaries):
        zb = np.asarray(zb)
        ax.plot(np.append(zb.real, zb.real[0]),
                np.append(zb.imag, zb.imag[0]),
                color=cmap(idx / (n - 1)), lw=1.0, label=f"t0={t0:g}")
    if cusp_t0 is not None:
        ax.set_title(f"univalence lost near t0 = {cusp_t0:.6f}")
    if len(boundaries) <= 10:
        ax.legend(loc="best", fontsize=7)
    ax.set_aspect("equal")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    _save(fig, path)
