"""Figure rendering for the CLI report path.

The CSV files are the contract; these renderers are a convenience pass
over the same row tuples, one PNG per output file. Everything draws
through the Agg backend so headless runs work.
"""

from __future__ import annotations

import math
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def render(schema: str, rows, png_path) -> str:
    """Dispatch on schema name; returns the path written."""
    try:
        renderer = _RENDERERS[schema]
    except KeyError:
        raise ValueError(f"no renderer for schema {schema!r}")
    fig = renderer(rows)
    fig.savefig(png_path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return str(png_path)


def _training_panel(ax, rows):
    by_label = defaultdict(list)
    band = defaultdict(list)
    for step, label, fid, bound, source in rows:
        if source == "training-state":
            by_label[label].append((step, fid, bound))
        else:
            band[step].append(fid)
    if band:
        steps = sorted(band)
        lo = [min(band[s]) for s in steps]
        hi = [max(band[s]) for s in steps]
        ax.fill_between(steps, lo, hi, alpha=0.25, color="tab:gray",
                        label="sampled states")
    for label, triples in sorted(by_label.items()):
        triples.sort()
        steps = [t[0] for t in triples]
        ax.plot(steps, [t[1] for t in triples], marker="o", ms=3, label=label)
        ax.plot(steps, [t[2] for t in triples], ls=":", color=ax.lines[-1].get_color())
    ax.set_xlabel("step")
    ax.set_ylabel("fidelity vs m-fold Trotter")
    ax.legend(fontsize=7)


def _render_train(rows):
    fig, ax = plt.subplots(figsize=(6, 4))
    _training_panel(ax, rows)
    return fig


def _render_compare(rows):
    sets = []
    for row in rows:
        if row[0] not in sets:
            sets.append(row[0])
    fig, axes = plt.subplots(1, len(sets), figsize=(5 * len(sets), 4),
                             sharey=True, squeeze=False)
    for ax, training_set in zip(axes[0], sets):
        _training_panel(ax, [r[1:] for r in rows if r[0] == training_set])
        ax.set_title(training_set)
    return fig


def _render_surface(rows):
    thetas = sorted({r[0] for r in rows})
    phis = sorted({r[1] for r in rows})
    grid = np.full((len(thetas), len(phis)), np.nan)
    ti = {t: i for i, t in enumerate(thetas)}
    pi_ = {p: i for i, p in enumerate(phis)}
    for theta, phi, bound, _, _ in rows:
        grid[ti[theta], pi_[phi]] = bound
    fig, ax = plt.subplots(figsize=(6, 4.5))
    mesh = ax.pcolormesh(phis, thetas, grid, shading="nearest")
    fig.colorbar(mesh, ax=ax, label="fidelity floor")
    ax.set_xlabel("phi")
    ax.set_ylabel("theta")
    return fig


def _render_sweep(rows):
    fig, ax = plt.subplots(figsize=(6, 4))
    curves = defaultdict(list)
    for eps, _theta, phi, n_floors, bound, _, _ in rows:
        curves[(eps, n_floors)].append((phi, bound))
    epsilons = sorted({k[0] for k in curves})
    cmap = plt.get_cmap("viridis")
    for (eps, n_floors), pts in sorted(curves.items()):
        pts.sort()
        color = cmap(epsilons.index(eps) / max(len(epsilons) - 1, 1))
        ax.plot([p[0] for p in pts], [p[1] for p in pts], color=color,
                ls="-" if n_floors == 4 else "--",
                label=f"eps={eps:g}, {n_floors} floors")
    ax.set_xlabel("phi")
    ax.set_ylabel("fidelity floor")
    ax.legend(fontsize=6)
    return fig


def _render_entanglement(rows):
    fig, ax = plt.subplots(figsize=(6, 4))
    thetas = sorted({r[0] for r in rows})
    cmap = plt.get_cmap("viridis")
    for theta in thetas:
        track = sorted(r[1:] for r in rows if r[0] == theta)
        steps = [t[0] for t in track]
        color = cmap(theta / max(thetas[-1], 1e-12))
        ax.plot(steps, [t[1] for t in track], color=color, lw=1.2)
        ax.plot(steps, [t[2] for t in track], color=color, lw=0.8, ls="--")
        ax.plot(steps, [t[3] for t in track], color=color, lw=0.8, ls=":")
    ax.set_xlabel("step")
    ax.set_ylabel("concentratable entanglement")
    ax.set_title("solid: circuit, dashed: Trotter, dotted: exact "
                 f"(theta in [0, {math.pi:.3f}])", fontsize=8)
    return fig


def _render_warmstart(rows):
    (_, r, _, _, _, _, _, _, _, _, prop2, thm2, variance, ci, _), = rows
    fig, ax = plt.subplots(figsize=(5, 3.2))
    names = ["thm2 floor", "prop2 floor", "empirical"]
    values = [thm2, prop2, variance]
    ax.barh(names, values, xerr=[0, 0, ci], color=["tab:orange", "tab:red",
                                                   "tab:blue"])
    ax.set_xscale("log")
    ax.set_xlabel(f"cost variance over hypercube (r = {r:.4g})")
    return fig


_RENDERERS = {
    "train": _render_train,
    "compare-fewer": _render_compare,
    "bound-surface": _render_surface,
    "sweep": _render_sweep,
    "entanglement": _render_entanglement,
    "warmstart": _render_warmstart,
}
