"""Colormap and tau-curve rendering (Agg backend, deterministic output)."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
from matplotlib.colors import LogNorm

from .io import read_curve, read_grid

DPI = 150


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: inputs, kind, cosmetics, destination."""

    inputs: tuple                      # CSV paths
    kind: str                          # "colormap" | "tau-curves"
    output: str
    labels: tuple = ()
    log_color: bool = True
    title: str = ""
    guide_level: float | None = None   # optional horizontal g2 guide line
    xlim: tuple | None = None
    ylim: tuple | None = None


def _save(fig, output):
    path = Path(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    if path.suffix.lower() not in (".png", ".svg"):
        raise ValueError(f"unsupported image format {path.suffix!r}; use .png or .svg")
    fig.savefig(path, dpi=DPI, metadata=_strip_metadata(path.suffix.lower()))
    plt.close(fig)
    return path


def _strip_metadata(suffix):
    # drop embedded timestamps so identical inputs give identical bytes
    if suffix == ".png":
        return {"Software": "blockade-figures"}
    return {"Date": None, "Creator": "blockade-figures"}


def render_colormap(spec: FigureSpec):
    """Heatmap of g2(0) over (delta, gamma) with the grid minimum marked."""
    grid = read_grid(spec.inputs[0])
    fig, ax = plt.subplots(figsize=(5.4, 4.0))
    values = grid.g2
    if spec.log_color:
        positive = values[values > 0]
        floor = positive.min() if positive.size else 1.0
        shown = np.maximum(values, floor)
        span = shown.max() / shown.min()
        norm = LogNorm(vmin=shown.min(), vmax=shown.max()) if span > 1 else None
    else:
        shown = values
        norm = None
    mesh = ax.pcolormesh(grid.delta, grid.gamma, shown, norm=norm,
                         cmap="viridis", shading="nearest", rasterized=True)
    gi, di = np.unravel_index(np.argmin(values), values.shape)
    ax.plot(grid.delta[di], grid.gamma[gi], "wx", markersize=9, markeredgewidth=2)
    ax.set_xlabel(r"detuning $\Delta$")
    ax.set_ylabel(r"loss rate $\gamma$")
    if spec.title:
        ax.set_title(spec.title)
    fig.colorbar(mesh, ax=ax, label=r"$g^{(2)}(0)$")
    fig.tight_layout()
    return _save(fig, spec.output)


def render_tau_curves(spec: FigureSpec):
    """Overlaid g2(tau) curves with optional error bands and a guide line."""
    labels = spec.labels or tuple(Path(p).stem for p in spec.inputs)
    curves = [read_curve(p, label=lab) for p, lab in zip(spec.inputs, labels)]
    fig, ax = plt.subplots(figsize=(5.4, 3.6))
    for curve in curves:
        (line,) = ax.plot(curve.tau, curve.g2, label=curve.label, linewidth=1.4)
        if curve.stderr is not None:
            ax.fill_between(curve.tau, curve.g2 - curve.stderr, curve.g2 + curve.stderr,
                            color=line.get_color(), alpha=0.25, linewidth=0)
    if spec.guide_level is not None:
        ax.axhline(spec.guide_level, color="0.4", linestyle=":", linewidth=1.0)
    ax.set_xlabel(r"delay $\tau$")
    ax.set_ylabel(r"$g^{(2)}(\tau)$")
    if spec.xlim:
        ax.set_xlim(*spec.xlim)
    if spec.ylim:
        ax.set_ylim(*spec.ylim)
    if spec.title:
        ax.set_title(spec.title)
    if len(curves) > 1:
        ax.legend(frameon=False, fontsize=9)
    fig.tight_layout()
    return _save(fig, spec.output)
