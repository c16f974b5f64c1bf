"""CSV readers for the simulator's documented output schemas."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


class SchemaError(ValueError):
    """Input file does not match the documented CSV schema."""


def _rows(path):
    with open(path, newline="") as fh:
        reader = csv.reader(line for line in fh if not line.startswith("#"))
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file")
        yield [h.strip() for h in header]
        for row in reader:
            if row:
                yield row


@dataclass(frozen=True)
class Grid:
    gamma: np.ndarray      # ascending axis values
    delta: np.ndarray
    g2: np.ndarray         # shape (len(gamma), len(delta))


@dataclass(frozen=True)
class Curve:
    tau: np.ndarray
    g2: np.ndarray
    stderr: np.ndarray | None
    label: str = ""


def read_grid(path) -> Grid:
    """Read a ``gamma,delta,g2_0`` long-format sweep file into a dense grid."""
    rows = _rows(path)
    header = next(rows)
    for col in ("gamma", "delta", "g2_0"):
        if col not in header:
            raise SchemaError(f"{path}: missing column '{col}' (header {header})")
    gi, di, vi = header.index("gamma"), header.index("delta"), header.index("g2_0")
    data = [(float(r[gi]), float(r[di]), float(r[vi])) for r in rows]
    if not data:
        raise SchemaError(f"{path}: no data rows")
    gammas = np.unique([r[0] for r in data])
    deltas = np.unique([r[1] for r in data])
    grid = np.full((len(gammas), len(deltas)), np.nan)
    glook = {g: k for k, g in enumerate(gammas)}
    dlook = {d: k for k, d in enumerate(deltas)}
    for g, d, v in data:
        grid[glook[g], dlook[d]] = v
    if np.any(np.isnan(grid)):
        raise SchemaError(f"{path}: grid is not complete over gamma x delta")
    return Grid(gamma=gammas, delta=deltas, g2=grid)


def read_curve(path, label: str = "") -> Curve:
    """Read a ``tau,g2[,stderr]`` curve file; stderr cells may be empty."""
    rows = _rows(path)
    header = next(rows)
    for col in ("tau", "g2"):
        if col not in header:
            raise SchemaError(f"{path}: missing column '{col}' (header {header})")
    ti, vi = header.index("tau"), header.index("g2")
    ei = header.index("stderr") if "stderr" in header else None
    tau, g2, err = [], [], []
    for r in rows:
        tau.append(float(r[ti]))
        g2.append(float(r[vi]))
        if ei is not None and len(r) > ei and r[ei].strip() != "":
            err.append(float(r[ei]))
    stderr = np.asarray(err) if err and len(err) == len(tau) else None
    return Curve(tau=np.asarray(tau), g2=np.asarray(g2), stderr=stderr, label=label)
