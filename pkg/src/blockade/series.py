"""Correlation series container and window measurement."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class CorrelationSeries:
    """g2 values on an ascending tau grid, with provenance metadata."""

    tau_grid: np.ndarray
    values: np.ndarray
    error_bars: np.ndarray | None = None
    source: str = "analytic"            # analytic | regression | wfmc
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        tau = np.asarray(self.tau_grid, dtype=float)
        val = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "tau_grid", tau)
        object.__setattr__(self, "values", val)
        if self.error_bars is not None:
            object.__setattr__(self, "error_bars", np.asarray(self.error_bars, dtype=float))
        if tau.ndim != 1 or val.shape != tau.shape:
            raise ValueError("tau_grid and values must be matching 1-d arrays")
        if len(tau) > 1 and not np.all(np.diff(tau) > 0):
            raise ValueError("tau_grid must be strictly ascending")
        if not np.all(np.isfinite(val)):
            raise ValueError("g2 values must be finite")
        if np.any(val < 0):
            raise ValueError("g2 values must be nonnegative")
        if self.source not in ("analytic", "regression", "wfmc"):
            raise ValueError(f"unknown source {self.source!r}")


def antibunching_window(series: CorrelationSeries, threshold: float = 0.5) -> float:
    """Full width of the contiguous g2 < threshold interval around tau = 0.

    g2(tau) of a stationary state is symmetric under tau -> -tau, so the
    window is twice the first upward crossing of the threshold, located by
    linear interpolation between grid points.  Returns 0 when g2(0) is already
    above threshold; raises if the series never crosses.
    """
    tau, g2 = series.tau_grid, series.values
    if g2[0] >= threshold:
        return 0.0
    above = np.nonzero(g2 >= threshold)[0]
    if len(above) == 0:
        raise ValueError("series never reaches the threshold; extend the tau grid")
    k = above[0]
    t0, t1 = tau[k - 1], tau[k]
    v0, v1 = g2[k - 1], g2[k]
    crossing = t0 + (threshold - v0) * (t1 - t0) / (v1 - v0)
    return 2.0 * crossing
