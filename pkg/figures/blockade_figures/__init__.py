"""Render blockade CSV outputs into publication-style figures.

Consumes only the documented CSV schemas (``gamma,delta,g2_0`` grids and
``tau,g2,stderr`` curves) — never recomputes physics.
"""

from .io import SchemaError, read_curve, read_grid
from .render import FigureSpec, render_colormap, render_tau_curves

__version__ = "0.1.0"
