"""Map g2(0) over (detuning, loss) for the four-cavity ring.

Reproduces the colormap layout around the dark state: a bright pole flanked
by two deep blockade zeros.  Writes the CSV the figures package renders.
"""

from pathlib import Path

import numpy as np

from blockade import FourCavityParams, preset_llpb_four_cavity
from blockade.sweeps import refine_sweep_minimum, sweep_g2_zero

params = FourCavityParams(k=16.0, J=0.1227, J_prime=0.02454, alpha=0.001227)
net = preset_llpb_four_cavity(params)

deltas = np.linspace(-0.03, 0.03, 121)
gammas = np.linspace(0.9, 1.1, 81)
grid = sweep_g2_zero(net, deltas=deltas, gammas=gammas, engine="analytic")

d0, g0, v0 = grid.argmin()
print(f"grid minimum: g2(0) = {v0:.3e} at (Delta, gamma) = ({d0:+.4f}, {g0:.4f})")
dr, gr, vr = refine_sweep_minimum(net, grid)
print(f"polished:     g2(0) = {vr:.3e} at (Delta, gamma) = ({dr:+.7f}, {gr:.7f})")

out = Path("out")
out.mkdir(exist_ok=True)
lines = ["gamma,delta,g2_0"]
for gi, g in enumerate(grid.gamma_values):
    for di, d in enumerate(grid.delta_values):
        lines.append(f"{g:.17g},{d:.17g},{grid.g2_matrix[gi, di]:.17g}")
(out / "sweep.csv").write_text("\n".join(lines) + "\n")
print(f"\nwrote {out/'sweep.csv'} — render with:")
print("  python figures/render_colormap.py --in out/sweep.csv --out out/map.png")
