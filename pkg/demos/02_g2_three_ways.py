"""Compute g2(tau) for the strong-Kerr cavity three independent ways.

The closed form is exact for one cavity; quantum regression evolves the
collapsed steady state under the full Lindblad generator; wavefunction Monte
Carlo samples trajectories.  All three should lie on top of each other.
"""

import numpy as np

from blockade import (
    FockConfig,
    TrajectoryConfig,
    build_lindblad_problem,
    ensemble_g2,
    g2_conventional_closed,
    preset_conventional,
    regression_g2,
)

alpha, delta, gamma = 10.0, 0.02491, 1.0
tau = np.linspace(0.0, 10.0, 41)

closed = g2_conventional_closed(alpha, delta, gamma, tau)

net = preset_conventional(alpha, delta, gamma, F_d=0.01)
problem = build_lindblad_problem(net, FockConfig([6]))
regression = regression_g2(problem, tau_grid=tau)

wfmc_net = preset_conventional(alpha, delta, gamma, F_d=1e-5)
config = TrajectoryConfig(fock=FockConfig([5]), beta=0.1, n_traj=10,
                          t_relax=100.0, t_record=1000.0, seed=2024)
wfmc = ensemble_g2(wfmc_net, config=config, tau_grid=tau).series

print(" tau     closed     regression  wfmc")
for k in range(0, len(tau), 4):
    print(f"{tau[k]:5.2f}  {closed.values[k]:.6f}   {regression.values[k]:.6f}   "
          f"{wfmc.values[k]:.6f}")

print(f"\nsup |regression - closed| = {np.max(np.abs(regression.values - closed.values)):.2e}")
print(f"sup |wfmc - closed|       = {np.max(np.abs(wfmc.values - closed.values)):.2e}")
print(f"g2(0): exact {(delta**2 + gamma**2/4) / ((delta + alpha)**2 + gamma**2/4):.6f}")
