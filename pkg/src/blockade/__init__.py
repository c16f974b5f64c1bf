"""Photon blockade in weakly nonlinear coupled-cavity networks.

Three independent routes to g2(tau) — perturbative Green's-function
analytics, Lindblad master equation with quantum regression, and wavefunction
Monte Carlo — plus the spectral machinery that locates single-particle dark
states and long-lived blockade operating points.
"""

from .hilbert import (
    FockConfig,
    FockBasis,
    OperatorMatrix,
    QuantumState,
    DensityMatrix,
    build_space,
    annihilation,
    creation,
    number_op,
    assemble_hamiltonian,
)
from .models import (
    CavityNetwork,
    FourCavityParams,
    PhotonicRingParams,
    UpbOperatingPoint,
    preset_conventional,
    preset_upb_two_cavity,
    preset_llpb_four_cavity,
    preset_two_ring_photonic,
    estimate_kerr,
    delta_min_conventional,
    build_preset,
)
from .spectral import (
    SpectralData,
    GreenEvaluation,
    SpdsRoot,
    FssZeros,
    eigendecompose,
    green_single,
    green_two_photon,
    dyson_spds_estimate,
    find_spds_zero,
    fss_zeros,
    fss_values,
)
from .series import CorrelationSeries, antibunching_window
from .weakdrive import (
    WeakDriveSteadyState,
    steady_state_weak_drive,
    g2_tau_analytic,
    g2_conventional_closed,
    g2_upb_closed,
    g2_llpb_closed,
    short_time_exponent,
)
from .lindblad import LindbladProblem, build_lindblad_problem, lindblad_rhs, steady_state, regression_g2
from .trajectories import (
    TrajectoryConfig,
    EnsembleResult,
    unravel_transform,
    run_trajectory,
    ensemble_g2,
    occupation_sweep,
)
from .sweeps import SweepGrid, sweep_g2_zero

__version__ = "0.1.0"
