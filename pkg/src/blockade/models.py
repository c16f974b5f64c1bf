"""Cavity-network data model and canonical presets.

Sites are indexed from 0.  Rates in the abstract presets are dimensionless
(gamma-referenced); the photonic two-ring preset works in ueV.  Each network
carries a unit tag so downstream output can be labelled.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.constants as const
from scipy.optimize import fsolve


@dataclass(frozen=True)
class CavityNetwork:
    """Linear + nonlinear model of a driven, lossy coupled-cavity array."""

    n_sites: int
    couplings: np.ndarray          # real symmetric, zero diagonal
    detuning: np.ndarray           # per-site Delta_i
    loss: np.ndarray               # per-site gamma_i >= 0
    kerr: float = 0.0              # self-Kerr alpha
    cross_kerr_pairs: tuple = ()   # (i, j, alpha_x) triples
    drive_site: int = 0
    drive_amplitude: complex = 0.0
    signal_site: int = 0
    units: str = "dimensionless"

    def __post_init__(self):
        J = np.array(self.couplings, dtype=float)
        object.__setattr__(self, "couplings", J)
        object.__setattr__(self, "detuning", np.broadcast_to(
            np.asarray(self.detuning, dtype=float), (self.n_sites,)).copy())
        object.__setattr__(self, "loss", np.broadcast_to(
            np.asarray(self.loss, dtype=float), (self.n_sites,)).copy())
        if J.shape != (self.n_sites, self.n_sites):
            raise ValueError(f"coupling matrix shape {J.shape} != ({self.n_sites}, {self.n_sites})")
        if np.max(np.abs(J - J.T), initial=0.0) > 1e-12 * max(1.0, np.abs(J).max()):
            raise ValueError("coupling matrix must be symmetric")
        if np.any(np.abs(np.diag(J)) > 0):
            raise ValueError("coupling matrix must have zero diagonal")
        if np.any(self.loss < 0):
            raise ValueError("losses must be nonnegative")
        for idx, name in ((self.drive_site, "drive_site"), (self.signal_site, "signal_site")):
            if not 0 <= idx < self.n_sites:
                raise ValueError(f"{name} {idx} out of range")
        for (i, j, _ax) in self.cross_kerr_pairs:
            if not (0 <= i < self.n_sites and 0 <= j < self.n_sites and i != j):
                raise ValueError(f"invalid cross-Kerr pair ({i}, {j})")

    def complex_detunings(self) -> np.ndarray:
        """Per-site z_i = Delta_i - i gamma_i / 2."""
        return self.detuning - 0.5j * self.loss

    def with_operating_point(self, delta: float, gamma: float) -> "CavityNetwork":
        """Copy with uniform detuning and loss replaced."""
        return replace(self, detuning=np.full(self.n_sites, float(delta)),
                       loss=np.full(self.n_sites, float(gamma)))

    def model_hash(self) -> str:
        payload = {
            "couplings": np.round(self.couplings, 15).tolist(),
            "detuning": np.round(self.detuning, 15).tolist(),
            "loss": np.round(self.loss, 15).tolist(),
            "kerr": self.kerr,
            "cross_kerr_pairs": [list(p) for p in self.cross_kerr_pairs],
            "drive_site": self.drive_site,
            "drive_amplitude": [self.drive_amplitude.real, self.drive_amplitude.imag]
            if isinstance(self.drive_amplitude, complex) else [float(self.drive_amplitude), 0.0],
            "signal_site": self.signal_site,
            "units": self.units,
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class FourCavityParams:
    """Mirror-symmetric ring: J_12 = J'/k, J_14 = J_23 = J, J_34 = J'."""

    k: float
    J: float
    J_prime: float
    alpha: float
    delta: float = 0.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("k must be positive")
        if min(self.J, self.J_prime, self.alpha, self.gamma) < 0:
            raise ValueError("rates must be nonnegative")


@dataclass(frozen=True)
class PhotonicRingParams:
    """Two coupled microrings with CW/CCW modes (geometry in um, rates in ueV)."""

    R: float = 3.0
    w: float = 0.8
    t: float = 0.35
    n_core: float = 2.45
    n_clad: float = 1.44
    n2: float = 4.8e-6            # um^2/W
    wavelength: float = 1550.0    # nm
    gamma: float = 5.0
    gamma_in: float = 2.5
    gamma_out: float = 2.5
    J: float = 1.6
    J_prime: float = 0.2
    J_dprime: float = 0.02

    def __post_init__(self):
        if min(self.R, self.w, self.t, self.wavelength) <= 0:
            raise ValueError("geometric quantities must be positive")


def delta_min_conventional(alpha: float, gamma: float) -> float:
    """Detuning minimizing single-cavity g2(0): -(alpha - sqrt(alpha^2 + gamma^2))/2."""
    return -0.5 * (alpha - math.hypot(alpha, gamma))


def preset_conventional(alpha: float, delta: float, gamma: float, F_d: complex = 1e-5) -> CavityNetwork:
    """Single Kerr cavity, driven and measured at the same site."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    return CavityNetwork(
        n_sites=1,
        couplings=np.zeros((1, 1)),
        detuning=[delta],
        loss=[gamma],
        kerr=alpha,
        drive_site=0,
        drive_amplitude=complex(F_d),
        signal_site=0,
    )


@dataclass(frozen=True)
class UpbOperatingPoint:
    """Two-cavity UPB tuning: exact root of g2(0)=0 plus the asymptotic one."""

    J: float
    delta: float
    gamma: float
    J_asymptotic: float
    delta_asymptotic: float

    def z(self) -> complex:
        return self.delta - 0.5j * self.gamma


def _upb_asymptotic_point(alpha: float, gamma: float) -> tuple[float, float]:
    # z^3 = -alpha J^2 / 2 on the root with gamma = sqrt(3) Delta:
    # z = |z| e^{-i pi/3}, |z| = gamma / sqrt(3).
    mod = gamma / math.sqrt(3.0)
    J = math.sqrt(2.0 * mod**3 / alpha)
    return J, 0.5 * mod


def _upb_g2zero_amplitude(delta: float, J: float, gamma: float, alpha: float) -> complex:
    z = delta - 0.5j * gamma
    return 1.0 - 2.0 * alpha * (2 * z**4 - J**2 * z**2 + J**4) / (4 * z**3 * (z**2 - J**2))


def preset_upb_two_cavity(alpha: float, gamma: float, F_d: complex = 1e-5,
                          mode: str = "exact") -> tuple[CavityNetwork, UpbOperatingPoint]:
    """Two-cavity UPB network tuned so g2_11(0) vanishes.

    ``mode="exact"`` solves the full interference condition numerically
    (seeded from the closed-form root of z^3 = -alpha J^2/2); the asymptotic
    values are reported alongside either way.
    """
    if alpha <= 0 or gamma <= 0:
        raise ValueError("alpha and gamma must be positive")
    J_asym, delta_asym = _upb_asymptotic_point(alpha, gamma)
    if mode == "asymptotic":
        J, delta = J_asym, delta_asym
    elif mode == "exact":
        def residual(x):
            val = _upb_g2zero_amplitude(x[0], x[1], gamma, alpha)
            return [val.real, val.imag]

        sol, info, ok, msg = fsolve(residual, [delta_asym, J_asym], full_output=True)
        if ok != 1:
            raise RuntimeError(f"UPB operating-point solve failed: {msg}")
        delta, J = float(sol[0]), float(sol[1])
    else:
        raise ValueError(f"unknown mode {mode!r}")

    point = UpbOperatingPoint(J=J, delta=delta, gamma=gamma,
                              J_asymptotic=J_asym, delta_asymptotic=delta_asym)
    net = CavityNetwork(
        n_sites=2,
        couplings=[[0.0, J], [J, 0.0]],
        detuning=[delta, delta],
        loss=[gamma, gamma],
        kerr=alpha,
        drive_site=0,
        drive_amplitude=complex(F_d),
        signal_site=0,
    )
    return net, point


def preset_llpb_four_cavity(params: FourCavityParams, F_d: complex = 1e-5) -> CavityNetwork:
    """Four-cavity ring hosting a single-particle dark state at large loss.

    Ring topology J_12 = J'/k, J_23 = J_14 = J, J_34 = J'; drive site 0,
    signal site 1 (the paper's d=1, s=2 in 1-based labels).
    """
    if params.k == 0:
        raise ValueError("k must be nonzero")
    J12 = params.J_prime / params.k
    J = params.J
    Jp = params.J_prime
    couplings = np.array([
        [0.0, J12, 0.0, J],
        [J12, 0.0, J, 0.0],
        [0.0, J, 0.0, Jp],
        [J, 0.0, Jp, 0.0],
    ])
    return CavityNetwork(
        n_sites=4,
        couplings=couplings,
        detuning=np.full(4, params.delta),
        loss=np.full(4, params.gamma),
        kerr=params.alpha,
        drive_site=0,
        drive_amplitude=complex(F_d),
        signal_site=1,
    )


def preset_two_ring_photonic(params: PhotonicRingParams, F_d: complex = 1e-5,
                             cross_kerr: float | None = None) -> CavityNetwork:
    """Two-ring photonic realization (sites 0,1 = ring-1 CW/CCW; 2,3 = ring 2).

    Ring-1 modes carry the loaded loss gamma + gamma_in + gamma_out; ring-2
    modes carry the intrinsic gamma.  CW/CCW pairs are cross-Kerr coupled with
    coefficient 2*alpha (override via ``cross_kerr``).
    """
    alpha = estimate_kerr(params)
    ax = alpha if cross_kerr is None else cross_kerr
    loaded = params.gamma + params.gamma_in + params.gamma_out
    J, Jp, Jpp = params.J, params.J_prime, params.J_dprime
    couplings = np.array([
        [0.0, Jpp, 0.0, J],
        [Jpp, 0.0, J, 0.0],
        [0.0, J, 0.0, Jp],
        [J, 0.0, Jp, 0.0],
    ])
    return CavityNetwork(
        n_sites=4,
        couplings=couplings,
        detuning=np.zeros(4),
        loss=np.array([loaded, loaded, params.gamma, params.gamma]),
        kerr=alpha,
        cross_kerr_pairs=((0, 1, ax), (2, 3, ax)),
        drive_site=0,
        drive_amplitude=complex(F_d),
        signal_site=1,
        units="ueV",
    )


def mode_volume(params: PhotonicRingParams) -> float:
    """Microring mode volume V = 2 pi R w t in um^3."""
    v = 2.0 * math.pi * params.R * params.w * params.t
    if v == 0.0:
        raise ValueError("zero mode volume")
    return v


def estimate_kerr(params: PhotonicRingParams) -> float:
    """Kerr coefficient alpha = c hbar^2 w_c^2 n2 / (n^2 V), in ueV."""
    V = mode_volume(params) * 1e-18            # um^3 -> m^3
    n2 = params.n2 * 1e-12                     # um^2/W -> m^2/W
    omega_c = 2.0 * math.pi * const.c / (params.wavelength * 1e-9)
    alpha_joule = const.c * const.hbar**2 * omega_c**2 * n2 / (params.n_core**2 * V)
    return alpha_joule / (1e-6 * const.e)


PRESET_BUILDERS = {
    "conventional": lambda **kw: preset_conventional(
        alpha=kw.get("alpha", 10.0), delta=kw.get("delta", 0.02491),
        gamma=kw.get("gamma", 1.0), F_d=kw.get("F_d", 1e-5)),
    "upb": lambda **kw: preset_upb_two_cavity(
        alpha=kw.get("alpha", 0.001227), gamma=kw.get("gamma", 1.0),
        F_d=kw.get("F_d", 1e-5))[0],
    "llpb": lambda **kw: preset_llpb_four_cavity(FourCavityParams(
        k=kw.get("k", 16.0), J=kw.get("J", 0.1227),
        J_prime=kw.get("J_prime", 0.02454), alpha=kw.get("alpha", 0.001227),
        delta=kw.get("delta", 0.009571), gamma=kw.get("gamma", 1.0)),
        F_d=kw.get("F_d", 1e-5)),
    "llpb-k4": lambda **kw: preset_llpb_four_cavity(FourCavityParams(
        k=kw.get("k", 4.0), J=kw.get("J", 0.5386),
        J_prime=kw.get("J_prime", 0.5386), alpha=kw.get("alpha", 0.0194),
        delta=kw.get("delta", 0.0652), gamma=kw.get("gamma", 1.0)),
        F_d=kw.get("F_d", 1e-5)),
    "two-ring": lambda **kw: preset_two_ring_photonic(
        PhotonicRingParams(**{k: v for k, v in kw.items() if k != "F_d"}),
        F_d=kw.get("F_d", 1e-5)),
}


def build_preset(name: str, **overrides) -> CavityNetwork:
    """Construct a named preset; unknown names raise KeyError."""
    try:
        builder = PRESET_BUILDERS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; available: {sorted(PRESET_BUILDERS)}")
    return builder(**overrides)
