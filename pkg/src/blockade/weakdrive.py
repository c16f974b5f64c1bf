"""Weak-drive perturbative engine: steady states and delayed correlations.

Everything here is first order in the Kerr strength and valid for drives weak
enough that at most two photons populate the network.  The central object is

    g2_ij(tau) = |1 - 2 alpha e^{-i z tau} sum_k (G_kd^2 / (G_id G_jd))
                     <i,j| G2(tau) |k,k>|^2

built from the eigenmodes of the linear network.  Closed forms for the
single-cavity (any alpha), two-cavity UPB, and four-cavity long-lived
blockade cases are provided alongside as independent cross-checks.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .models import CavityNetwork, FourCavityParams, UpbOperatingPoint
from .series import CorrelationSeries
from .spectral import ModeDecomposition, decompose_network, fss_zeros


class SpdsDivergenceError(ZeroDivisionError):
    """The operating z sits on an exact SPDS: G_sd = 0 and g2 diverges."""


@dataclass(frozen=True)
class WeakDriveSteadyState:
    """Perturbative steady state: one- and two-photon amplitudes.

    ``two_photon`` is the symmetric matrix Psi with |psi(2)> = sum_ij Psi_ij
    |i> x |j| in the distinguishable product basis; the Fock amplitude on
    |1_i 1_j> (i < j) is sqrt(2) Psi_ij and on |2_i> it is Psi_ii.
    """

    one_photon: np.ndarray
    two_photon: np.ndarray
    occupations: np.ndarray

    def pair_amplitude(self, i: int, j: int) -> complex:
        if i == j:
            return complex(self.two_photon[i, i])
        return complex(np.sqrt(2.0) * self.two_photon[min(i, j), max(i, j)])


def _series_metadata(network: CavityNetwork, alpha: float, **extra) -> dict:
    md = {
        "model_hash": network.model_hash(),
        "alpha": alpha,
        "drive_site": network.drive_site,
        "signal_site": network.signal_site,
        "units": network.units,
    }
    md.update(extra)
    return md


def steady_state_weak_drive(network: CavityNetwork, alpha: float | None = None) -> WeakDriveSteadyState:
    """Steady state of the dissipative Schrodinger equation, weak drive.

    psi(1) = -F_d G |d>; psi(2) is the symmetrized product plus the first-order
    Kerr correction -sqrt(2) alpha F^2 sum_k G_kd^2 G2 |k,k> mapped to the
    product basis; occupations are |F G_id|^2.
    """
    alpha = network.kerr if alpha is None else alpha
    if np.any(network.loss <= 0):
        raise ValueError("steady state needs positive loss on every site")
    modes = decompose_network(network)
    lam, V = modes.lambdas, modes.vectors
    d = network.drive_site
    F = complex(network.drive_amplitude)

    G = (V / lam[None, :]) @ V.T
    psi1 = -F * G[:, d]

    denom = lam[:, None] + lam[None, :]
    Gkd2 = G[:, d] ** 2
    # product-basis matrix of sum_k G_kd^2 G2 |k,k>
    core = (V.T @ np.diag(Gkd2) @ V) / denom
    correction = V @ core @ V.T
    psi2 = np.outer(psi1, psi1) / np.sqrt(2.0) - np.sqrt(2.0) * alpha * F**2 * correction
    return WeakDriveSteadyState(
        one_photon=psi1,
        two_photon=psi2,
        occupations=np.abs(F * G[:, d]) ** 2,
    )


def _g2_pair_values(modes: ModeDecomposition, alpha: float, tau: np.ndarray,
                    d: int, i: int, j: int) -> np.ndarray:
    """|1 - 2 alpha e^{-i z tau} sum ...|^2 for a site pair (i, j)."""
    lam, V, z_ref, eps = modes.lambdas, modes.vectors, modes.z_ref, modes.eps
    G = (V / lam[None, :]) @ V.T
    Gid, Gjd = G[i, d], G[j, d]
    scale = np.max(np.abs(G))
    if min(abs(Gid), abs(Gjd)) < 1e-12 * scale:
        raise SpdsDivergenceError(
            f"G_{i}{d} or G_{j}{d} vanishes at the operating point (exact SPDS)")
    denom = lam[:, None] + lam[None, :]
    W = (V.T @ np.diag(G[:, d] ** 2) @ V) / denom       # (m, n)
    phases = np.exp(-1j * np.outer(tau, eps))           # (T, n)
    amp_i = V[i, :]
    amp_j = V[j, :]
    # sum_mn amp_i[m] W[m,n] amp_j[n] e^{-i eps_n tau}
    row = amp_i @ W                                      # (n,)
    inner = phases @ (row * amp_j)                       # (T,)
    pref = np.exp(-1j * z_ref * tau)
    return np.abs(1.0 - 2.0 * alpha * pref * inner / (Gid * Gjd)) ** 2


def g2_tau_analytic(network: CavityNetwork, alpha: float | None = None,
                    tau_grid=None, sites: tuple[int, int] | None = None) -> CorrelationSeries:
    """Delayed second-order correlation from the perturbative engine.

    Defaults to the signal-site self-correlation; pass ``sites=(i, j)`` for
    the general cross-correlation.  Only the self-Kerr term enters at this
    order; cross-Kerr pairs on the network are ignored here.
    """
    alpha = network.kerr if alpha is None else alpha
    if np.any(network.loss <= 0):
        raise ValueError("g2 needs positive loss on every site")
    tau = np.atleast_1d(np.asarray(tau_grid, dtype=float))
    s = network.signal_site
    i, j = sites if sites is not None else (s, s)
    modes = decompose_network(network)
    vals = _g2_pair_values(modes, alpha, tau, network.drive_site, i, j)
    # modulus-squared structure: clip float jitter at the exact zeros
    vals = np.maximum(vals, 0.0)
    return CorrelationSeries(
        tau_grid=tau, values=vals, error_bars=None, source="analytic",
        metadata=_series_metadata(network, alpha, sites=(i, j)),
    )


def g2_conventional_closed(alpha: float, delta: float, gamma: float,
                           tau_grid) -> CorrelationSeries:
    """Exact single-cavity g2(tau) = |1 - (alpha/(alpha+z)) e^{-i z tau}|^2."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    tau = np.atleast_1d(np.asarray(tau_grid, dtype=float))
    z = delta - 0.5j * gamma
    vals = np.abs(1.0 - (alpha / (alpha + z)) * np.exp(-1j * z * tau)) ** 2
    return CorrelationSeries(
        tau_grid=tau, values=vals, source="analytic",
        metadata={"closed_form": "conventional", "alpha": alpha, "delta": delta, "gamma": gamma},
    )


def g2_upb_closed(alpha: float, gamma: float, tau_grid,
                  point: UpbOperatingPoint | None = None) -> CorrelationSeries:
    """Two-cavity UPB closed form (1 - e^{-gamma tau/2} cos(Delta tau) cos(J tau))^2.

    Evaluated at the UPB operating point (solved from alpha, gamma when not
    supplied).  Valid for alpha much below gamma; warns otherwise.
    """
    from .models import preset_upb_two_cavity

    if alpha >= 0.1 * gamma:
        warnings.warn("UPB closed form assumes alpha << gamma", stacklevel=2)
    if point is None:
        _, point = preset_upb_two_cavity(alpha, gamma)
    tau = np.atleast_1d(np.asarray(tau_grid, dtype=float))
    vals = (1.0 - np.exp(-0.5 * gamma * tau) * np.cos(point.delta * tau) * np.cos(point.J * tau)) ** 2
    return CorrelationSeries(
        tau_grid=tau, values=vals, source="analytic",
        metadata={"closed_form": "upb", "alpha": alpha, "gamma": gamma,
                  "J": point.J, "delta": point.delta},
    )


def _llpb_oscillation_sum(params: FourCavityParams, tau: np.ndarray) -> np.ndarray:
    """Cosine/sine sum S(tau) of the four-cavity blockade expansion.

    S(0) = 1 encodes the zero condition; the slow J-oscillations and the
    linear-in-tau envelopes carry the long-lived window.
    """
    k, J, Jp = params.k, params.J, params.J_prime
    r2 = (Jp / J) ** 2
    c1 = 16.0 * J * (3.0 * k + 10.0) * tau + 304.0 / np.sqrt(k) - 3.0 * (Jp**2 / J) * k**2 * tau
    c2 = 48.0 - 16.0 * k + (Jp**2 / J) * k**1.5 * tau + r2 * k**2
    return (np.sqrt(k) / 304.0) * (np.cos(J * tau) * c1 + 3.0 * np.sin(J * tau) * c2)


def g2_llpb_closed(params: FourCavityParams, tau_grid) -> CorrelationSeries:
    """Four-cavity long-lived blockade closed form |1 - e^{-i z tau} S(tau)|^2.

    z = z0 + delta z with z0 the SPDS pole and delta z the closed-form offset
    (gamma evaluated self-consistently at the zero).  Valid for J' well below
    J; warns otherwise.
    """
    if params.J_prime > 0.5 * params.J:
        warnings.warn("LLPB closed form assumes J' << J", stacklevel=2)
    from .models import preset_llpb_four_cavity

    net = preset_llpb_four_cavity(params)
    roots = fss_zeros(net, params.alpha, refine=False)
    z = roots.zeros_closed[0]
    tau = np.atleast_1d(np.asarray(tau_grid, dtype=float))
    S = _llpb_oscillation_sum(params, tau)
    vals = np.abs(1.0 - np.exp(-1j * z * tau) * S) ** 2
    return CorrelationSeries(
        tau_grid=tau, values=vals, source="analytic",
        metadata={"closed_form": "llpb", "z": [z.real, z.imag],
                  "k": params.k, "J": params.J, "J_prime": params.J_prime,
                  "alpha": params.alpha},
    )


def short_time_exponent(series: CorrelationSeries, fit_window: tuple[float, float],
                        rate_scale: float = 1.0) -> tuple[float, float]:
    """Log-log power-law fit g2 ~ C (rate_scale * tau)^p over a tau window.

    Returns (p, C) from least squares on the grid points inside the window;
    needs at least 5 points, all with positive g2.
    """
    lo, hi = fit_window
    mask = (series.tau_grid >= lo) & (series.tau_grid <= hi)
    if np.count_nonzero(mask) < 5:
        raise ValueError("fit window contains fewer than 5 grid points")
    tau = series.tau_grid[mask]
    val = series.values[mask]
    if np.any(val <= 0):
        raise ValueError("g2 must be positive on the fit window")
    x = np.log(rate_scale * tau)
    y = np.log(val)
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(np.exp(intercept))
