"""Spectral analytics for the linear network: Green's functions and SPDS roots.

The single-particle Green's function is G(z) = (z I + [J])^{-1}, expanded over
the eigenmodes of the real symmetric coupling matrix [J].  A single-particle
dark state (SPDS) is a complex detuning z at which the signal-to-drive element
G_sd(z) vanishes; long-lived blockade needs such a zero at -Im z much larger
than every coupling.  Newton refinement and the Dyson-series seed estimates for
2-4 cavities live here, together with the f_ss(z) pole/zero bookkeeping that
locates the blockade operating points.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

POLE_GUARD = 1e-12


class PoleProximityError(ValueError):
    """Requested z is (numerically) on top of a resolvent pole."""


class RootFindingError(RuntimeError):
    """Newton iteration failed to converge or the derivative underflowed."""


@dataclass(frozen=True)
class SpectralData:
    """Eigenvalues (ascending) and orthonormal eigenvectors of [J_ij]."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns are modes

    @property
    def n_sites(self) -> int:
        return len(self.eigenvalues)


@dataclass(frozen=True)
class GreenEvaluation:
    """G(z) = sum_n |phi_n><phi_n| / (z + eps_n)."""

    z: complex
    matrix: np.ndarray


@dataclass(frozen=True)
class SpdsRoot:
    """A candidate or refined zero of G_sd(z)."""

    z_star: complex
    residual: float
    method: str                    # "dyson-estimate" | "newton-refined"
    loss_compatible: bool = True   # Im z < 0, i.e. realizable with loss


def eigendecompose(couplings: np.ndarray) -> SpectralData:
    """Eigendecompose a real symmetric coupling matrix.

    Eigenvalues ascend; each eigenvector's first component above 1e-12 of its
    norm is made positive, which fixes the sign convention deterministically.
    """
    J = np.asarray(couplings, dtype=float)
    if J.ndim != 2 or J.shape[0] != J.shape[1]:
        raise ValueError("coupling matrix must be square")
    if np.max(np.abs(J - J.T), initial=0.0) > 1e-12 * max(1.0, np.abs(J).max()):
        raise ValueError("coupling matrix must be symmetric to 1e-12")
    eps, phi = np.linalg.eigh(J)
    for n in range(phi.shape[1]):
        col = phi[:, n]
        nz = np.nonzero(np.abs(col) > 1e-12)[0]
        if len(nz) and col[nz[0]] < 0:
            phi[:, n] = -col
    return SpectralData(eigenvalues=eps, eigenvectors=phi)


def green_single(z: complex, spectral: SpectralData) -> GreenEvaluation:
    """Single-particle Green's function at complex detuning z."""
    denom = z + spectral.eigenvalues
    if np.min(np.abs(denom)) < POLE_GUARD:
        raise PoleProximityError(f"z = {z} within {POLE_GUARD} of a pole")
    phi = spectral.eigenvectors
    G = (phi / denom[None, :]) @ phi.T
    return GreenEvaluation(z=z, matrix=G.astype(complex))


def green_two_photon(z: complex, spectral: SpectralData, tau: float = 0.0) -> np.ndarray:
    """Two-photon Green's function on the product basis, optionally delayed.

    Element (i*n+j, k*n+l) is
    sum_mn <i|phi_m><j|phi_n> e^{-i eps_n tau} <phi_m|k><phi_n|l> / (2z + eps_m + eps_n).
    """
    eps = spectral.eigenvalues
    denom = 2.0 * z + eps[:, None] + eps[None, :]
    if np.min(np.abs(denom)) < POLE_GUARD:
        raise PoleProximityError(f"2z = {2*z} within {POLE_GUARD} of a two-photon pole")
    phi = spectral.eigenvectors
    core = np.exp(-1j * eps[None, :] * tau) / denom
    n = len(eps)
    pair = np.einsum("im,jn,mn,km,ln->ijkl", phi, phi, core, phi, phi, optimize=True)
    return pair.reshape(n * n, n * n)


# ---------------------------------------------------------------------------
# General (per-site z) mode decomposition: complex-orthogonal eigenbasis.
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModeDecomposition:
    """Eigenbasis of the single-photon Hamiltonian [J] + diag(z_i).

    For uniform z this is the real eigenbasis of [J] with lambda_n = z + eps_n.
    For site-dependent z_i the matrix is complex symmetric and the eigenvectors
    are complex-orthogonal (V^T V = I); every Green's-function formula carries
    over with transposes in place of conjugates.
    """

    lambdas: np.ndarray      # single-photon eigenvalues z_ref + eps_n
    vectors: np.ndarray      # columns, V^T V = I
    z_ref: complex           # reference detuning factored out of phases
    eps: np.ndarray          # lambdas - z_ref

    @property
    def n_sites(self) -> int:
        return len(self.lambdas)


def decompose_network(network) -> ModeDecomposition:
    """Mode decomposition of a CavityNetwork's single-photon Hamiltonian."""
    z = network.complex_detunings()
    J = np.asarray(network.couplings, dtype=float)
    z_ref = complex(np.mean(z))
    C = J + np.diag(z - z_ref)
    if np.max(np.abs(C.imag), initial=0.0) <= 1e-14 * max(1.0, np.abs(C).max()):
        spec = eigendecompose(C.real)
        eps = spec.eigenvalues.astype(complex)
        V = spec.eigenvectors.astype(complex)
    else:
        eps, V = np.linalg.eig(C)
        order = np.argsort(eps.real + 1e-9 * eps.imag)
        eps, V = eps[order], V[:, order]
        # complex-orthogonal normalization v^T v = 1 (needs non-defective C)
        norms = np.einsum("ij,ij->j", V, V)
        if np.min(np.abs(norms)) < 1e-10:
            raise RootFindingError("defective single-photon Hamiltonian; cannot normalize modes")
        V = V / np.sqrt(norms)[None, :]
        resid = np.max(np.abs(V.T @ V - np.eye(len(eps))))
        if resid > 1e-8:
            raise RootFindingError(f"complex-orthogonality residual {resid:.2e} too large")
    return ModeDecomposition(lambdas=z_ref + eps, vectors=V, z_ref=z_ref, eps=eps)


# ---------------------------------------------------------------------------
# f_ss evaluation: the normalized amplitude whose zeros mark g2(0) = 0.
# ---------------------------------------------------------------------------

def fss_values(couplings: np.ndarray, alpha: float, z: np.ndarray,
               drive: int, signal: int) -> np.ndarray:
    """f_ss(z) = 1 - 2 alpha sum_k (G_kd^2 / G_sd^2) G2_sskk(0), vectorized in z.

    Uses the exact eigenmode sums of the coupling matrix with a uniform
    complex detuning z (the natural variable of the SPDS analysis).
    """
    spec = eigendecompose(couplings)
    eps, phi = spec.eigenvalues, spec.eigenvectors
    zz = np.atleast_1d(np.asarray(z, dtype=complex))

    inv1 = 1.0 / (zz[:, None] + eps[None, :])                      # (Z, n)
    Gkd = np.einsum("kn,n,zn->zk", phi, phi[drive], inv1)          # (Z, k)
    Gsd = Gkd[:, signal]
    inv2 = 1.0 / (2.0 * zz[:, None, None] + eps[None, :, None] + eps[None, None, :])
    W = np.einsum("zk,km,kn->zmn", Gkd**2, phi, phi)
    S = np.einsum("m,n,zmn,zmn->z", phi[signal], phi[signal], W, inv2)
    out = 1.0 - 2.0 * alpha * S / Gsd**2
    return out if np.ndim(z) else out[0]


def g2_zero_equal_time(couplings: np.ndarray, alpha: float, z: np.ndarray,
                       drive: int, signal: int) -> np.ndarray:
    """Equal-time g2_ss(0) = |f_ss(z)|^2 over an array of complex detunings."""
    return np.abs(fss_values(couplings, alpha, z, drive, signal)) ** 2


# ---------------------------------------------------------------------------
# Newton refinement with numeric derivative and deflation.
# ---------------------------------------------------------------------------

def newton_zero(func, guess: complex, deflate_at=(), tol: float = 1e-10,
                max_iter: int = 100) -> complex:
    """Newton iteration on a meromorphic scalar function of z.

    The derivative is a central difference with step 1e-6 * max(1, |z|);
    previously found roots in ``deflate_at`` are divided out so repeated
    searches land on fresh zeros.
    """
    roots = tuple(deflate_at)

    def f(z):
        val = func(z)
        for r in roots:
            val = val / (z - r)
        return val

    z = complex(guess)
    for _ in range(max_iter):
        fz = f(z)
        if abs(func(z)) < tol:
            return z
        h = 1e-6 * max(1.0, abs(z))
        df = (f(z + h) - f(z - h)) / (2.0 * h)
        if abs(df) < 1e-300:
            raise RootFindingError(f"derivative underflow at z = {z}")
        step = fz / df
        z = z - step
        if abs(step) < 1e-15 * max(1.0, abs(z)):
            break
    if abs(func(z)) < tol:
        return z
    raise RootFindingError(
        f"Newton failed from {guess}: residual {abs(func(z)):.3e} after {max_iter} iterations")


def find_spds_zero(network, guess: complex, tol: float = 1e-10) -> SpdsRoot:
    """Refine a zero of G_sd(z) by Newton iteration from the given seed."""
    spec = eigendecompose(network.couplings)
    d, s = network.drive_site, network.signal_site

    def gsd(z):
        return green_single(z, spec).matrix[s, d]

    z_star = newton_zero(gsd, guess, tol=tol)
    return SpdsRoot(z_star=z_star, residual=abs(gsd(z_star)), method="newton-refined",
                    loss_compatible=bool(z_star.imag < -1e-12))


def dyson_spds_estimate(network) -> list[SpdsRoot]:
    """Closed-form SPDS candidates from the truncated Dyson series (to 1/z^4).

    Supported: 2 cavities (z = +/- i J_ds), 3 cavities (fully general
    couplings, drive != signal), and the 4-cavity ring.  Each candidate is
    flagged loss-compatible when Im z < 0.  Unsupported topologies raise
    ValueError; the numeric Newton path still works for them.
    """
    n = network.n_sites
    d, s = network.drive_site, network.signal_site
    if d == s:
        raise ValueError("Dyson SPDS estimates need drive != signal")
    J = np.asarray(network.couplings, dtype=float)

    def mk(z):
        return SpdsRoot(z_star=complex(z), residual=float("nan"),
                        method="dyson-estimate", loss_compatible=bool(z.imag < -1e-12))

    if n == 2:
        j = J[d, s]
        return [mk(-1j * j), mk(1j * j)]
    if n == 3:
        (m,) = [i for i in range(3) if i not in (d, s)]
        if J[d, s] == 0.0:
            raise ValueError("three-cavity estimate needs a direct drive-signal coupling")
        # Lowest two orders of the hopping expansion: the direct path against
        # the one-bounce path through the third cavity.  Purely real, hence
        # never loss-compatible.
        z = -J[d, m] * J[m, s] / J[d, s]
        return [mk(z)]
    if n == 4:
        rad = np.sqrt(complex(sum(_ring_couplings(network)[key]**2 for key in ("J12", "J41", "J23"))
                              + _ring_crude_radicand(network)))
        return [mk(-1j * rad), mk(1j * rad)]
    raise ValueError(f"no closed-form Dyson estimate for n={n}, (d, s)=({d}, {s})")


def _ring_couplings(network) -> dict:
    """Identify the four ring couplings relative to (drive, signal)."""
    J = np.asarray(network.couplings, dtype=float)
    a, b = network.drive_site, network.signal_site
    if network.n_sites != 4 or a == b:
        raise ValueError("ring identification needs 4 sites and drive != signal")
    if J[a, b] == 0.0:
        raise ValueError("ring estimate needs a direct drive-signal coupling")
    m, p = [i for i in range(4) if i not in (a, b)]
    if J[a, m] != 0.0 and J[b, p] != 0.0 and J[a, p] == 0.0 and J[b, m] == 0.0:
        pass
    elif J[a, p] != 0.0 and J[b, m] != 0.0 and J[a, m] == 0.0 and J[b, p] == 0.0:
        m, p = p, m
    else:
        raise ValueError("unsupported four-cavity topology (not a drive-signal ring)")
    return {"J12": J[a, b], "J41": J[a, m], "J23": J[b, p], "J34": J[m, p]}


def _ring_crude_radicand(network) -> float:
    c = _ring_couplings(network)
    return c["J41"] * c["J23"] * c["J34"] / c["J12"]


def ring_crude_pole(network) -> complex:
    """Leading SPDS approximation z0 = -i sqrt(J41 J23 J34 / J12).

    Equals -i sqrt(k) J for the mirror-symmetric preset.
    """
    return -1j * np.sqrt(_ring_crude_radicand(network))


def crude_llpb_pole(params) -> complex:
    """Leading approximation z0 = -i sqrt(k) J for the mirror-symmetric ring."""
    return -1j * np.sqrt(params.k) * params.J


@dataclass(frozen=True)
class FssZeros:
    """Pole and zero pair of f_ss near an SPDS, closed-form and refined."""

    pole: complex
    delta_z_closed: complex            # + branch of the closed form
    zeros_closed: tuple[complex, complex]
    zeros_refined: tuple[complex, complex]
    residuals: tuple[float, float]

    def operating_points(self):
        """(delta, gamma) pairs of the refined zeros, largest gamma first."""
        pts = [(z.real, -2.0 * z.imag) for z in self.zeros_refined]
        return sorted(pts, key=lambda p: -p[1])


def closed_form_delta_z(alpha: float, gamma: float) -> complex:
    """delta z = (sqrt(38)/16) sqrt(alpha gamma) e^{-i pi/4} (+ branch)."""
    return (np.sqrt(38.0) / 16.0) * np.sqrt(alpha * gamma) * np.exp(-0.25j * np.pi)


def fss_zeros(network, alpha: float | None = None, refine: bool = True) -> FssZeros:
    """Locate the f_ss pole (SPDS) and its flanking zero pair.

    The closed form evaluates delta z = +/-(sqrt(38)/16) sqrt(alpha gamma)
    e^{-i pi/4} with gamma taken self-consistently at the zero (fixed-point
    iteration on gamma = -2 Im(z0 + delta z)); the refined pair comes from
    Newton iteration on the exact f_ss numerator seeded by the closed form.
    """
    alpha = network.kerr if alpha is None else alpha
    if alpha == 0.0:
        raise ValueError("alpha = 0: f_ss zeros coincide with the pole (degenerate)")
    d, s = network.drive_site, network.signal_site

    # SPDS pole: refined zero of G_sd seeded from the Dyson estimate.
    seeds = [r for r in dyson_spds_estimate(network) if r.loss_compatible]
    if not seeds:
        raise RootFindingError("no loss-compatible Dyson seed for the SPDS pole")
    pole = find_spds_zero(network, seeds[0].z_star).z_star

    # Closed form, anchored like the leading-order analysis at z0 = -i sqrt(k) J
    # with gamma taken self-consistently at the emergent zero.
    try:
        anchor = ring_crude_pole(network)
    except ValueError:
        anchor = pole
    gamma = -2.0 * anchor.imag
    for _ in range(100):
        dz = closed_form_delta_z(alpha, gamma)
        gamma_new = -2.0 * (anchor + dz).imag
        if abs(gamma_new - gamma) < 1e-14:
            gamma = gamma_new
            break
        gamma = gamma_new
    dz = closed_form_delta_z(alpha, gamma)
    zeros_closed = (anchor + dz, anchor - dz)

    if not refine:
        return FssZeros(pole=pole, delta_z_closed=dz, zeros_closed=zeros_closed,
                        zeros_refined=zeros_closed, residuals=(float("nan"),) * 2)

    def f(z):
        return fss_values(network.couplings, alpha, z, d, s)

    z_plus = newton_zero(f, zeros_closed[0])
    z_minus = newton_zero(f, zeros_closed[1], deflate_at=(z_plus,))
    return FssZeros(
        pole=pole,
        delta_z_closed=dz,
        zeros_closed=zeros_closed,
        zeros_refined=(z_plus, z_minus),
        residuals=(abs(f(z_plus)), abs(f(z_minus))),
    )
