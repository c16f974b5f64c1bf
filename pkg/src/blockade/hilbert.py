"""Truncated multi-mode Fock space: basis bookkeeping and operator algebra.

Basis ordering is site-major with the *last* site varying fastest, i.e. the
flat index of an occupation tuple ``(n_0, ..., n_{M-1})`` with per-site
cutoffs ``(N_0, ..., N_{M-1})`` is

    index = n_0 * (N_1 * ... * N_{M-1}) + ... + n_{M-2} * N_{M-1} + n_{M-1}

which is numpy C-order (``np.ravel_multi_index``).  This ordering is frozen:
every serialized state and every operator built here refers to it.

Operators are plain matrices over the product basis, dense below
``SPARSE_THRESHOLD`` and CSR above it; the representation switch changes no
matrix element beyond round-off.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

# Dense/sparse switch on the product-space dimension.
SPARSE_THRESHOLD = 512

# Refuse to build product spaces beyond this dimension (memory guard).
MAX_DIMENSION = 2**24


class DimensionError(ValueError):
    """Product-space dimension is invalid or exceeds the memory budget."""


@dataclass(frozen=True)
class FockConfig:
    """Per-site Fock cutoffs; cutoff N means occupations 0..N-1 are kept."""

    cutoffs: tuple[int, ...]

    def __init__(self, cutoffs):
        object.__setattr__(self, "cutoffs", tuple(int(c) for c in cutoffs))
        if any(c < 2 for c in self.cutoffs):
            raise DimensionError(f"every cutoff must be >= 2, got {self.cutoffs}")
        if self.dimension > MAX_DIMENSION:
            raise DimensionError(
                f"product dimension {self.dimension} exceeds budget {MAX_DIMENSION}"
            )

    @property
    def n_sites(self) -> int:
        return len(self.cutoffs)

    @property
    def dimension(self) -> int:
        return math.prod(self.cutoffs)


@dataclass(frozen=True)
class FockBasis:
    """Index <-> occupation maps for a product of truncated Fock spaces."""

    config: FockConfig
    occupations: np.ndarray = field(repr=False)  # (dim, n_sites) int array

    @property
    def dimension(self) -> int:
        return self.config.dimension

    def index_of(self, occupation) -> int:
        """Flat index of an occupation tuple (site-major, last site fastest)."""
        return int(np.ravel_multi_index(tuple(occupation), self.config.cutoffs))

    def occupation_of(self, index: int) -> tuple[int, ...]:
        """Occupation tuple of a flat basis index."""
        return tuple(int(n) for n in np.unravel_index(index, self.config.cutoffs))

    def vacuum_index(self) -> int:
        return 0


def build_space(config: FockConfig) -> FockBasis:
    """Construct the basis descriptor for the given cutoffs."""
    dims = config.cutoffs
    grids = np.indices(dims).reshape(len(dims), -1).T
    return FockBasis(config=config, occupations=grids)


@dataclass(frozen=True)
class OperatorMatrix:
    """A (possibly sparse) complex matrix over the product Fock basis."""

    data: object  # np.ndarray or scipy.sparse.csr_matrix
    dimension: int
    site_tags: tuple[int, ...] = ()

    def dense(self) -> np.ndarray:
        if sp.issparse(self.data):
            return np.asarray(self.data.todense())
        return np.asarray(self.data)

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            return OperatorMatrix(
                data=self.data @ other.data,
                dimension=self.dimension,
                site_tags=tuple(sorted(set(self.site_tags) | set(other.site_tags))),
            )
        return self.data @ other

    def adjoint(self) -> "OperatorMatrix":
        return OperatorMatrix(
            data=self.data.conj().T if not sp.issparse(self.data) else self.data.getH().tocsr(),
            dimension=self.dimension,
            site_tags=self.site_tags,
        )

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        a = self.data
        if sp.issparse(a):
            diff = (a - a.getH()).tocoo()
            scale = max(1.0, abs(a).max())
            return diff.nnz == 0 or np.max(np.abs(diff.data)) <= tol * scale
        scale = max(1.0, np.abs(a).max())
        return np.max(np.abs(a - a.conj().T)) <= tol * scale


@dataclass
class QuantumState:
    """State vector over the product Fock basis with a cached norm."""

    amplitudes: np.ndarray
    _norm: float | None = None

    @property
    def norm(self) -> float:
        if self._norm is None:
            self._norm = float(np.linalg.norm(self.amplitudes))
        return self._norm

    def normalized(self) -> "QuantumState":
        n = self.norm
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return QuantumState(self.amplitudes / n, 1.0)

    def expectation(self, op) -> complex:
        a = op.data if isinstance(op, OperatorMatrix) else op
        return complex(np.vdot(self.amplitudes, a @ self.amplitudes))


@dataclass
class DensityMatrix:
    """Density operator over the product Fock basis."""

    entries: np.ndarray

    @property
    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def min_eigenvalue(self) -> float:
        h = 0.5 * (self.entries + self.entries.conj().T)
        return float(np.linalg.eigvalsh(h)[0])

    def expectation(self, op) -> complex:
        a = op.data if isinstance(op, OperatorMatrix) else op
        if sp.issparse(a):
            return complex((a @ self.entries).trace())
        return complex(np.trace(a @ self.entries))


def _single_mode_lowering(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff, dtype=float)), k=1).astype(complex)


def _embed(config: FockConfig, site: int, local: np.ndarray, sparse: bool):
    """Kronecker-embed a single-site operator; later sites are the fast index."""
    if sparse:
        op = sp.identity(1, dtype=complex, format="csr")
        for j, cut in enumerate(config.cutoffs):
            factor = sp.csr_matrix(local) if j == site else sp.identity(cut, dtype=complex, format="csr")
            op = sp.kron(op, factor, format="csr")
        return op
    op = np.eye(1, dtype=complex)
    for j, cut in enumerate(config.cutoffs):
        factor = local if j == site else np.eye(cut, dtype=complex)
        op = np.kron(op, factor)
    return op


def _use_sparse(config: FockConfig) -> bool:
    return config.dimension > SPARSE_THRESHOLD


def annihilation(site: int, config: FockConfig) -> OperatorMatrix:
    """Photon annihilation operator a_site on the product space."""
    if not 0 <= site < config.n_sites:
        raise IndexError(f"site {site} out of range for {config.n_sites} sites")
    local = _single_mode_lowering(config.cutoffs[site])
    return OperatorMatrix(
        data=_embed(config, site, local, _use_sparse(config)),
        dimension=config.dimension,
        site_tags=(site,),
    )


def creation(site: int, config: FockConfig) -> OperatorMatrix:
    """Photon creation operator a_site^dagger."""
    return annihilation(site, config).adjoint()


def number_op(site: int, config: FockConfig) -> OperatorMatrix:
    """Number operator n_site = a^dagger a."""
    if not 0 <= site < config.n_sites:
        raise IndexError(f"site {site} out of range for {config.n_sites} sites")
    local = np.diag(np.arange(config.cutoffs[site], dtype=float)).astype(complex)
    return OperatorMatrix(
        data=_embed(config, site, local, _use_sparse(config)),
        dimension=config.dimension,
        site_tags=(site,),
    )


def assemble_hamiltonian(network, config: FockConfig, include_drive: bool = False) -> OperatorMatrix:
    """Effective Hamiltonian of a cavity network on the truncated space.

    Returns sum_ij J_ij a_i^dag a_j + sum_i z_i n_i + alpha sum_i a_i^dag2 a_i^2
    + sum_pairs 2 alpha_x n_i n_j, plus F_d a_d^dag + F_d^* a_d when
    ``include_drive``.  With all losses zero and no drive the result is
    Hermitian.
    """
    if network.n_sites != config.n_sites:
        raise DimensionError(
            f"network has {network.n_sites} sites, Fock config has {config.n_sites}"
        )
    J = np.asarray(network.couplings, dtype=float)
    if J.shape != (config.n_sites, config.n_sites) or np.max(np.abs(J - J.T)) > 1e-12 * max(1.0, np.abs(J).max()):
        raise ValueError("coupling matrix must be square and symmetric")

    sparse = _use_sparse(config)
    ann = [annihilation(i, config).data for i in range(config.n_sites)]
    num = [number_op(i, config).data for i in range(config.n_sites)]
    z = network.complex_detunings()

    H = None

    def acc(term):
        nonlocal H
        H = term if H is None else H + term

    for i in range(config.n_sites):
        acc(z[i] * num[i])
        for j in range(config.n_sites):
            if i != j and J[i, j] != 0.0:
                acc(J[i, j] * (ann[i].conj().T @ ann[j] if not sparse else ann[i].getH() @ ann[j]))
        if network.kerr != 0.0:
            # a^dag a^dag a a = n(n-1)
            acc(network.kerr * (num[i] @ num[i] - num[i]))
    for (i, j, alpha_x) in network.cross_kerr_pairs:
        acc(2.0 * alpha_x * (num[i] @ num[j]))
    if include_drive and network.drive_amplitude != 0.0:
        fd = complex(network.drive_amplitude)
        d = network.drive_site
        adag = ann[d].conj().T if not sparse else ann[d].getH()
        acc(fd * adag + np.conj(fd) * ann[d])

    if H is None:
        if sparse:
            H = sp.csr_matrix((config.dimension, config.dimension), dtype=complex)
        else:
            H = np.zeros((config.dimension, config.dimension), dtype=complex)
    if sparse:
        H = sp.csr_matrix(H)
    return OperatorMatrix(data=H, dimension=config.dimension,
                          site_tags=tuple(range(config.n_sites)))


def top_fock_mask(config: FockConfig) -> np.ndarray:
    """Boolean mask of basis states with any site at its highest kept level."""
    basis = build_space(config)
    tops = np.array(config.cutoffs) - 1
    return np.any(basis.occupations == tops[None, :], axis=1)
