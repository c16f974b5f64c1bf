"""Lindblad master equation on the truncated Fock space.

drho/dt = -i[H, rho] + sum_i gamma_i (a_i rho a_i^dag - {a_i^dag a_i, rho}/2)

with H the Hermitian network Hamiltonian including the coherent drive.
Steady states come either from time integration until the generator residual
is negligible or from the null space of the vectorized generator; two-time
correlators use the quantum-regression construction: collapse the steady
state with a_j, evolve under the same generator, read off the delayed
population at the measurement site.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace as dc_replace

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .hilbert import FockConfig, OperatorMatrix, DensityMatrix, annihilation, number_op, assemble_hamiltonian
from .models import CavityNetwork
from .series import CorrelationSeries

LINEAR_SOLVE_MAX_DIM = 4096


@dataclass(frozen=True)
class LindbladProblem:
    """Hermitian Hamiltonian (drive included) plus jump operators sqrt(gamma_i) a_i."""

    hamiltonian: OperatorMatrix
    jump_ops: tuple
    dimension: int
    fock: FockConfig
    network: CavityNetwork | None = None

    def __post_init__(self):
        for L in self.jump_ops:
            if L.shape != (self.dimension, self.dimension):
                raise ValueError("jump operator shape mismatch")
        if self.hamiltonian.dimension != self.dimension:
            raise ValueError("Hamiltonian dimension mismatch")


def build_lindblad_problem(network: CavityNetwork, fock: FockConfig,
                           include_drive: bool = True) -> LindbladProblem:
    """Assemble the Lindblad problem for a network on the given Fock space."""
    lossless = dc_replace(network, loss=np.zeros(network.n_sites))
    H = assemble_hamiltonian(lossless, fock, include_drive=include_drive)
    jumps = []
    for i in range(network.n_sites):
        g = network.loss[i]
        if g > 0:
            jumps.append(np.sqrt(g) * _as_csr(annihilation(i, fock).data))
    return LindbladProblem(hamiltonian=H, jump_ops=tuple(jumps),
                           dimension=fock.dimension, fock=fock, network=network)


def _as_csr(a):
    return a if sp.issparse(a) else sp.csr_matrix(a)


def _rhs_factory(problem: LindbladProblem):
    dim = problem.dimension
    H = _as_csr(problem.hamiltonian.data)
    HT = H.T.tocsr()
    terms = []
    for L in problem.jump_ops:
        L = _as_csr(L)
        Ld = L.getH().tocsr()
        LdL = (Ld @ L).tocsr()
        terms.append((L, Ld.T.tocsr(), LdL, LdL.T.tocsr()))

    def rhs(rho: np.ndarray) -> np.ndarray:
        # rho @ M computed as (M.T @ rho.T).T to stay in ndarray land
        out = -1j * (H @ rho - (HT @ rho.T).T)
        for L, LdT, LdL, LdLT in terms:
            LrL = (LdT @ (L @ rho).T).T
            out += LrL - 0.5 * (LdL @ rho + (LdLT @ rho.T).T)
        return out

    return rhs


def lindblad_rhs(problem: LindbladProblem, rho: DensityMatrix) -> DensityMatrix:
    """Right-hand side drho/dt for a density matrix."""
    arr = np.asarray(rho.entries, dtype=complex)
    if arr.shape != (problem.dimension, problem.dimension):
        raise ValueError("density matrix shape mismatch")
    return DensityMatrix(entries=_rhs_factory(problem)(arr))


def _integrate_rho(problem: LindbladProblem, rho0: np.ndarray, t_span, t_eval=None,
                   rtol=1e-12, atol=1e-12):
    rhs = _rhs_factory(problem)
    dim = problem.dimension

    def fun(_t, y):
        return rhs(y.reshape(dim, dim)).ravel()

    sol = solve_ivp(fun, t_span, rho0.ravel().astype(complex), method="DOP853",
                    t_eval=t_eval, rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"Lindblad integration failed: {sol.message}")
    return sol


def steady_state(problem: LindbladProblem, method: str = "linear-solve",
                 rtol: float = 1e-12, atol: float = 1e-12,
                 max_time: float = 2000.0) -> DensityMatrix:
    """Steady state of the Lindblad generator.

    ``integrate`` evolves from vacuum in chunks until ||drho/dt|| falls below
    1e-10 ||rho||; ``linear-solve`` replaces one row of the vectorized
    generator with the trace constraint and solves directly (guarded to
    dimension <= 4096; sparse LU fill-in makes a few hundred the practical
    ceiling).
    """
    if problem.network is not None and np.any(problem.network.loss <= 0):
        raise ValueError("steady state needs positive loss on every site")
    dim = problem.dimension
    if method == "integrate":
        rho = np.zeros((dim, dim), dtype=complex)
        rho[0, 0] = 1.0
        rhs = _rhs_factory(problem)
        chunk = 20.0
        t = 0.0
        while t < max_time:
            sol = _integrate_rho(problem, rho, (0.0, chunk), rtol=rtol, atol=atol)
            rho = sol.y[:, -1].reshape(dim, dim)
            t += chunk
            if np.linalg.norm(rhs(rho)) < 1e-10 * np.linalg.norm(rho):
                break
        else:
            raise RuntimeError(f"no steady state within t = {max_time}")
        rho = 0.5 * (rho + rho.conj().T)
        rho /= np.trace(rho).real
        return DensityMatrix(entries=rho)
    if method == "linear-solve":
        if dim > LINEAR_SOLVE_MAX_DIM:
            raise ValueError(f"linear-solve restricted to dimension <= {LINEAR_SOLVE_MAX_DIM}")
        sup = _vectorized_generator(problem).tolil()
        # trace constraint replaces the vacuum-population row
        trace_row = np.zeros(dim * dim)
        trace_row[np.arange(dim) * dim + np.arange(dim)] = 1.0
        sup[0, :] = trace_row
        b = np.zeros(dim * dim, dtype=complex)
        b[0] = 1.0
        x = spla.spsolve(sup.tocsc(), b)
        rho = x.reshape(dim, dim)
        rho = 0.5 * (rho + rho.conj().T)
        tr = np.trace(rho).real
        if abs(tr) < 1e-300:
            raise RuntimeError("degenerate null space: zero-trace solution")
        rho /= tr
        return DensityMatrix(entries=rho)
    raise ValueError(f"unknown steady-state method {method!r}")


def _vectorized_generator(problem: LindbladProblem) -> sp.csr_matrix:
    """Row-major vectorization: vec(A X B) = (A kron B^T) vec(X)."""
    dim = problem.dimension
    H = _as_csr(problem.hamiltonian.data)
    eye = sp.identity(dim, dtype=complex, format="csr")
    sup = -1j * (sp.kron(H, eye, format="csr") - sp.kron(eye, H.T, format="csr"))
    for L in problem.jump_ops:
        L = _as_csr(L)
        Ld = L.getH().tocsr()
        LdL = (Ld @ L).tocsr()
        sup = sup + sp.kron(L, L.conj(), format="csr") \
            - 0.5 * (sp.kron(LdL, eye, format="csr") + sp.kron(eye, LdL.T, format="csr"))
    return sup.tocsr()


def site_occupations(problem: LindbladProblem, rho: DensityMatrix) -> np.ndarray:
    n_sites = problem.fock.n_sites
    return np.array([rho.expectation(number_op(i, problem.fock)).real
                     for i in range(n_sites)])


def g2_zero_static(problem: LindbladProblem, rho: DensityMatrix,
                   measure_site: int, collapse_site: int) -> float:
    """Normally ordered <a_j+ a_i+ a_i a_j> / (n_i n_j) straight from rho."""
    fock = problem.fock
    ai = _as_csr(annihilation(measure_site, fock).data)
    aj = _as_csr(annihilation(collapse_site, fock).data)
    op = (aj.getH() @ ai.getH() @ ai @ aj).tocsr()
    nbar = site_occupations(problem, rho)
    denom = nbar[measure_site] * nbar[collapse_site]
    if denom <= 0:
        raise ZeroDivisionError("zero occupation: correlation undefined")
    return float(rho.expectation(op).real / denom)


def regression_g2(problem: LindbladProblem, signal_site: int | None = None,
                  measure_site: int | None = None, tau_grid=None,
                  rho_ss: DensityMatrix | None = None,
                  method: str = "linear-solve",
                  rtol: float = 1e-12, atol: float = 1e-12) -> CorrelationSeries:
    """g2_ij(tau) by quantum regression from the steady state.

    Forms rho_j(0) = a_j rho_ss a_j^dag (unnormalized), evolves it under the
    same generator, and returns tr[rho_j(tau) n_i] / (n_i n_j).
    """
    net = problem.network
    if signal_site is None:
        if net is None:
            raise ValueError("signal site required when no network is attached")
        signal_site = net.signal_site
    j = signal_site
    i = j if measure_site is None else measure_site
    if rho_ss is None:
        rho_ss = steady_state(problem, method=method, rtol=rtol, atol=atol)
    tau = np.atleast_1d(np.asarray(tau_grid, dtype=float))
    fock = problem.fock
    aj = _as_csr(annihilation(j, fock).data)
    ni_op = _as_csr(number_op(i, fock).data)
    nbar = site_occupations(problem, rho_ss)
    denom = nbar[i] * nbar[j]
    if denom <= 0:
        raise ZeroDivisionError("zero occupation: correlation undefined")

    # rho_j(0) = a_j rho a_j^dag, kept unnormalized
    B = np.asarray(aj @ rho_ss.entries)
    rho0 = np.asarray((aj.conj() @ B.T).T)

    dim = problem.dimension
    values = np.empty_like(tau)
    positive = tau > 0
    if positive.any():
        sol = _integrate_rho(problem, rho0, (0.0, float(tau[-1])),
                             t_eval=tau[positive], rtol=rtol, atol=atol)
        for col_idx, col in enumerate(sol.y.T):
            rho_t = col.reshape(dim, dim)
            values[np.nonzero(positive)[0][col_idx]] = (ni_op @ rho_t).trace().real / denom
    values[~positive] = (ni_op @ rho0).trace().real / denom
    values = np.maximum(values, 0.0)
    md = {"engine": "regression", "measure_site": i, "collapse_site": j,
          "steady_state_method": method}
    if net is not None:
        md["model_hash"] = net.model_hash()
    return CorrelationSeries(tau_grid=tau, values=values, source="regression", metadata=md)
