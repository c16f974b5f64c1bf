"""Wavefunction Monte Carlo: quantum trajectories with norm-decay jumps.

Each trajectory integrates the non-Hermitian Schrodinger equation
d psi/dt = -i K psi with K = H - (i/2) sum_j L_j^dag L_j, drawing a uniform
threshold u and collapsing through a jump channel (probability proportional
to ||L_j psi||^2) whenever ||psi||^2 decays to u.  A beta-shifted unraveling
(L -> L + beta, H -> H + (beta/2i) sum (L - L^dag)) keeps jumps frequent even
at vanishing drive while preserving the ensemble evolution.

Trajectories are reproducible: all randomness for trajectory ``k`` comes from
one counter-based Philox stream keyed by (seed XOR k), so results do not
depend on scheduling.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace as dc_replace

import numpy as np
import scipy.sparse as sp
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .hilbert import FockConfig, OperatorMatrix, annihilation, number_op, top_fock_mask
from .lindblad import LindbladProblem, build_lindblad_problem, _as_csr
from .models import CavityNetwork
from .series import CorrelationSeries

DENSE_PROPAGATOR_MAX_DIM = 512
TOP_FOCK_WARN = 1e-6


@dataclass(frozen=True)
class TrajectoryConfig:
    """Monte Carlo run parameters (paper defaults for the ensemble sizes)."""

    fock: FockConfig
    beta: float = 0.1
    n_traj: int = 10
    t_relax: float = 100.0
    t_record: float = 1000.0
    seed: int = 2024
    rtol: float = 1e-12
    atol: float = 1e-12
    sample_interval: float | None = None   # default: 1 / max(gamma_i)

    def __post_init__(self):
        if self.n_traj < 1:
            raise ValueError("n_traj must be >= 1")
        if self.t_relax <= 0 or self.t_record <= 0:
            raise ValueError("t_relax and t_record must be positive")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")


@dataclass
class JumpRecord:
    time: float
    channel: int
    threshold_residual: float   # | ||psi(t_jump)||^2 - u |


@dataclass
class TrajectoryRecord:
    """Sampled history of one trajectory."""

    index: int
    sample_times: np.ndarray
    occupations: np.ndarray        # (n_samples, n_sites), normalized
    pair_moment: np.ndarray        # (n_samples,), <a_j+ a_i+ a_i a_j> normalized
    jumps: list
    max_top_fock: float


@dataclass
class EnsembleResult:
    """Trajectory-ensemble averages with standard errors across trajectories."""

    g2_zero: float
    g2_zero_stderr: float
    occupations: np.ndarray
    occupations_stderr: np.ndarray
    series: CorrelationSeries | None
    per_trajectory: list
    metadata: dict


def unravel_transform(problem: LindbladProblem, beta: float) -> LindbladProblem:
    """Shift the unraveling: L -> L + beta, H -> H + (beta/2i) sum (L - L^dag).

    beta = 0 returns the problem unchanged.  The transformed problem generates
    the identical Lindblad ensemble; only the trajectory decomposition moves.
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if beta == 0.0:
        return problem
    H = _as_csr(problem.hamiltonian.data).copy()
    eye = sp.identity(problem.dimension, dtype=complex, format="csr")
    shifted_jumps = []
    for L in problem.jump_ops:
        L = _as_csr(L)
        H = H + (beta / 2j) * (L - L.getH())
        shifted_jumps.append((L + beta * eye).tocsr())
    return LindbladProblem(
        hamiltonian=OperatorMatrix(data=H.tocsr(), dimension=problem.dimension,
                                   site_tags=problem.hamiltonian.site_tags),
        jump_ops=tuple(shifted_jumps),
        dimension=problem.dimension,
        fock=problem.fock,
        network=problem.network,
    )


def effective_drift(problem: LindbladProblem) -> sp.csr_matrix:
    """Non-Hermitian drift K = H - (i/2) sum_j L_j^dag L_j."""
    K = _as_csr(problem.hamiltonian.data).astype(complex)
    for L in problem.jump_ops:
        L = _as_csr(L)
        K = K - 0.5j * (L.getH() @ L)
    return K.tocsr()


class _DensePropagatorEngine:
    """Exact matrix-exponential stepping for small dimensions.

    One expm per distinct step length, cached; jump times are localized by
    bisection with dyadic sub-propagators.
    """

    def __init__(self, K: sp.csr_matrix, dt: float):
        self.Kd = np.asarray(K.todense())
        self.dt = float(dt)
        self._cache: dict[float, np.ndarray] = {}

    def _U(self, h: float) -> np.ndarray:
        key = float(h)
        U = self._cache.get(key)
        if U is None:
            U = expm(-1j * self.Kd * key)
            self._cache[key] = U
        return U

    def _apply_duration(self, psi: np.ndarray, length: float) -> np.ndarray:
        """Propagate by an arbitrary duration via dyadic composition."""
        remaining = length
        h = self.dt
        while remaining > 1e-13 * max(1.0, length):
            while h > remaining + 1e-15:
                h *= 0.5
                if h < 1e-14:
                    return psi
            psi = self._U(h) @ psi
            remaining -= h
        return psi

    def advance(self, psi, t0, t1, threshold):
        """Propagate until t1 or until ||psi||^2 hits the threshold.

        Returns (psi, t_reached, crossed, threshold_residual).
        """
        t = t0
        while t < t1 - 1e-13 * max(1.0, abs(t1)):
            h = min(self.dt, t1 - t)
            nxt = self._apply_duration(psi, h) if h != self.dt else self._U(self.dt) @ psi
            n2 = float(np.vdot(nxt, nxt).real)
            if n2 > threshold:
                psi, t = nxt, t + h
                continue
            # bisect the crossing inside [t, t + h]
            lo_t, lo_psi = t, psi
            width = h
            while width > 1e-12 * max(1.0, abs(lo_t)):
                width *= 0.5
                mid = self._apply_duration(lo_psi, width)
                if float(np.vdot(mid, mid).real) > threshold:
                    lo_t, lo_psi = lo_t + width, mid
            resid = abs(float(np.vdot(lo_psi, lo_psi).real) - threshold)
            return lo_psi, lo_t, True, resid
        return psi, t1, False, 0.0


class _OdeEngine:
    """Adaptive DOP853 stepping with a terminal norm-threshold event."""

    def __init__(self, K: sp.csr_matrix, rtol: float, atol: float):
        self.K = K
        self.rtol = rtol
        self.atol = atol

    def advance(self, psi, t0, t1, threshold):
        K = self.K

        def fun(_t, y):
            return -1j * (K @ y)

        def hit(_t, y):
            return float(np.vdot(y, y).real) - threshold

        hit.terminal = True
        hit.direction = -1
        sol = solve_ivp(fun, (t0, t1), psi, method="DOP853", rtol=self.rtol,
                        atol=self.atol, events=hit, dense_output=False)
        if not sol.success:
            raise RuntimeError(f"trajectory integration failed: {sol.message}")
        if sol.status == 1:  # event hit
            t_j = float(sol.t_events[0][0])
            psi_j = sol.y_events[0][0]
            resid = abs(float(np.vdot(psi_j, psi_j).real) - threshold)
            return psi_j, t_j, True, resid
        return sol.y[:, -1], t1, False, 0.0


def _make_engine(K: sp.csr_matrix, dim: int, config: TrajectoryConfig, dt: float):
    if dim <= DENSE_PROPAGATOR_MAX_DIM:
        return _DensePropagatorEngine(K, dt)
    return _OdeEngine(K, config.rtol, config.atol)


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream for one trajectory: Philox keyed by seed XOR index."""
    return np.random.Generator(np.random.Philox(key=np.uint64(seed) ^ np.uint64(index)))


class _StochasticPropagator:
    """Shared jump logic on top of an advance() engine."""

    def __init__(self, engine, jump_ops, rng):
        self.engine = engine
        self.jump_ops = [_as_csr(L) for L in jump_ops]
        self.rng = rng
        self.jumps: list[JumpRecord] = []
        self.threshold = self._draw()

    def _draw(self) -> float:
        u = float(self.rng.random())
        while u <= 0.0:
            u = float(self.rng.random())
        return u

    def _collapse(self, psi, t):
        weights = np.array([float(np.linalg.norm(L @ psi) ** 2) for L in self.jump_ops])
        total = weights.sum()
        if total <= 0.0:
            raise RuntimeError("norm decayed with no open jump channel")
        channel = int(np.searchsorted(np.cumsum(weights) / total, self.rng.random()))
        channel = min(channel, len(self.jump_ops) - 1)
        out = self.jump_ops[channel] @ psi
        return out / np.linalg.norm(out), channel

    def run(self, psi, t0, t1):
        """Propagate (with jumps) from t0 to t1; psi normalized on entry or not."""
        t = t0
        while t < t1:
            psi, t, crossed, resid = self.engine.advance(psi, t, t1, self.threshold)
            if not crossed:
                break
            psi, channel = self._collapse(psi, t)
            self.jumps.append(JumpRecord(time=t, channel=channel, threshold_residual=resid))
            self.threshold = self._draw()
        return psi


def _checkpoints(t_start: float, t_stop: float, interval: float) -> np.ndarray:
    n = int(np.floor((t_stop - t_start) / interval + 1e-9))
    return t_start + interval * np.arange(1, n + 1)


def _sample_interval(config: TrajectoryConfig, network: CavityNetwork | None) -> float:
    if config.sample_interval is not None:
        return float(config.sample_interval)
    if network is not None and np.max(network.loss) > 0:
        return 1.0 / float(np.max(network.loss))
    return 1.0


def run_trajectory(problem: LindbladProblem, config: TrajectoryConfig,
                   index: int) -> TrajectoryRecord:
    """Evolve one trajectory from vacuum and record sampled observables.

    ``problem`` should already carry the chosen unraveling (see
    ``unravel_transform``).  Sampling runs every ``sample_interval`` from
    t_relax to t_relax + t_record.  Deterministic given (config.seed, index).
    """
    net = problem.network
    i = j = net.signal_site if net is not None else 0
    interval = _sample_interval(config, net)
    rng = trajectory_rng(config.seed, index)
    K = effective_drift(problem)
    engine = _make_engine(K, problem.dimension, config, interval)
    prop = _StochasticPropagator(engine, problem.jump_ops, rng)

    n_diag = np.stack([_number_diagonal(problem.fock, s) for s in range(problem.fock.n_sites)])
    m2_diag = _pair_moment_diagonal(problem.fock, i, j)
    top_mask = top_fock_mask(problem.fock)

    psi = np.zeros(problem.dimension, dtype=complex)
    psi[0] = 1.0
    psi = prop.run(psi, 0.0, config.t_relax)

    times = _checkpoints(config.t_relax, config.t_relax + config.t_record, interval)
    occ = np.empty((len(times), problem.fock.n_sites))
    m2 = np.empty(len(times))
    top = 0.0
    t_prev = config.t_relax
    for k, t in enumerate(times):
        psi = prop.run(psi, t_prev, t)
        t_prev = t
        p = np.abs(psi) ** 2
        norm2 = p.sum()
        occ[k] = (n_diag @ p) / norm2
        m2[k] = float(m2_diag @ p) / norm2
        top = max(top, float(p[top_mask].sum()) / norm2)
    if top > TOP_FOCK_WARN:
        warnings.warn(
            f"top Fock level holds {top:.2e} of the norm (> {TOP_FOCK_WARN}); "
            f"raise the cutoffs {problem.fock.cutoffs}", stacklevel=2)
    return TrajectoryRecord(index=index, sample_times=times, occupations=occ,
                            pair_moment=m2, jumps=prop.jumps, max_top_fock=top)


def _number_diagonal(fock: FockConfig, site: int) -> np.ndarray:
    from .hilbert import build_space
    return build_space(fock).occupations[:, site].astype(float)


def _pair_moment_diagonal(fock: FockConfig, i: int, j: int) -> np.ndarray:
    """Diagonal of a_j^dag a_i^dag a_i a_j in the Fock basis."""
    from .hilbert import build_space
    occ = build_space(fock).occupations
    if i == j:
        n = occ[:, i].astype(float)
        return n * (n - 1.0)
    return occ[:, i].astype(float) * occ[:, j].astype(float)


def ensemble_g2(network: CavityNetwork, alpha: float | None = None,
                config: TrajectoryConfig | None = None, tau_grid=None,
                measure_site: int | None = None,
                collapse_site: int | None = None) -> EnsembleResult:
    """Trajectory-ensemble g2: equal-time always, delayed when tau_grid given.

    At every sample time the signal site is collapsed (weight ||a_j psi||^2,
    ensemble-correct stochastic evolution of the collapsed state over the tau
    grid), mirroring the quantum-regression construction; the estimate is
    normalized by the ensemble occupations.  Standard errors come from the
    n_traj independent trajectories.
    """
    if config is None:
        raise ValueError("a TrajectoryConfig is required")
    if alpha is not None:
        network = dc_replace(network, kerr=float(alpha))
    j = network.signal_site if collapse_site is None else collapse_site
    i = j if measure_site is None else measure_site
    interval = _sample_interval(config, network)

    base = build_lindblad_problem(network, config.fock)
    problem = unravel_transform(base, config.beta)
    K = effective_drift(problem)
    engine = _make_engine(K, problem.dimension, config, interval)

    fock = config.fock
    n_diag = np.stack([_number_diagonal(fock, s) for s in range(fock.n_sites)])
    m2_diag = _pair_moment_diagonal(fock, i, j)
    top_mask = top_fock_mask(fock)
    a_j = _as_csr(annihilation(j, fock).data)

    tau = None if tau_grid is None else np.atleast_1d(np.asarray(tau_grid, dtype=float))
    times = _checkpoints(config.t_relax, config.t_relax + config.t_record, interval)

    traj_occ = np.empty((config.n_traj, fock.n_sites))
    traj_m2 = np.empty(config.n_traj)
    traj_corr = np.empty((config.n_traj, len(tau))) if tau is not None else None
    per_traj = []
    top_worst = 0.0

    for t_idx in range(config.n_traj):
        rng = trajectory_rng(config.seed, t_idx)
        prop = _StochasticPropagator(engine, problem.jump_ops, rng)
        psi = np.zeros(problem.dimension, dtype=complex)
        psi[0] = 1.0
        psi = prop.run(psi, 0.0, config.t_relax)

        occ_sum = np.zeros(fock.n_sites)
        m2_sum = 0.0
        corr_sum = np.zeros(len(tau)) if tau is not None else None
        top = 0.0
        t_prev = config.t_relax
        for t in times:
            psi = prop.run(psi, t_prev, t)
            t_prev = t
            p = np.abs(psi) ** 2
            norm2 = p.sum()
            occ_sum += (n_diag @ p) / norm2
            m2_sum += float(m2_diag @ p) / norm2
            top = max(top, float(p[top_mask].sum()) / norm2)
            if tau is not None:
                phi0 = a_j @ psi
                w = float(np.linalg.norm(phi0) ** 2) / norm2
                if w > 0.0:
                    corr_sum += w * _collapsed_population(
                        engine, problem, prop, phi0 / np.linalg.norm(phi0),
                        tau, n_diag[i])
        n_samp = len(times)
        traj_occ[t_idx] = occ_sum / n_samp
        traj_m2[t_idx] = m2_sum / n_samp
        if tau is not None:
            traj_corr[t_idx] = corr_sum / n_samp
        per_traj.append({"index": t_idx, "jumps": len(prop.jumps), "max_top_fock": top})
        top_worst = max(top_worst, top)

    if top_worst > TOP_FOCK_WARN:
        warnings.warn(
            f"top Fock level holds {top_worst:.2e} of the norm (> {TOP_FOCK_WARN}); "
            f"raise the cutoffs {fock.cutoffs}", stacklevel=2)

    nbar = traj_occ.mean(axis=0)
    nbar_se = traj_occ.std(axis=0, ddof=1) / np.sqrt(config.n_traj) if config.n_traj > 1 \
        else np.zeros(fock.n_sites)
    # occupations are meaningful down to amplitudes of order machine epsilon,
    # so the floor sits at (10 eps)^2 in occupation units
    denom_traj = traj_occ[:, i] * traj_occ[:, j]
    floor = (10 * np.finfo(float).eps) ** 2
    if np.any(traj_occ[:, i] <= floor) or np.any(traj_occ[:, j] <= floor):
        raise ZeroDivisionError("occupation below noise floor: correlation undefined at this drive")
    g2z_traj = traj_m2 / denom_traj
    g2_zero = float(g2z_traj.mean())
    g2_zero_se = float(g2z_traj.std(ddof=1) / np.sqrt(config.n_traj)) if config.n_traj > 1 else 0.0

    series = None
    if tau is not None:
        g2_traj = traj_corr / denom_traj[:, None]
        vals = g2_traj.mean(axis=0)
        errs = g2_traj.std(axis=0, ddof=1) / np.sqrt(config.n_traj) if config.n_traj > 1 \
            else np.zeros_like(vals)
        series = CorrelationSeries(
            tau_grid=tau, values=np.maximum(vals, 0.0), error_bars=errs, source="wfmc",
            metadata={"model_hash": network.model_hash(), "beta": config.beta,
                      "n_traj": config.n_traj, "t_relax": config.t_relax,
                      "t_record": config.t_record, "seed": config.seed,
                      "sample_interval": interval, "measure_site": i, "collapse_site": j,
                      "fock_cutoffs": list(fock.cutoffs),
                      "assumption_flags": ["sample_interval_choice"]})

    return EnsembleResult(
        g2_zero=g2_zero, g2_zero_stderr=g2_zero_se,
        occupations=nbar, occupations_stderr=nbar_se,
        series=series, per_trajectory=per_traj,
        metadata={"model_hash": network.model_hash(), "beta": config.beta,
                  "seed": config.seed, "n_traj": config.n_traj,
                  "sample_interval": interval, "measure_site": i, "collapse_site": j},
    )


def _collapsed_population(engine, problem, prop, phi0, tau, n_diag_i):
    """Evolve a collapsed state over the tau grid, recording <n_i> (normalized).

    Jumps continue through the collapsed evolution (fresh thresholds from the
    same trajectory stream), which keeps the ensemble map exact.
    """
    sub = _StochasticPropagator(engine, problem.jump_ops, prop.rng)
    out = np.empty(len(tau))
    psi = phi0
    t_prev = 0.0
    for k, t in enumerate(tau):
        if t > t_prev:
            psi = sub.run(psi, t_prev, t)
            t_prev = t
        p = np.abs(psi) ** 2
        out[k] = float(n_diag_i @ p) / p.sum()
    return out


def occupation_sweep(network: CavityNetwork, alpha: float | None = None,
                     drives=(), config: TrajectoryConfig | None = None):
    """Equal-time g2 and signal occupation across drive amplitudes.

    Returns a list of dicts with keys F_d, n_signal, n_signal_stderr, g2_0,
    stderr (one row per drive amplitude).
    """
    if config is None:
        raise ValueError("a TrajectoryConfig is required")
    rows = []
    for F in drives:
        net = dc_replace(network, drive_amplitude=complex(F))
        res = ensemble_g2(net, alpha=alpha, config=config, tau_grid=None)
        s = net.signal_site
        rows.append({
            "F_d": float(np.abs(F)),
            "n_signal": float(res.occupations[s]),
            "n_signal_stderr": float(res.occupations_stderr[s]),
            "g2_0": res.g2_zero,
            "stderr": res.g2_zero_stderr,
        })
    return rows
