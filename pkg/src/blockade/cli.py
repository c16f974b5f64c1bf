"""Command-line orchestration: presets, SPDS reports, g2 curves, sweeps.

Runs are described by an INI config file (flat sections, two levels) so the
figure-reproduction settings can live in version control, with a handful of
flags for the knobs that change between runs.  Every output embeds the hash
of its run manifest; rerunning the same config and seed reproduces CSV bodies
byte for byte (the wall-clock timestamp lives only in the manifest JSON).

Exit codes: 0 success, 2 config error, 3 numerical failure,
4 tolerance-gate failure (compare).
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import hashlib
import json
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .hilbert import FockConfig
from .models import PRESET_BUILDERS, CavityNetwork, build_preset
from .series import CorrelationSeries
from .spectral import dyson_spds_estimate, find_spds_zero, fss_zeros, ring_crude_pole
from .sweeps import SweepGrid, refine_sweep_minimum, sweep_g2_zero
from .trajectories import TrajectoryConfig, ensemble_g2, occupation_sweep
from .weakdrive import g2_tau_analytic

THREADS_ENV = "BLOCKADE_THREADS"
ENGINES = ("analytic", "regression", "wfmc")


class ConfigError(ValueError):
    """Invalid or missing run-configuration value (exit code 2)."""


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

NETWORK_KEYS = ("k", "J", "J_prime", "alpha", "delta", "gamma", "F_d")


@dataclasses.dataclass
class RunConfig:
    network: CavityNetwork
    engine: str = "analytic"
    seed: int = 2024
    threads: int = 1
    out_dir: Path = Path(".")
    preset: str = "llpb"
    tau_grid: np.ndarray | None = None
    sweep_deltas: np.ndarray | None = None
    sweep_gammas: np.ndarray | None = None
    drives: tuple = ()
    trajectory: TrajectoryConfig | None = None
    compare_tolerance: float = 0.05
    raw: dict = dataclasses.field(default_factory=dict)


def _get(section, key, cast, default=None, required=False):
    if section is None or key not in section:
        if required:
            name = getattr(section, "name", "?")
            raise ConfigError(f"missing required key '{key}' in section [{name}]")
        return default
    text = section[key].strip()
    if text == "":
        return default
    try:
        return cast(text)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for '{key}': {section[key]!r} ({exc})")


def _float_list(text):
    return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())


def _int_list(text):
    return tuple(int(x) for x in text.split(",") if x.strip())


def load_config(path: str | None, args) -> RunConfig:
    cp = configparser.ConfigParser()
    if path is not None:
        read = cp.read(path)
        if not read:
            raise ConfigError(f"config file not found: {path}")
    run = cp["run"] if cp.has_section("run") else None
    net_sec = cp["network"] if cp.has_section("network") else None

    preset = _get(run, "preset", str, default="llpb")
    overrides = {}
    if net_sec is not None:
        for key in NETWORK_KEYS:
            val = _get(net_sec, key, float)
            if val is not None:
                overrides[key] = val
    if preset == "custom":
        network = _custom_network(net_sec)
    else:
        if preset not in PRESET_BUILDERS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESET_BUILDERS)} or 'custom'")
        network = build_preset(preset, **overrides)

    engine = args.engine or _get(run, "engine", str, default="analytic")
    if engine not in ENGINES:
        raise ConfigError(f"unknown engine {engine!r}; choose from {ENGINES}")
    seed = args.seed if args.seed is not None else _get(run, "seed", int, default=2024)
    threads = args.threads if args.threads is not None else int(
        os.environ.get(THREADS_ENV, _get(run, "threads", int, default=1)))
    out_dir = Path(args.out or _get(run, "out", str, default="."))

    tau = None
    if cp.has_section("tau"):
        sec = cp["tau"]
        start = _get(sec, "start", float, default=0.0)
        stop = _get(sec, "stop", float, required=True)
        points = _get(sec, "points", int, required=True)
        if points < 2 or stop <= start:
            raise ConfigError("tau section needs stop > start and points >= 2")
        tau = np.linspace(start, stop, points)

    deltas = gammas = None
    if cp.has_section("sweep"):
        sec = cp["sweep"]
        deltas = np.linspace(_get(sec, "delta_min", float, required=True),
                             _get(sec, "delta_max", float, required=True),
                             _get(sec, "delta_points", int, required=True))
        gammas = np.linspace(_get(sec, "gamma_min", float, required=True),
                             _get(sec, "gamma_max", float, required=True),
                             _get(sec, "gamma_points", int, required=True))
        if len(deltas) == 0 or len(gammas) == 0:
            raise ConfigError("sweep ranges must be nonempty")

    drives = ()
    if cp.has_section("drives"):
        drives = _get(cp["drives"], "values", _float_list, default=())

    trajectory = None
    if cp.has_section("trajectory"):
        sec = cp["trajectory"]
        cutoffs = _get(sec, "cutoffs", _int_list, required=True)
        trajectory = TrajectoryConfig(
            fock=FockConfig(cutoffs),
            beta=_get(sec, "beta", float, default=0.1),
            n_traj=_get(sec, "n_traj", int, default=10),
            t_relax=_get(sec, "t_relax", float, default=100.0),
            t_record=_get(sec, "t_record", float, default=1000.0),
            seed=seed,
            rtol=_get(sec, "rtol", float, default=1e-12),
            atol=_get(sec, "atol", float, default=1e-12),
            sample_interval=_get(sec, "sample_interval", float, default=None),
        )

    tol = 0.05
    if cp.has_section("compare"):
        tol = _get(cp["compare"], "tolerance", float, default=0.05)

    raw = {s: dict(cp[s]) for s in cp.sections()}
    return RunConfig(network=network, engine=engine, seed=seed, threads=threads,
                     out_dir=out_dir, preset=preset, tau_grid=tau,
                     sweep_deltas=deltas, sweep_gammas=gammas, drives=drives,
                     trajectory=trajectory, compare_tolerance=tol, raw=raw)


def _custom_network(sec) -> CavityNetwork:
    if sec is None:
        raise ConfigError("preset = custom requires a [network] section")

    def matrix(text):
        rows = [[float(x) for x in row.split(",")] for row in text.split(";")]
        return np.asarray(rows)

    couplings = _get(sec, "couplings", matrix, required=True)
    n = couplings.shape[0]
    return CavityNetwork(
        n_sites=n,
        couplings=couplings,
        detuning=np.asarray(_get(sec, "detuning", _float_list, default=(0.0,) * n)),
        loss=np.asarray(_get(sec, "loss", _float_list, required=True)),
        kerr=_get(sec, "alpha", float, default=0.0),
        drive_site=_get(sec, "drive_site", int, default=0),
        drive_amplitude=complex(_get(sec, "F_d", float, default=1e-5)),
        signal_site=_get(sec, "signal_site", int, default=n - 1),
    )


# ---------------------------------------------------------------------------
# Manifests and CSV output
# ---------------------------------------------------------------------------

def _git_describe() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             capture_output=True, text=True, timeout=5,
                             cwd=Path(__file__).parent)
        if out.returncode == 0:
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return f"blockade-{__version__}"


def build_manifest(cfg: RunConfig, command: str, extra: dict | None = None) -> dict:
    manifest = {
        "command": command,
        "engine": cfg.engine,
        "seed": cfg.seed,
        "preset": cfg.preset,
        "model_hash": cfg.network.model_hash(),
        "build": _git_describe(),
        "version": __version__,
        "parameters": cfg.raw,
        "assumption_flags": ["default_drive_amplitude_1e-5"
                             if abs(cfg.network.drive_amplitude) == 1e-5 else
                             "explicit_drive_amplitude"],
    }
    if extra:
        manifest.update(extra)
    manifest["manifest_hash"] = manifest_hash(manifest)
    return manifest


def manifest_hash(manifest: dict) -> str:
    body = {k: v for k, v in manifest.items() if k not in ("timestamp", "manifest_hash")}
    return hashlib.sha256(json.dumps(body, sort_keys=True, default=str).encode()).hexdigest()[:16]


def write_manifest(manifest: dict, path: Path) -> None:
    payload = dict(manifest)
    payload["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    path.write_text(json.dumps(payload, indent=2, default=str) + "\n")


def _fmt(x) -> str:
    return f"{x:.17g}"


def write_series_csv(series: CorrelationSeries, path: Path, manifest: dict) -> None:
    lines = [f"# manifest={manifest['manifest_hash']}", "tau,g2,stderr"]
    errs = series.error_bars
    for k, (t, v) in enumerate(zip(series.tau_grid, series.values)):
        e = "" if errs is None else _fmt(errs[k])
        lines.append(f"{_fmt(t)},{_fmt(v)},{e}")
    path.write_text("\n".join(lines) + "\n")


def write_sweep_csv(grid: SweepGrid, path: Path, manifest: dict) -> None:
    lines = [f"# manifest={manifest['manifest_hash']}", "gamma,delta,g2_0"]
    for gi, g in enumerate(grid.gamma_values):
        for di, d in enumerate(grid.delta_values):
            lines.append(f"{_fmt(g)},{_fmt(d)},{_fmt(grid.g2_matrix[gi, di])}")
    path.write_text("\n".join(lines) + "\n")


def write_occupation_csv(rows, path: Path, manifest: dict) -> None:
    lines = [f"# manifest={manifest['manifest_hash']}", "F_d,n_signal,g2_0,stderr"]
    for r in rows:
        lines.append(f"{_fmt(r['F_d'])},{_fmt(r['n_signal'])},{_fmt(r['g2_0'])},{_fmt(r['stderr'])}")
    path.write_text("\n".join(lines) + "\n")


def read_series_csv(path: Path) -> CorrelationSeries:
    tau, g2, err = [], [], []
    with open(path) as fh:
        header = None
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if header is None:
                header = line
                if header.split(",")[:2] != ["tau", "g2"]:
                    raise ConfigError(f"{path}: expected 'tau,g2[,stderr]' header, got {header!r}")
                continue
            parts = line.split(",")
            tau.append(float(parts[0]))
            g2.append(float(parts[1]))
            if len(parts) > 2 and parts[2] != "":
                err.append(float(parts[2]))
    errors = np.asarray(err) if len(err) == len(tau) and err else None
    return CorrelationSeries(tau_grid=np.asarray(tau), values=np.asarray(g2),
                             error_bars=errors, source="analytic", metadata={"path": str(path)})


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _network_summary(net: CavityNetwork) -> dict:
    return {
        "n_sites": net.n_sites,
        "couplings": net.couplings.tolist(),
        "detuning": net.detuning.tolist(),
        "loss": net.loss.tolist(),
        "kerr": net.kerr,
        "cross_kerr_pairs": [list(p) for p in net.cross_kerr_pairs],
        "drive_site": net.drive_site,
        "drive_amplitude": [net.drive_amplitude.real, net.drive_amplitude.imag],
        "signal_site": net.signal_site,
        "units": net.units,
        "model_hash": net.model_hash(),
    }


def cmd_model(cfg: RunConfig, args) -> int:
    if args.preset:
        nets = {args.preset: build_preset(args.preset)}
    elif cfg.preset != "llpb" or args.config:
        nets = {cfg.preset: cfg.network}
    else:
        nets = {name: build_preset(name) for name in sorted(PRESET_BUILDERS)}
    print(json.dumps({k: _network_summary(v) for k, v in nets.items()}, indent=2))
    return 0


def cmd_spds(cfg: RunConfig, args) -> int:
    net = cfg.network
    report: dict = {"model_hash": net.model_hash()}
    candidates = dyson_spds_estimate(net)
    report["dyson_candidates"] = [
        {"z": [c.z_star.real, c.z_star.imag], "loss_compatible": c.loss_compatible}
        for c in candidates]
    try:
        report["crude_pole"] = list(np.array([ring_crude_pole(net).real, ring_crude_pole(net).imag]))
    except ValueError:
        report["crude_pole"] = None
    seeds = [c for c in candidates if c.loss_compatible]
    if seeds:
        refined = find_spds_zero(net, seeds[0].z_star)
        report["refined_root"] = {"z": [refined.z_star.real, refined.z_star.imag],
                                  "residual": refined.residual,
                                  "loss_compatible": refined.loss_compatible}
        if net.kerr > 0:
            roots = fss_zeros(net)
            report["pole"] = [roots.pole.real, roots.pole.imag]
            report["delta_z_closed"] = [roots.delta_z_closed.real, roots.delta_z_closed.imag]
            report["zeros_closed"] = [[z.real, z.imag] for z in roots.zeros_closed]
            report["zeros_refined"] = [[z.real, z.imag] for z in roots.zeros_refined]
            report["operating_points"] = [
                {"delta": d, "gamma": g} for d, g in roots.operating_points()]
    manifest = build_manifest(cfg, "spds", {"report": "spds"})
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    out = cfg.out_dir / "spds.json"
    report["manifest_hash"] = manifest["manifest_hash"]
    out.write_text(json.dumps(report, indent=2) + "\n")
    write_manifest(manifest, cfg.out_dir / "spds.manifest.json")
    print(json.dumps(report, indent=2))
    return 0


def _series_for_engine(cfg: RunConfig) -> CorrelationSeries:
    if cfg.tau_grid is None:
        raise ConfigError("g2tau requires a [tau] section (start/stop/points)")
    net = cfg.network
    if cfg.engine == "analytic":
        if net.n_sites == 1:
            # the single-cavity closed form is exact at any Kerr strength,
            # unlike the first-order perturbative engine
            from .weakdrive import g2_conventional_closed
            return g2_conventional_closed(net.kerr, float(net.detuning[0]),
                                          float(net.loss[0]), cfg.tau_grid)
        return g2_tau_analytic(net, tau_grid=cfg.tau_grid)
    if cfg.engine == "regression":
        from .lindblad import build_lindblad_problem, regression_g2
        fock = cfg.trajectory.fock if cfg.trajectory is not None else FockConfig([3] * net.n_sites)
        problem = build_lindblad_problem(net, fock)
        return regression_g2(problem, tau_grid=cfg.tau_grid)
    if cfg.trajectory is None:
        raise ConfigError("wfmc engine requires a [trajectory] section")
    res = ensemble_g2(net, config=cfg.trajectory, tau_grid=cfg.tau_grid)
    return res.series


def cmd_g2tau(cfg: RunConfig, args) -> int:
    series = _series_for_engine(cfg)
    manifest = build_manifest(cfg, "g2tau", {"source": series.source,
                                             "series_metadata": series.metadata})
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_series_csv(series, cfg.out_dir / "g2tau.csv", manifest)
    write_manifest(manifest, cfg.out_dir / "g2tau.manifest.json")
    print(json.dumps(manifest, indent=2, default=str))
    return 0


def cmd_sweep(cfg: RunConfig, args) -> int:
    if cfg.sweep_deltas is None or cfg.sweep_gammas is None:
        raise ConfigError("sweep requires a [sweep] section")
    grid = sweep_g2_zero(cfg.network, deltas=cfg.sweep_deltas, gammas=cfg.sweep_gammas,
                         engine=cfg.engine, threads=cfg.threads, wfmc_config=cfg.trajectory)
    extra = {"grid_minimum": dict(zip(("delta", "gamma", "g2_0"), grid.argmin()))}
    if cfg.engine == "analytic":
        d, g, v = refine_sweep_minimum(cfg.network, grid)
        extra["refined_minimum"] = {"delta": d, "gamma": g, "g2_0": v}
    manifest = build_manifest(cfg, "sweep", extra)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(grid, cfg.out_dir / "sweep.csv", manifest)
    write_manifest(manifest, cfg.out_dir / "sweep.manifest.json")
    print(json.dumps(manifest, indent=2, default=str))
    return 0


def cmd_occupation(cfg: RunConfig, args) -> int:
    if not cfg.drives:
        raise ConfigError("occupation requires a [drives] section with 'values'")
    if cfg.trajectory is None:
        raise ConfigError("occupation requires a [trajectory] section")
    rows = occupation_sweep(cfg.network, drives=cfg.drives, config=cfg.trajectory)
    manifest = build_manifest(cfg, "occupation", {"n_drives": len(rows)})
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    write_occupation_csv(rows, cfg.out_dir / "occupation.csv", manifest)
    write_manifest(manifest, cfg.out_dir / "occupation.manifest.json")
    print(json.dumps(manifest, indent=2, default=str))
    return 0


def cmd_compare(cfg: RunConfig, args) -> int:
    if len(args.inputs) < 2:
        raise ConfigError("compare needs at least two CSV inputs")
    series = [read_series_csv(Path(p)) for p in args.inputs]
    base = series[0]
    report = {"inputs": list(args.inputs), "tolerance": cfg.compare_tolerance, "pairs": []}
    worst = 0.0
    for other in series[1:]:
        if len(other.tau_grid) == len(base.tau_grid) and np.allclose(other.tau_grid, base.tau_grid):
            a, b = base.values, other.values
            tau = base.tau_grid
            ea = base.error_bars
            eb = other.error_bars
        else:
            lo = max(base.tau_grid[0], other.tau_grid[0])
            hi = min(base.tau_grid[-1], other.tau_grid[-1])
            if hi <= lo:
                raise ConfigError("compare inputs have disjoint tau ranges")
            tau = np.linspace(lo, hi, 201)
            a = np.interp(tau, base.tau_grid, base.values)
            b = np.interp(tau, other.tau_grid, other.values)
            ea = None if base.error_bars is None else np.interp(tau, base.tau_grid, base.error_bars)
            eb = None if other.error_bars is None else np.interp(tau, other.tau_grid, other.error_bars)
        diff = np.abs(a - b)
        sup = float(diff.max())
        rms = float(np.sqrt(np.mean(diff ** 2)))
        combined = np.zeros_like(diff)
        if ea is not None:
            combined = combined + np.square(ea)
        if eb is not None:
            combined = combined + np.square(eb)
        z = diff / np.sqrt(combined) if np.any(combined > 0) else None
        entry = {"sup_norm": sup, "rms": rms,
                 "argmax_tau": float(tau[int(diff.argmax())]),
                 "max_z_score": None if z is None else float(np.nanmax(z))}
        report["pairs"].append(entry)
        worst = max(worst, sup)
    report["pass"] = bool(worst <= cfg.compare_tolerance)
    print(json.dumps(report, indent=2))
    return 0 if report["pass"] else 4


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="blockade",
                                description="Photon-blockade simulator for coupled-cavity networks")
    p.add_argument("--config", help="INI run configuration")
    p.add_argument("--engine", choices=ENGINES, help="correlation engine")
    p.add_argument("--seed", type=int, help="base RNG seed")
    p.add_argument("--threads", type=int,
                   help=f"worker count (default: ${THREADS_ENV} or 1)")
    p.add_argument("--out", help="output directory")
    sub = p.add_subparsers(dest="command", required=True)
    sp = sub.add_parser("model", help="describe presets")
    sp.add_argument("--preset", help="single preset name")
    sub.add_parser("spds", help="single-particle dark-state report")
    sub.add_parser("g2tau", help="delayed correlation curve")
    sub.add_parser("sweep", help="g2(0) over a (delta, gamma) grid")
    sub.add_parser("occupation", help="g2(0) and occupation versus drive")
    sp = sub.add_parser("compare", help="discrepancy report between series CSVs")
    sp.add_argument("inputs", nargs="+", help="two or more tau,g2[,stderr] CSVs")
    return p


COMMANDS = {
    "model": cmd_model,
    "spds": cmd_spds,
    "g2tau": cmd_g2tau,
    "sweep": cmd_sweep,
    "occupation": cmd_occupation,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
