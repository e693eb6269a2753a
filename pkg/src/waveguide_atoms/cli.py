"""Command-line front end.

Every run computes all of its tables first and only then writes them, via a
staging directory inside ``--out``, so a failed run leaves no partial
artifacts. Each run also writes ``<name>.meta.json`` with the resolved
configuration, seed and library version.

Exit status: 0 on success, 2 for configuration errors, 3 for numerical
failures (the failing subsystem is named on stderr).
"""

from __future__ import annotations

import argparse
import json
import logging
import shutil
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import FIGURE_KINDS, RunConfig, from_mapping, parse_config
from .core import AtomArray, DriveField, LatticeSpec, WaveguideParams
from .csvio import to_csv_text
from .dynamics import DriveSchedule, evolve
from .eigenmodes import EIGEN_SCAN_HEADER, decompose, eigen_scan, eigen_scan_rows
from .errors import ConfigError, IntegrationError, PoleError, SingularSystemError, TotalReflection
from .figures import STORAGE_EXCITATION_HEADER, STORAGE_WEIGHTS_HEADER, Panel, build
from .stochastic import (
    ENSEMBLE_HEADER,
    Fixed,
    GaussianSites,
    LatticeDepthSpec,
    UniformInterval,
    ensemble_spectrum,
    rms_from_depth,
)
from .steady_state import SPECTRUM_HEADER, spectrum
from .storage import StorageConfig, run_storage_protocol
from .transfer_matrix import ANALYTIC_HEADER, analytic_rows

log = logging.getLogger("waveguide_atoms")

EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_SUBSYSTEMS = (
    (SingularSystemError, "steady_state"),
    (IntegrationError, "dynamics"),
    (PoleError, "transfer_matrix"),
    (TotalReflection, "transfer_matrix"),
    (np.linalg.LinAlgError, "eigenmodes"),
    (ZeroDivisionError, "transfer_matrix"),
)


@dataclass
class Output:
    name: str
    header: tuple[str, ...]
    rows: list
    panel: Panel | None = None


@dataclass
class RunResult:
    stem: str
    outputs: list[Output] = field(default_factory=list)


def _params(cfg: RunConfig) -> WaveguideParams:
    return WaveguideParams.from_ratio(cfg.gamma_ratio)


def _grid(cfg: RunConfig) -> np.ndarray:
    return np.linspace(cfg.delta_min, cfg.delta_max, cfg.delta_steps)


def _array(cfg: RunConfig) -> AtomArray:
    det = 0.0 if cfg.detunings is None else (cfg.detunings[0] if len(cfg.detunings) == 1 else cfg.detunings)
    if cfg.positions is not None:
        return AtomArray(cfg.positions, det)
    return LatticeSpec(cfg.n_atoms, cfg.spacing, cfg.origin).to_array(det)


def run_spectrum(cfg: RunConfig) -> RunResult:
    table = spectrum(_array(cfg), _params(cfg), DriveField(cfg.drive), _grid(cfg), threads=cfg.threads)
    return RunResult("spectrum", [Output("spectrum.csv", SPECTRUM_HEADER, list(table.csv_rows()))])


def run_eigen(cfg: RunConfig) -> RunResult:
    params = _params(cfg)
    spacings = np.linspace(cfg.eigen_param_min, cfg.eigen_param_max, cfg.eigen_steps)
    arrays = [LatticeSpec(cfg.n_atoms, d, cfg.origin).to_array() for d in spacings]
    scan = eigen_scan(arrays, params, spacings, cfg.threads)
    return RunResult("eigen", [Output("eigen.csv", EIGEN_SCAN_HEADER, list(eigen_scan_rows(scan, params)))])


def run_evolve(cfg: RunConfig) -> RunResult:
    params = _params(cfg)
    array = _array(cfg)
    n = array.n_atoms
    if cfg.evolve_initial == "zero":
        b0 = np.zeros(n, dtype=complex)
    elif cfg.evolve_initial == "uniform":
        b0 = np.ones(n, dtype=complex) / np.sqrt(n)
    else:
        b0 = (-1.0) ** np.arange(n) / np.sqrt(n) + 0j
    traj = evolve(
        array,
        params,
        drive_schedule=DriveSchedule.constant(cfg.drive),
        b0=b0,
        t_span=(0.0, cfg.evolve_t_end),
        tol=cfg.evolve_tol,
        n_samples=cfg.evolve_samples,
        modes=decompose(array, params),
    )
    return RunResult("evolve", [Output("trajectory.csv", tuple(traj.header()), list(traj.csv_rows(params.gamma_w)))])


def _storage_config(cfg: RunConfig) -> StorageConfig:
    return StorageConfig(
        n_atoms=cfg.n_atoms,
        drive_amplitude=cfg.drive,
        detunings=cfg.storage_detunings,
        switch_time=cfg.storage_switch_time,
        ramp=cfg.storage_ramp,
        horizon=cfg.storage_horizon,
        spacing=cfg.spacing,
        n_samples=cfg.storage_samples,
    )


def run_storage(cfg: RunConfig) -> RunResult:
    params = _params(cfg)
    scfg = _storage_config(cfg)
    run = run_storage_protocol(scfg, params)
    ref = run_storage_protocol(scfg, params, comparison=True)
    t = run.trajectory
    header = ("t_gw", "total_excitation") + tuple(f"L{j + 1}" for j in range(scfg.n_atoms))
    weights = [(ti, e, *w) for ti, e, w in zip(t.times, t.total_excitation, t.mode_weights)]
    exc = list(zip(t.times, run.normalized_excitation, ref.normalized_excitation))
    return RunResult(
        "storage",
        [
            Output("storage_weights.csv", header, weights),
            Output("storage_excitation.csv", STORAGE_EXCITATION_HEADER, exc),
        ],
    )


def _position_model(cfg: RunConfig):
    if cfg.ensemble_model == "fixed":
        return Fixed()
    if cfg.ensemble_model == "uniform":
        return UniformInterval(cfg.ensemble_interval)
    if cfg.ensemble_depth is not None:
        return GaussianSites(rms_from_depth(LatticeDepthSpec(cfg.spacing, cfg.ensemble_depth)))
    return GaussianSites(cfg.ensemble_rms)


def run_ensemble(cfg: RunConfig) -> RunResult:
    lattice = LatticeSpec(cfg.n_atoms, cfg.spacing, cfg.origin)
    res = ensemble_spectrum(
        _position_model(cfg),
        lattice,
        _params(cfg),
        DriveField(cfg.drive),
        _grid(cfg),
        cfg.ensemble_realizations,
        cfg.seed,
        cfg.threads,
    )
    if res.failures:
        log.warning("%d singular (realization, delta) solves were dropped from the average", len(res.failures))
    return RunResult("ensemble", [Output("ensemble.csv", ENSEMBLE_HEADER, list(res.csv_rows()))])


def run_analytic(cfg: RunConfig) -> RunResult:
    rows = list(analytic_rows(cfg.n_atoms, cfg.spacing, _grid(cfg), _params(cfg)))
    return RunResult("analytic", [Output("analytic.csv", ANALYTIC_HEADER, rows)])


def run_figure(cfg: RunConfig) -> RunResult:
    panels = build(cfg.figure, seed=cfg.seed, threads=cfg.threads)
    stem = f"fig{cfg.figure}"
    return RunResult(stem, [Output(f"fig{p.figure_id}.csv", p.header, p.rows, p) for p in panels])


RUNNERS = {
    "spectrum": run_spectrum,
    "eigen": run_eigen,
    "evolve": run_evolve,
    "storage": run_storage,
    "ensemble": run_ensemble,
    "analytic": run_analytic,
}


def execute(cfg: RunConfig) -> RunResult:
    """Compute every table of a run without touching the filesystem."""
    if cfg.figure is not None:
        return run_figure(cfg)
    return RUNNERS[cfg.kind](cfg)


def write_result(result: RunResult, cfg: RunConfig, out_dir) -> list[Path]:
    """Stage all files, then move them into ``out_dir`` together."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    meta = {
        "library": "waveguide_atoms",
        "version": __version__,
        "seed": cfg.seed,
        "config": cfg.to_dict(),
        "outputs": [o.name for o in result.outputs],
    }
    staged = tempfile.mkdtemp(prefix=".staging-", dir=out_dir)
    try:
        names = []
        for o in result.outputs:
            (Path(staged) / o.name).write_text(to_csv_text(o.header, o.rows), encoding="utf-8")
            names.append(o.name)
            if o.panel is not None and cfg.plot:
                from .plotting import render

                png = o.name.replace(".csv", ".png")
                render(o.panel, Path(staged) / png)
                names.append(png)
        meta["outputs"] = names
        meta_name = f"{result.stem}.meta.json"
        (Path(staged) / meta_name).write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        names.append(meta_name)
        final = []
        for name in names:
            target = out_dir / name
            shutil.move(str(Path(staged) / name), target)
            final.append(target)
        return final
    finally:
        shutil.rmtree(staged, ignore_errors=True)


def _global_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", default=argparse.SUPPRESS, help="YAML run configuration")
    parser.add_argument("--out", default=argparse.SUPPRESS, help="output directory (default: .)")
    parser.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="master seed (unsigned 64-bit)")
    parser.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker threads")


def _physics_flags(parser: argparse.ArgumentParser, grid: bool = True):
    parser.add_argument("--n", dest="n_atoms", type=int, default=argparse.SUPPRESS, help="number of atoms")
    parser.add_argument("--spacing", type=float, default=argparse.SUPPRESS, help="lattice spacing in wavelengths")
    parser.add_argument("--loss-ratio", dest="gamma_ratio", type=float, default=argparse.SUPPRESS, help="gamma_w/gamma_t")
    parser.add_argument("--drive", type=float, default=argparse.SUPPRESS, help="drive amplitude D_0")
    if grid:
        parser.add_argument("--delta-min", dest="delta.min", type=float, default=argparse.SUPPRESS)
        parser.add_argument("--delta-max", dest="delta.max", type=float, default=argparse.SUPPRESS)
        parser.add_argument("--delta-steps", dest="delta.steps", type=int, default=argparse.SUPPRESS)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="waveguide-atoms", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    _global_flags(parser)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", help="steady-state transmission/reflection spectrum")
    _global_flags(p)
    _physics_flags(p)
    p.add_argument("--positions", type=_floats, default=argparse.SUPPRESS, help="explicit positions, comma separated")
    p.add_argument("--detunings", type=_floats, default=argparse.SUPPRESS, help="per-atom detunings, comma separated")

    p = sub.add_parser("eigen", help="eigenmode scan over lattice spacing")
    _global_flags(p)
    _physics_flags(p, grid=False)
    p.add_argument("--spacing-min", dest="eigen.param_min", type=float, default=argparse.SUPPRESS)
    p.add_argument("--spacing-max", dest="eigen.param_max", type=float, default=argparse.SUPPRESS)
    p.add_argument("--spacing-steps", dest="eigen.steps", type=int, default=argparse.SUPPRESS)

    p = sub.add_parser("evolve", help="time evolution under constant detunings and drive")
    _global_flags(p)
    _physics_flags(p, grid=False)
    p.add_argument("--detunings", type=_floats, default=argparse.SUPPRESS)
    p.add_argument("--t-end", dest="evolve.t_end", type=float, default=argparse.SUPPRESS)
    p.add_argument("--tol", dest="evolve.tol", type=float, default=argparse.SUPPRESS)
    p.add_argument("--samples", dest="evolve.samples", type=int, default=argparse.SUPPRESS)
    p.add_argument("--initial", dest="evolve.initial", choices=("zero", "uniform", "alternating"), default=argparse.SUPPRESS)

    p = sub.add_parser("storage", help="subradiant storage protocol and its comparison run")
    _global_flags(p)
    _physics_flags(p, grid=False)
    p.add_argument("--switch-time", dest="storage.switch_time", type=float, default=argparse.SUPPRESS)
    p.add_argument("--ramp", dest="storage.ramp", type=float, default=argparse.SUPPRESS)
    p.add_argument("--horizon", dest="storage.horizon", type=float, default=argparse.SUPPRESS)
    p.add_argument("--detunings", dest="storage.detunings", type=_floats, default=argparse.SUPPRESS)
    p.add_argument("--samples", dest="storage.samples", type=int, default=argparse.SUPPRESS)

    p = sub.add_parser("ensemble", help="disorder-averaged transmission")
    _global_flags(p)
    _physics_flags(p)
    p.add_argument("--model", dest="ensemble.model", choices=("fixed", "gauss", "uniform"), default=argparse.SUPPRESS)
    p.add_argument("--rms", dest="ensemble.rms", type=float, default=argparse.SUPPRESS, help="rms width in wavelengths")
    p.add_argument("--depth", dest="ensemble.depth", type=float, default=argparse.SUPPRESS, help="lattice depth in recoils")
    p.add_argument("--interval", dest="ensemble.interval", type=float, default=argparse.SUPPRESS)
    p.add_argument("--realizations", dest="ensemble.realizations", type=int, default=argparse.SUPPRESS)

    p = sub.add_parser("analytic", help="closed-form lattice transmission with MFT and optical thickness")
    _global_flags(p)
    _physics_flags(p)

    p = sub.add_parser("figure", help="reproduce a figure panel by id")
    _global_flags(p)
    p.add_argument("figure", choices=sorted(FIGURE_KINDS), help="panel id")
    p.add_argument("--no-plot", dest="plot", action="store_false", default=argparse.SUPPRESS)
    return parser


_NON_CONFIG = {"command", "config", "verbose"}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Config file first, then command-line flags; the subcommand fixes the kind."""
    ns = vars(args)
    base = RunConfig()
    if "config" in ns:
        try:
            text = Path(ns["config"]).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError([f"--config: cannot read {ns['config']!r} ({exc.strerror})"]) from None
        base = parse_config(text)
    overrides = {k: v for k, v in ns.items() if k not in _NON_CONFIG}
    if args.command == "figure":
        overrides["figure"] = ns["figure"]
    else:
        overrides["kind"] = args.command
        if base.figure is not None:
            overrides["figure"] = None
    return from_mapping(overrides, base)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        result = execute(cfg)
    except Exception as exc:
        for kind, name in _SUBSYSTEMS:
            if isinstance(exc, kind):
                print(f"numerical failure in {name}: {exc}", file=sys.stderr)
                return EXIT_NUMERIC
        raise
    for path in write_result(result, cfg, cfg.out):
        log.info("wrote %s", path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
