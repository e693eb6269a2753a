"""Named figure presets.

Each recipe is a pure function of ``(seed, threads)`` and returns one
:class:`Panel`, a table that is written as one CSV. Multi-curve panels carry
a leading ``curve`` label column. Lengths are in wavelengths and rates in
``gamma_w`` throughout.

Lossless lattices at half-wavelength multiples have a dark mode that makes
the steady state singular exactly at ``Delta = 0``; spectral grids therefore
use an even number of points, which keeps zero off the grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import AtomArray, DriveField, LatticeSpec, WaveguideParams
from .eigenmodes import EIGEN_SCAN_HEADER, classify, eigen_scan
from .stochastic import ENSEMBLE_HEADER, Fixed, GaussianSites, UniformInterval, ensemble_spectrum
from .steady_state import SPECTRUM_HEADER, spectrum
from .storage import StorageConfig, run_storage_protocol

SPECTRUM_GRID = np.linspace(-5.0, 5.0, 1000)
ENSEMBLE_GRID = np.linspace(-4.0, 4.0, 400)
FIG6_REALIZATIONS = 400

STORAGE_WEIGHTS_HEADER = ("t_gw", "total_excitation", "L1", "L2", "L3", "L4")
STORAGE_EXCITATION_HEADER = ("t_gw", "protocol", "comparison")


@dataclass
class Panel:
    figure_id: str
    header: tuple[str, ...]
    rows: list[tuple]
    style: str
    title: str = ""
    meta: dict = field(default_factory=dict)


def _labelled(label: str, rows):
    return [(label, *row) for row in rows]


def _spectrum_panel(figure_id: str, title: str, curves, params: WaveguideParams, grid, threads: int) -> Panel:
    rows = []
    for label, array in curves:
        table = spectrum(array, params, DriveField(1.0), grid, threads=threads)
        rows += _labelled(label, table.csv_rows())
    return Panel(figure_id, ("curve",) + SPECTRUM_HEADER, rows, "spectrum", title)


def _lattice(n: int, d: float) -> AtomArray:
    return LatticeSpec(n, d).to_array()


def _eigen_rows(scan, params, select):
    rows = []
    for g, modes in scan:
        labels = classify(modes, params)
        for n in select(modes):
            rows.append((float(g), n, modes.shifts[n], modes.linewidths[n], labels[n] == "superradiant"))
    return rows


def fig1_modes(symmetric: bool, threads: int = 1) -> Panel:
    params = WaveguideParams()
    seps = np.linspace(0.01, 1.0, 100)
    scan = eigen_scan([AtomArray([0.0, s]) for s in seps], params, seps, threads)
    sign = 1.0 if symmetric else -1.0

    def pick(modes):
        # the pair is (1, +-1)/sqrt(2) at every separation; select by symmetry
        v = modes.eigenvectors
        return [int(np.argmax(np.abs(v[:, 0] + sign * v[:, 1])))]

    fid = "1b" if symmetric else "1a"
    title = "symmetric mode" if symmetric else "antisymmetric mode"
    return Panel(fid, EIGEN_SCAN_HEADER, _eigen_rows(scan, params, pick), "eigen", title)


def fig1c(threads: int = 1) -> Panel:
    curves = [(f"x12={s}", AtomArray([0.0, s])) for s in (0.5, 0.45, 0.35)]
    return _spectrum_panel("1c", "two atoms", curves, WaveguideParams(), SPECTRUM_GRID, threads)


def fig2_modes(index: int, threads: int = 1) -> Panel:
    params = WaveguideParams()
    x3 = np.linspace(0.41, 1.4, 100)
    scan = eigen_scan([AtomArray([0.0, 0.4, x]) for x in x3], params, x3, threads)
    fid = "2" + "abc"[index]
    return Panel(fid, EIGEN_SCAN_HEADER, _eigen_rows(scan, params, lambda m: [index]), "eigen", f"three atoms, mode {index}")


def fig2d(threads: int = 1) -> Panel:
    curves = [("x3=0.81", AtomArray([0.0, 0.4, 0.81]))]
    return _spectrum_panel("2d", "three atoms", curves, WaveguideParams(), SPECTRUM_GRID, threads)


def fig3(threads: int = 1) -> Panel:
    curves = [(f"N={n}", _lattice(n, 1.0)) for n in (2, 4, 8)]
    return _spectrum_panel("3", "one-wavelength lattice", curves, WaveguideParams(), SPECTRUM_GRID, threads)


def fig4(spacing: float, threads: int = 1) -> Panel:
    fid = "4a" if spacing == 0.25 else "4b"
    curves = [(f"N={n}", _lattice(n, spacing)) for n in (2, 4, 8)]
    grid = np.linspace(-4.0, 4.0, 2000)
    return _spectrum_panel(fid, f"lattice d={spacing}", curves, WaveguideParams(), grid, threads)


def fig5(threads: int = 1) -> tuple[Panel, Panel]:
    params = WaveguideParams()
    cfg = StorageConfig()
    run = run_storage_protocol(cfg, params)
    ref = run_storage_protocol(cfg, params, comparison=True)
    t = run.trajectory
    weights = [(ti, e, *w) for ti, e, w in zip(t.times, t.total_excitation, t.mode_weights)]
    exc = list(zip(t.times, run.normalized_excitation, ref.normalized_excitation))
    return (
        Panel("5a", STORAGE_WEIGHTS_HEADER, weights, "weights", "mode populations"),
        Panel("5b", STORAGE_EXCITATION_HEADER, exc, "excitation", "normalized total excitation"),
    )


def _ensemble_panel(figure_id: str, title: str, curves, params, seed: int, threads: int) -> Panel:
    rows = []
    for label, model, lattice in curves:
        res = ensemble_spectrum(model, lattice, params, DriveField(1.0), ENSEMBLE_GRID, FIG6_REALIZATIONS, seed, threads)
        rows += _labelled(label, res.csv_rows())
    return Panel(figure_id, ("curve",) + ENSEMBLE_HEADER, rows, "ensemble", title)


def fig6(spacing: float, seed: int = 0, threads: int = 1) -> Panel:
    lat = LatticeSpec(8, spacing)
    curves = [("fixed", Fixed(), lat)]
    curves += [(f"rms={r}", GaussianSites(r), lat) for r in (1 / 32, 1 / 16, 1 / 8)]
    curves.append(("uniform", UniformInterval(2.0), lat))
    fid = "6a" if spacing == 0.25 else "6b"
    return _ensemble_panel(fid, f"position fluctuations, d={spacing}", curves, WaveguideParams(), seed, threads)


def fig7(ratio: float, seed: int = 0, threads: int = 1) -> Panel:
    curves = [
        ("d=0.25", Fixed(), LatticeSpec(8, 0.25)),
        ("uniform", UniformInterval(2.0), LatticeSpec(8, 0.25)),
        ("d=0.5", Fixed(), LatticeSpec(8, 0.5)),
    ]
    fid = "7a" if ratio == 1.0 else "7b"
    return _ensemble_panel(fid, f"losses, gamma_w/gamma_t={ratio}", curves, WaveguideParams.from_ratio(ratio), seed, threads)


def build(figure_id: str, seed: int = 0, threads: int = 1) -> list[Panel]:
    """Panels for a figure id such as ``"4a"``; ``5a`` and ``5b`` come from one protocol run."""
    recipes = {
        "1a": lambda: [fig1_modes(False, threads)],
        "1b": lambda: [fig1_modes(True, threads)],
        "1c": lambda: [fig1c(threads)],
        "2a": lambda: [fig2_modes(0, threads)],
        "2b": lambda: [fig2_modes(1, threads)],
        "2c": lambda: [fig2_modes(2, threads)],
        "2d": lambda: [fig2d(threads)],
        "3": lambda: [fig3(threads)],
        "4a": lambda: [fig4(0.25, threads)],
        "4b": lambda: [fig4(0.4, threads)],
        "5a": lambda: [fig5(threads)[0]],
        "5b": lambda: [fig5(threads)[1]],
        "6a": lambda: [fig6(0.25, seed, threads)],
        "6b": lambda: [fig6(0.5, seed, threads)],
        "7a": lambda: [fig7(1.0, seed, threads)],
        "7b": lambda: [fig7(0.5, seed, threads)],
    }
    if figure_id not in recipes:
        raise KeyError(f"unknown figure id {figure_id!r}")
    return recipes[figure_id]()


FIGURE_IDS = ("1a", "1b", "1c", "2a", "2b", "2c", "2d", "3", "4a", "4b", "5a", "5b", "6a", "6b", "7a", "7b")
