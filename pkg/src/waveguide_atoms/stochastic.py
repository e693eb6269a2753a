"""Positional disorder and seeded Monte Carlo averages of the transmission.

Every realization ``r`` draws from its own Philox stream derived from
``SeedSequence(seed, spawn_key=(r,))``, so a realization's positions depend
only on ``(seed, r)`` and never on which worker ran it. Sums over
realizations are taken in realization order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import AtomArray, DriveField, LatticeSpec, WaveguideParams
from .csvio import write_csv
from .parallel import parallel_map
from .steady_state import scattering_on_grid

ENSEMBLE_HEADER = ("delta_over_gw", "mean_T", "stderr_T", "mean_coherent_T")


@dataclass(frozen=True)
class Fixed:
    """Atoms sit exactly on the lattice sites."""

    def sample(self, lattice: LatticeSpec, rng: np.random.Generator) -> np.ndarray:
        return lattice.sites()


@dataclass(frozen=True)
class GaussianSites:
    """Independent, untruncated Gaussian displacement of rms ``rms`` around each site."""

    rms: float

    def __post_init__(self):
        if not (math.isfinite(self.rms) and self.rms >= 0):
            raise ValueError("rms width must be finite and non-negative")

    def sample(self, lattice: LatticeSpec, rng: np.random.Generator) -> np.ndarray:
        sites = lattice.sites()
        if self.rms == 0:
            return sites
        return sites + rng.normal(0.0, self.rms, size=sites.size)


@dataclass(frozen=True)
class UniformInterval:
    """Independent uniform positions on ``[x_1, x_1 + length]``, sorted."""

    length: float

    def __post_init__(self):
        if not (math.isfinite(self.length) and self.length > 0):
            raise ValueError("interval length must be positive")

    def sample(self, lattice: LatticeSpec, rng: np.random.Generator) -> np.ndarray:
        x = lattice.origin + rng.uniform(0.0, self.length, size=lattice.n_atoms)
        return np.sort(x)


PositionModel = Fixed | GaussianSites | UniformInterval


@dataclass(frozen=True)
class LatticeDepthSpec:
    """Lattice spacing ``d`` and depth ``s`` in units of the recoil energy ``pi^2 hbar^2/(2 m d^2)``."""

    spacing: float
    depth: float

    def __post_init__(self):
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")
        if not self.depth > 0:
            raise ValueError("lattice depth must be positive")


def rms_from_depth(spec: LatticeDepthSpec) -> float:
    """Ground-state rms width ``d s^{-1/4} / (sqrt(2) pi)`` of a lattice site."""
    return spec.spacing * spec.depth**-0.25 / (math.sqrt(2.0) * math.pi)


def depth_from_rms(spacing: float, rms: float) -> float:
    """Inverse of :func:`rms_from_depth`: ``s = (d / (sqrt(2) pi rms))^4``."""
    if not (spacing > 0 and rms > 0):
        raise ValueError("spacing and rms must be positive")
    return (spacing / (math.sqrt(2.0) * math.pi * rms)) ** 4


def realization_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def sample_positions(model: PositionModel, lattice: LatticeSpec, rng: np.random.Generator) -> np.ndarray:
    return model.sample(lattice, rng)


@dataclass
class EnsembleResult:
    detunings: np.ndarray
    mean_T: np.ndarray
    stderr_T: np.ndarray
    mean_coherent_T: np.ndarray
    n_realizations: int
    seed: int
    gamma_w: float = 1.0
    failures: list[tuple[int, float]] = field(default_factory=list)

    def csv_rows(self):
        for i, d in enumerate(self.detunings):
            yield (d / self.gamma_w, self.mean_T[i], self.stderr_T[i], self.mean_coherent_T[i])

    def to_csv(self, path):
        return write_csv(path, ENSEMBLE_HEADER, self.csv_rows())


def ensemble_spectrum(
    model: PositionModel,
    lattice: LatticeSpec,
    params: WaveguideParams,
    drive: DriveField,
    grid,
    n_realizations: int,
    seed: int = 0,
    threads: int = 1,
) -> EnsembleResult:
    """Average ``|t|^2`` over independent position draws.

    A singular solve at some grid point drops that realization from the
    average at that point only; the ``(realization, delta)`` pairs are
    reported in ``failures``. ``mean_coherent_T`` is ``|<t>|^2``.
    """
    if int(n_realizations) != n_realizations or n_realizations < 1:
        raise ValueError("n_realizations must be a positive integer")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("detuning grid must be a nonempty 1D sequence")

    def one(r: int):
        x = sample_positions(model, lattice, realization_rng(seed, r))
        t, _, ok = scattering_on_grid(AtomArray(x), params, drive, grid)
        return t, ok

    results = parallel_map(one, range(int(n_realizations)), threads)
    t_all = np.array([res[0] for res in results])
    ok_all = np.array([res[1] for res in results])
    failures = [(int(r), float(grid[i])) for r, i in zip(*np.nonzero(~ok_all))]

    power = np.abs(t_all) ** 2
    count = ok_all.sum(axis=0)
    # offsets from the first valid sample keep identical realizations exact
    first = np.argmax(ok_all, axis=0)
    cols = np.arange(grid.size)
    t_ref, p_ref = t_all[first, cols], power[first, cols]
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_t = p_ref + np.where(ok_all, power - p_ref, 0.0).sum(axis=0) / count
        dev = np.where(ok_all, power - mean_t, 0.0)
        var = (dev**2).sum(axis=0) / (count - 1)
        stderr = np.where(count > 1, np.sqrt(var / count), np.where(count == 1, 0.0, np.nan))
        coherent = np.abs(t_ref + np.where(ok_all, t_all - t_ref, 0.0).sum(axis=0) / count) ** 2
    mean_t = np.where(count > 0, mean_t, np.nan)
    coherent = np.where(count > 0, coherent, np.nan)
    return EnsembleResult(
        detunings=grid,
        mean_T=mean_t,
        stderr_T=stderr,
        mean_coherent_T=coherent,
        n_realizations=int(n_realizations),
        seed=seed,
        gamma_w=params.gamma_w,
        failures=failures,
    )
