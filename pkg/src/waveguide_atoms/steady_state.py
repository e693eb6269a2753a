"""Driven steady state of the coupled-dipole equations, fields and spectra.

Transmission and reflection amplitudes are referenced to the incident wave
with the free-propagation phase removed: beyond the array the field is
``t D_0 exp(ikx)``, before it the reflected part is ``r D_0 exp(-ikx)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg.lapack import zgecon, zgetrf

from .core import (
    AtomArray,
    DriveField,
    WaveguideParams,
    build_evolution_matrix,
    drive_vector,
    eta,
    green_function,
    polarizability,
    propagation_phases,
)
from .csvio import write_csv
from .errors import SingularSystemError
from .parallel import chunked, parallel_map

# Reciprocal condition number below which a steady-state system is treated as singular.
RCOND_MIN = 1e-13
_BATCH_MAX_N = 64

SPECTRUM_HEADER = ("delta_over_gw", "t_re", "t_im", "r_re", "r_im", "T", "R")


@dataclass(frozen=True)
class ScatteringCoefficients:
    t: complex
    r: complex

    @property
    def T(self) -> float:
        return abs(self.t) ** 2

    @property
    def R(self) -> float:
        return abs(self.r) ** 2


@dataclass
class SpectrumTable:
    """Transmission/reflection amplitudes on a strictly increasing detuning grid."""

    detunings: np.ndarray
    t: np.ndarray
    r: np.ndarray
    gamma_w: float = 1.0

    def __post_init__(self):
        self.detunings = np.asarray(self.detunings, dtype=float)
        self.t = np.asarray(self.t, dtype=complex)
        self.r = np.asarray(self.r, dtype=complex)
        if not (self.detunings.shape == self.t.shape == self.r.shape):
            raise ValueError("rows must match the detuning grid")
        if self.detunings.size > 1 and np.any(np.diff(self.detunings) <= 0):
            raise ValueError("detuning grid must be strictly increasing")

    @property
    def T(self) -> np.ndarray:
        return np.abs(self.t) ** 2

    @property
    def R(self) -> np.ndarray:
        return np.abs(self.r) ** 2

    @property
    def rows(self) -> list[ScatteringCoefficients]:
        return [ScatteringCoefficients(complex(a), complex(b)) for a, b in zip(self.t, self.r)]

    def csv_rows(self):
        d = self.detunings / self.gamma_w
        for i in range(d.size):
            t, r = self.t[i], self.r[i]
            yield (d[i], t.real, t.imag, r.real, r.imag, abs(t) ** 2, abs(r) ** 2)

    def to_csv(self, path):
        return write_csv(path, SPECTRUM_HEADER, self.csv_rows())


def _rcond(a: np.ndarray) -> np.ndarray:
    """Reciprocal 1-norm condition number ``1/(|A|_1 |A^-1|_1)`` for a stack of matrices."""
    norm = np.abs(a).sum(axis=-2).max(axis=-1)
    if a.shape[-1] <= _BATCH_MAX_N:
        try:
            inv = np.linalg.inv(a)
        except np.linalg.LinAlgError:
            inv = None
        if inv is not None:
            inv_norm = np.abs(inv).sum(axis=-2).max(axis=-1)
            with np.errstate(divide="ignore", invalid="ignore"):
                rc = 1.0 / (norm * inv_norm)
            return np.where(np.isfinite(rc), rc, 0.0)
    # exactly singular members (or large N): per-matrix LU and LAPACK's estimate
    out = np.empty(a.shape[:-2])
    for idx in np.ndindex(out.shape):
        lu, _, info = zgetrf(a[idx])
        out[idx] = 0.0 if info else zgecon(lu, norm[idx], norm="1")[0]
    return out


def solve_batch(a: np.ndarray, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Solve ``a[g] b[g] = -f`` for a stack of matrices by LU with partial pivoting.

    Returns ``(b, ok)``; rows of ``b`` where ``ok`` is False are NaN because the
    matrix was numerically singular.
    """
    a = np.asarray(a, dtype=complex)
    rc = _rcond(a)
    ok = rc > RCOND_MIN
    b = np.full(a.shape[:-1], np.nan + 0j)
    if np.any(ok):
        rhs = np.broadcast_to(-np.asarray(f, dtype=complex), b[ok].shape)
        b[ok] = np.linalg.solve(a[ok], rhs[..., None])[..., 0]
    return b, ok


def solve_steady(array: AtomArray, params: WaveguideParams, drive: DriveField) -> np.ndarray:
    """Dipole amplitudes ``b`` solving ``A b + F = 0``.

    Raises
    ------
    SingularSystemError
        If ``A`` is numerically singular (a zero-linewidth mode driven on resonance).
    """
    a = build_evolution_matrix(array, params)
    f = drive_vector(array, params, drive)
    b, ok = solve_batch(a[None], f)
    if not ok[0]:
        raise SingularSystemError("steady-state system is singular", rcond=float(_rcond(a[None])[0]))
    return b[0]


def steady_state_residual(b, array: AtomArray, params: WaveguideParams, drive: DriveField) -> float:
    """Relative residual of the self-consistent form ``P_j = alpha_j D(x_j) + eta_j sum_{l!=j} e^{ik|x_j-x_l|} P_l``."""
    b = np.asarray(b, dtype=complex)
    phases = propagation_phases(array.positions, params.k)
    np.fill_diagonal(phases, 0.0)
    rhs = polarizability(array.detunings, params) * drive.at(array.positions, params.k)
    rhs = rhs + eta(array.detunings, params) * (phases @ b)
    scale = max(np.linalg.norm(b), np.linalg.norm(rhs), np.finfo(float).tiny)
    return float(np.linalg.norm(b - rhs) / scale)


def total_field(b, array: AtomArray, params: WaveguideParams, drive: DriveField, x):
    """``epsilon_0 E(x)``: incident plane wave plus the field scattered by every dipole."""
    x = np.asarray(x, dtype=float)
    scattered = green_function(x[..., None] - array.positions, params.k) @ np.asarray(b, dtype=complex)
    return drive.at(x, params.k) + scattered


def _amplitudes(b, positions, k, d0):
    pref = 0.5j * k / d0
    t = 1.0 + pref * (b @ np.exp(-1j * k * positions))
    r = pref * (b @ np.exp(1j * k * positions))
    return t, r


def scattering_coefficients(b, array: AtomArray, params: WaveguideParams, drive: DriveField) -> ScatteringCoefficients:
    if drive.amplitude == 0:
        raise ValueError("transmission is undefined for zero drive amplitude")
    t, r = _amplitudes(np.asarray(b, dtype=complex), array.positions, params.k, drive.amplitude)
    return ScatteringCoefficients(complex(t), complex(r))


def scattering_on_grid(array: AtomArray, params: WaveguideParams, drive: DriveField, grid):
    """Amplitudes for every common detuning offset in ``grid``.

    Returns ``(t, r, ok)``; entries where ``ok`` is False failed as singular.
    """
    if drive.amplitude == 0:
        raise ValueError("transmission is undefined for zero drive amplitude")
    grid = np.asarray(grid, dtype=float)
    a0 = build_evolution_matrix(array, params)
    f = drive_vector(array, params, drive)
    stack = np.broadcast_to(a0, (grid.size,) + a0.shape).copy()
    idx = np.arange(a0.shape[0])
    stack[:, idx, idx] += 1j * grid[:, None]
    b, ok = solve_batch(stack, f)
    t, r = _amplitudes(b, array.positions, params.k, drive.amplitude)
    return t, r, ok


def spectrum(array: AtomArray, params: WaveguideParams, drive: DriveField, grid, threads: int = 1) -> SpectrumTable:
    """Steady-state spectrum; each grid value is added to every atom's own detuning.

    Raises
    ------
    SingularSystemError
        Tagged with the first grid point whose system is singular.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("detuning grid must be nonempty")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("detuning grid must be strictly increasing")
    parts = parallel_map(
        lambda s: scattering_on_grid(array, params, drive, grid[s]), chunked(grid.size, threads), threads
    )
    t = np.concatenate([p[0] for p in parts])
    r = np.concatenate([p[1] for p in parts])
    ok = np.concatenate([p[2] for p in parts])
    if not np.all(ok):
        bad = float(grid[np.argmin(ok)])
        raise SingularSystemError(f"steady-state system is singular at delta={bad!r}", delta=bad)
    return SpectrumTable(grid, t, r, gamma_w=params.gamma_w)
