"""Physical parameters, the 1D Green's function and the coupled-dipole matrix.

Units: unless a caller says otherwise, rates are measured in units of the
waveguide decay rate ``gamma_w`` and lengths in units of the wavelength, so
the default wavenumber is ``k = 2*pi``. All amplitudes are slowly varying
(the drive frequency has been factored out).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class WaveguideParams:
    """Decay rates and wavenumber.

    Parameters
    ----------
    gamma_w : float
        Decay rate into the guided mode.
    gamma_t : float
        Total single-atom linewidth, ``gamma_w`` plus losses out of the guide.
    k : float
        Wavenumber of the guided light, ``2*pi/lambda``.
    """

    gamma_w: float = 1.0
    gamma_t: float = 1.0
    k: float = TWO_PI

    def __post_init__(self):
        for name in ("gamma_w", "gamma_t", "k"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.gamma_w <= 0:
            raise ValueError("gamma_w must be positive")
        if self.k <= 0:
            raise ValueError("k must be positive")
        if self.gamma_t < self.gamma_w:
            raise ValueError("gamma_w must not exceed gamma_t")

    @classmethod
    def from_ratio(cls, ratio: float = 1.0, gamma_w: float = 1.0, k: float = TWO_PI) -> "WaveguideParams":
        """Build from the guided fraction ``gamma_w/gamma_t`` (1 means lossless)."""
        if not 0 < ratio <= 1:
            raise ValueError("gamma_w must not exceed gamma_t (ratio must lie in (0, 1])")
        return cls(gamma_w=gamma_w, gamma_t=gamma_w / ratio, k=k)

    @property
    def gamma_l(self) -> float:
        return self.gamma_t - self.gamma_w

    @property
    def wavelength(self) -> float:
        return TWO_PI / self.k

    @property
    def lossless(self) -> bool:
        return self.gamma_l == 0.0


@dataclass(frozen=True, eq=False)
class AtomArray:
    """Atom positions and per-atom detunings ``Delta_j = Omega - (omega_0 + delta_omega_j)``.

    Positions are sorted on construction. ``order[i]`` is the index, in the
    caller's original list, of the atom now stored at slot ``i``; detunings
    are permuted with their atoms.
    """

    positions: np.ndarray
    detunings: np.ndarray
    order: np.ndarray = field(repr=False)

    def __init__(self, positions, detunings=0.0):
        x = np.atleast_1d(np.asarray(positions, dtype=float)).copy()
        if x.ndim != 1 or x.size < 1:
            raise ValueError("positions must be a non-empty 1D sequence")
        det = np.asarray(detunings, dtype=float)
        if det.ndim == 0:
            det = np.full(x.shape, float(det))
        det = det.copy()
        if det.shape != x.shape:
            raise ValueError(f"got {x.size} positions but {det.size} detunings")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(det))):
            raise ValueError("positions and detunings must be finite")
        order = np.argsort(x, kind="stable")
        x, det = x[order], det[order]
        x.flags.writeable = False
        det.flags.writeable = False
        order.flags.writeable = False
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "detunings", det)
        object.__setattr__(self, "order", order)

    def __len__(self) -> int:
        return self.positions.size

    @property
    def n_atoms(self) -> int:
        return self.positions.size

    def with_detunings(self, detunings) -> "AtomArray":
        """Same positions (already sorted) with new detunings given in sorted order."""
        return AtomArray(self.positions, detunings)

    def shifted(self, offset: float) -> "AtomArray":
        """Add a common detuning offset to every atom."""
        return AtomArray(self.positions, self.detunings + offset)

    def __repr__(self):
        return f"AtomArray(positions={self.positions.tolist()!r}, detunings={self.detunings.tolist()!r})"


@dataclass(frozen=True)
class LatticeSpec:
    """Equidistant sites ``x_j = origin + j*spacing`` for ``j = 0..n_atoms-1``."""

    n_atoms: int
    spacing: float
    origin: float = 0.0

    def __post_init__(self):
        if int(self.n_atoms) != self.n_atoms or self.n_atoms < 1:
            raise ValueError("n_atoms must be a positive integer")
        if not self.spacing > 0:
            raise ValueError("spacing must be positive")

    def sites(self) -> np.ndarray:
        return self.origin + self.spacing * np.arange(self.n_atoms)

    def to_array(self, detunings=0.0) -> AtomArray:
        return AtomArray(self.sites(), detunings)


@dataclass(frozen=True)
class DriveField:
    """Incident plane wave ``D_0 exp(i k x)``."""

    amplitude: complex = 1.0

    def __post_init__(self):
        if not np.isfinite(self.amplitude):
            raise ValueError("drive amplitude must be finite")

    def at(self, x, k: float):
        return self.amplitude * np.exp(1j * k * np.asarray(x, dtype=float))


@dataclass(frozen=True)
class DipoleCouplingInputs:
    reduced_dipole: float
    mode_radius: float
    k: float
    hbar: float = 1.054571817e-34
    epsilon_0: float = 8.8541878128e-12

    def __post_init__(self):
        for name in ("reduced_dipole", "mode_radius", "k", "hbar", "epsilon_0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


def green_function(x, k: float):
    """1D Helmholtz Green's function ``(ik/2) exp(ik|x|)``."""
    return 0.5j * k * np.exp(1j * k * np.abs(x))


def polarizability(delta, params: WaveguideParams):
    """Single-atom polarizability ``-2 gamma_w / (k (Delta + i gamma_t))``."""
    return -2.0 * params.gamma_w / (params.k * (np.asarray(delta) + 1j * params.gamma_t))


def eta(delta, params: WaveguideParams):
    """``eta = i alpha k / 2 = gamma_w / (i Delta - gamma_t)``; also the single-atom reflection amplitude."""
    return params.gamma_w / (1j * np.asarray(delta) - params.gamma_t)


def propagation_phases(positions, k: float) -> np.ndarray:
    """Matrix of ``exp(ik|x_j - x_l|)``."""
    x = np.asarray(positions, dtype=float)
    return np.exp(1j * k * np.abs(x[:, None] - x[None, :]))


def build_evolution_matrix(array: AtomArray, params: WaveguideParams) -> np.ndarray:
    """Matrix ``A`` of ``db/dt = A b + F``.

    Diagonal ``i Delta_j - gamma_t``; off-diagonal ``-gamma_w exp(ik|x_j - x_l|)``.
    The self term is never built from the Green's function. Coincident atoms
    are allowed and couple with phase 1.
    """
    a = -params.gamma_w * propagation_phases(array.positions, params.k)
    np.fill_diagonal(a, 1j * array.detunings - params.gamma_t)
    return a


def drive_vector(array: AtomArray, params: WaveguideParams, drive: DriveField) -> np.ndarray:
    """``F_j = (2 i gamma_w / k) D_0 exp(i k x_j)``."""
    return (2j * params.gamma_w / params.k) * drive.at(array.positions, params.k)


def derive_gamma_w(inputs: DipoleCouplingInputs) -> float:
    """Guided decay rate ``k D^2 / (2 pi xi^2 hbar epsilon_0)`` from the dipole element and mode radius."""
    return inputs.k * inputs.reduced_dipole**2 / (
        TWO_PI * inputs.mode_radius**2 * inputs.hbar * inputs.epsilon_0
    )
