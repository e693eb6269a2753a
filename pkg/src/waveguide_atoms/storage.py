"""Light storage in the zero-linewidth modes of a one-wavelength lattice.

Phase 1 drives the lattice with unequal detunings whose inverses sum to
zero, which makes the steady state purely subradiant. At ``switch_time``
the detunings and the drive are ramped linearly to zero over the same
window; the excitation is then left in modes that no longer radiate.

The reduced two-mode model tracks the superradiant amplitude ``c1`` and the
amplitude ``c'`` of the unit-normalized subradiant combination
``u = (v_2 + ... + v_N)/|v_2 + ... + v_N|``. For one detuned atom and the
rest sharing a common detuning the pair ``(v_1, u)`` spans an invariant
subspace, so the reduced model reproduces the full dynamics exactly.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .core import AtomArray, DriveField, LatticeSpec, WaveguideParams, build_evolution_matrix, drive_vector
from .dynamics import _ATOL_FLOOR, DetuningSchedule, DriveSchedule, Trajectory, evolve
from .eigenmodes import EigenmodeSet, canonical_basis_wavelength_lattice, half_wave_sign_map, wavelength_lattice_modes
from .errors import IntegrationError

log = logging.getLogger(__name__)

INVERSE_SUM_TOL = 1e-9


def default_detunings(n_atoms: int, gamma_w: float = 1.0) -> np.ndarray:
    """``Delta_2..N = -2 gamma_w`` and ``Delta_1`` chosen so the inverses sum to zero (2/3 for N=4)."""
    if n_atoms < 2:
        raise ValueError("the protocol needs at least two atoms")
    det = np.full(n_atoms, -2.0 * gamma_w)
    det[0] = 2.0 * gamma_w / (n_atoms - 1)
    return det


@dataclass
class StorageConfig:
    n_atoms: int = 4
    drive_amplitude: complex = 1.0
    detunings: np.ndarray | None = None
    switch_time: float = 6.0
    ramp: float = 0.2
    horizon: float | None = None
    spacing: float = 1.0
    n_samples: int = 801
    tol: float = 1e-10

    def __post_init__(self):
        if self.detunings is None:
            self.detunings = default_detunings(self.n_atoms)
        self.detunings = np.asarray(self.detunings, dtype=float)
        if self.detunings.shape != (self.n_atoms,):
            raise ValueError("need one phase-1 detuning per atom")
        if self.horizon is None:
            self.horizon = self.switch_time + self.ramp + 10.0
        if not self.switch_time > 0:
            raise ValueError("switch_time must be positive")
        if not self.ramp >= 0:
            raise ValueError("ramp must be non-negative")
        if not self.horizon > self.switch_time + self.ramp:
            raise ValueError("horizon must extend past the end of the ramp")

    @property
    def ramp_end(self) -> float:
        return self.switch_time + self.ramp


@dataclass
class TwoModeState:
    c1: complex
    cprime: complex


@dataclass
class TwoModeTrajectory:
    times: np.ndarray
    c1: np.ndarray
    cprime: np.ndarray

    def state(self, i: int) -> TwoModeState:
        return TwoModeState(complex(self.c1[i]), complex(self.cprime[i]))


@dataclass
class StorageRun:
    """Protocol trajectory plus the steady-state excitation used for normalization."""

    config: StorageConfig
    trajectory: Trajectory
    steady_state: np.ndarray
    comparison: bool = False
    signs: np.ndarray = field(default=None, repr=False)

    @property
    def steady_excitation(self) -> float:
        return float(np.sum(np.abs(self.steady_state) ** 2))

    @property
    def normalized_excitation(self) -> np.ndarray:
        return self.trajectory.total_excitation / self.steady_excitation


def check_inverse_sum(detunings, gamma_w: float = 1.0) -> float:
    """``sum_i gamma_w / Delta_i``; zero is the condition for a purely subradiant steady state."""
    det = np.asarray(detunings, dtype=float)
    if np.any(det == 0):
        raise ValueError("all detunings must be nonzero")
    return float(np.sum(gamma_w / det))


def _lattice(config: StorageConfig, params: WaveguideParams, detunings) -> AtomArray:
    return LatticeSpec(config.n_atoms, config.spacing * params.wavelength).to_array(detunings)


def _steady_state_min_norm(array: AtomArray, params: WaveguideParams, drive: DriveField) -> np.ndarray:
    # Undriven dark modes start empty, so the reachable steady state is the minimum-norm solution.
    a = build_evolution_matrix(array, params)
    f = drive_vector(array, params, drive)
    sol, *_ = np.linalg.lstsq(a, -f, rcond=None)
    return sol


def run_storage_protocol(config: StorageConfig, params: WaveguideParams, comparison: bool = False) -> StorageRun:
    """Run the storage protocol (or, with ``comparison=True``, the all-resonant reference run).

    Starts from ``b = 0``. Weights are tracked against the canonical
    one-wavelength basis, sign-mapped when the spacing is a half-wavelength
    multiple.
    """
    det1 = np.zeros(config.n_atoms) if comparison else config.detunings
    if not comparison:
        resid = check_inverse_sum(det1, params.gamma_w)
        if abs(resid) > INVERSE_SUM_TOL:
            log.warning("phase-1 detunings do not satisfy the inverse-sum condition (residual %.3g)", resid)
    array = _lattice(config, params, det1)
    signs = half_wave_sign_map(array, params).signs
    modes = wavelength_lattice_modes(config.n_atoms, params, signs=signs)

    ts, te = config.switch_time, config.ramp_end
    if config.ramp > 0:
        times = np.array([ts, te])
        det_values = np.vstack([det1, np.zeros_like(det1)])
        drive_values = np.array([config.drive_amplitude, 0.0])
    else:
        # instantaneous switch: collapse the ramp onto a tiny window so breakpoints stay increasing
        eps = 1e-12 * max(1.0, ts)
        times = np.array([ts, ts + eps])
        det_values = np.vstack([det1, np.zeros_like(det1)])
        drive_values = np.array([config.drive_amplitude, 0.0])
    det_schedule = DetuningSchedule(times, det_values)
    drive_schedule = DriveSchedule(times, drive_values)
    t_eval = np.linspace(0.0, config.horizon, config.n_samples)
    traj = evolve(
        array,
        params,
        det_schedule,
        drive_schedule,
        t_span=(0.0, config.horizon),
        tol=config.tol,
        t_eval=t_eval,
        modes=modes,
    )
    steady = _steady_state_min_norm(array, params, DriveField(config.drive_amplitude))
    return StorageRun(config, traj, steady, comparison, signs)


def phase_one_steady_state(config: StorageConfig, params: WaveguideParams) -> np.ndarray:
    """Steady state of the phase-1 configuration (full solve, minimum-norm if singular)."""
    array = _lattice(config, params, config.detunings)
    return _steady_state_min_norm(array, params, DriveField(config.drive_amplitude))


def subradiant_combination(n_atoms: int) -> np.ndarray:
    """Unit vector along ``v_2 + ... + v_N`` of the canonical basis."""
    basis = canonical_basis_wavelength_lattice(n_atoms)
    u = basis[1:].sum(axis=0)
    return u / np.linalg.norm(u)


def project_two_mode(b, n_atoms: int | None = None, signs=None) -> TwoModeState:
    """``c1 = v_1^T b`` and ``c' = u^T b`` with ``u`` the unit subradiant combination."""
    b = np.asarray(b, dtype=complex)
    n = b.shape[-1] if n_atoms is None else n_atoms
    if b.shape[-1] != n:
        raise ValueError(f"expected a state of length {n}, got {b.shape[-1]}")
    if signs is not None:
        b = np.asarray(signs) * b
    v1 = canonical_basis_wavelength_lattice(n)[0]
    u = subradiant_combination(n)
    c1 = b @ v1
    cp = b @ u
    if np.ndim(c1) == 0:
        return TwoModeState(complex(c1), complex(cp))
    return TwoModeTrajectory(np.arange(np.size(c1), dtype=float), c1, cp)


def two_mode_coefficients(detunings, params: WaveguideParams) -> dict[str, float]:
    """Couplings of the reduced model for a detuning pattern on a lossless lattice.

    Returns ``detuning_shift`` (``Delta'``), ``kappa``, ``sub_shift`` (the
    diagonal shift of ``c'``) and ``upsilon1``. For ``(2/3, -2, -2, -2)``
    these are ``-4/3``, ``-2/sqrt(3)``, ``0`` and ``4`` (units of ``gamma_w``).
    """
    det = np.asarray(detunings, dtype=float)
    n = det.size
    v1 = canonical_basis_wavelength_lattice(n)[0]
    u = subradiant_combination(n)
    return {
        "detuning_shift": float(v1 @ (det * v1)),
        "kappa": float(u @ (det * v1)),
        "sub_shift": float(u @ (det * u)),
        "upsilon1": params.gamma_t + (n - 1) * params.gamma_w,
    }


def two_mode_evolve(
    params: WaveguideParams,
    drive: DriveField,
    t_span: tuple[float, float],
    tol: float = 1e-10,
    delta: float = 0.0,
    detuning_shift: float | None = None,
    kappa: float | None = None,
    upsilon1: float | None = None,
    sub_shift: float = 0.0,
    n_atoms: int = 4,
    c0: TwoModeState | None = None,
    t_eval=None,
) -> TwoModeTrajectory:
    """Integrate the reduced superradiant/subradiant model.

    ``dc1/dt = i(Delta + Delta' + i upsilon1) c1 + i kappa c' + F1`` and
    ``dc'/dt = i(Delta + sub_shift) c' + i kappa c1``. Defaults are the
    four-atom values ``Delta' = -4/3``, ``kappa = -2/sqrt(3)``,
    ``upsilon1 = 4`` in units of ``gamma_w``. ``F1 = v_1^T F`` for a lattice of
    one-wavelength spacing starting at ``x = 0``.
    """
    gw = params.gamma_w
    if detuning_shift is None:
        detuning_shift = -4.0 * gw / 3.0
    if kappa is None:
        kappa = -2.0 * gw / math.sqrt(3.0)
    if upsilon1 is None:
        upsilon1 = params.gamma_t + (n_atoms - 1) * gw
    f1 = math.sqrt(n_atoms) * (2j * gw / params.k) * drive.amplitude
    y0 = np.zeros(2, dtype=complex) if c0 is None else np.array([c0.c1, c0.cprime], dtype=complex)
    m = np.array(
        [[1j * (delta + detuning_shift + 1j * upsilon1), 1j * kappa], [1j * kappa, 1j * (delta + sub_shift)]]
    )
    src = np.array([f1, 0.0])

    def rhs(t, y):
        return m @ y + src

    if t_eval is None:
        t_eval = np.linspace(t_span[0], t_span[1], 201)
    atol = max(tol * 1e-6 * max(abs(f1) / gw, np.max(np.abs(y0))), _ATOL_FLOOR)
    sol = solve_ivp(rhs, t_span, y0, method="DOP853", rtol=tol, atol=atol, t_eval=t_eval)
    if sol.status != 0:
        raise IntegrationError(sol.message, float(sol.t[-1]) if sol.t.size else t_span[0])
    return TwoModeTrajectory(sol.t, sol.y[0], sol.y[1])


def two_mode_steady_state(params: WaveguideParams, drive: DriveField, delta: float, n_atoms: int = 4, **kw) -> TwoModeState:
    """Closed-form steady state of the reduced model (requires ``delta + sub_shift != 0``)."""
    gw = params.gamma_w
    dp = kw.get("detuning_shift", -4.0 * gw / 3.0)
    kappa = kw.get("kappa", -2.0 * gw / math.sqrt(3.0))
    ups = kw.get("upsilon1", params.gamma_t + (n_atoms - 1) * gw)
    sub = delta + kw.get("sub_shift", 0.0)
    if sub == 0:
        raise ValueError("the reduced steady state needs a nonzero subradiant detuning")
    f1 = math.sqrt(n_atoms) * (2j * gw / params.k) * drive.amplitude
    c1 = 1j * f1 / (delta + dp + 1j * ups - kappa**2 / sub)
    return TwoModeState(complex(c1), complex(-kappa * c1 / sub))
