"""Time evolution of ``db/dt = A(t) b + F(t)`` under piecewise-linear schedules."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .core import AtomArray, DriveField, WaveguideParams, build_evolution_matrix, drive_vector
from .csvio import write_csv
from .eigenmodes import EigenmodeSet, mode_weights
from .errors import IntegrationError

_ATOL_FLOOR = 1e-280


def _check_breakpoints(times) -> np.ndarray:
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if times.ndim != 1 or times.size < 1:
        raise ValueError("a schedule needs at least one breakpoint")
    if np.any(np.diff(times) <= 0):
        raise ValueError("breakpoints must be strictly increasing")
    if not np.all(np.isfinite(times)):
        raise ValueError("breakpoints must be finite")
    return times


@dataclass(frozen=True)
class DetuningSchedule:
    """Per-atom piecewise-linear detunings; ``values[i, j]`` is atom ``j`` at ``times[i]``.

    Held constant before the first and after the last breakpoint.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = _check_breakpoints(self.times)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[None, :]
        if values.shape[0] != times.size:
            raise ValueError("one row of detunings per breakpoint required")
        if not np.all(np.isfinite(values)):
            raise ValueError("detunings must be finite")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, detunings) -> "DetuningSchedule":
        return cls(np.array([0.0]), np.atleast_1d(np.asarray(detunings, dtype=float))[None, :])

    @property
    def n_atoms(self) -> int:
        return self.values.shape[1]

    def __call__(self, t: float) -> np.ndarray:
        return np.array([np.interp(t, self.times, self.values[:, j]) for j in range(self.n_atoms)])


@dataclass(frozen=True)
class DriveSchedule:
    """Piecewise-linear complex drive envelope ``D_0(t)``."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        times = _check_breakpoints(self.times)
        values = np.atleast_1d(np.asarray(self.values, dtype=complex))
        if values.shape != times.shape:
            raise ValueError("one drive value per breakpoint required")
        if not np.all(np.isfinite(values)):
            raise ValueError("drive values must be finite")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, amplitude: complex = 1.0) -> "DriveSchedule":
        return cls(np.array([0.0]), np.array([amplitude]))

    def __call__(self, t: float) -> complex:
        return complex(
            np.interp(t, self.times, self.values.real) + 1j * np.interp(t, self.times, self.values.imag)
        )


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    mode_weights: np.ndarray | None = None

    @property
    def total_excitation(self) -> np.ndarray:
        return np.sum(np.abs(self.states) ** 2, axis=-1)

    def at(self, t: float) -> np.ndarray:
        """State at a sampled time (exact match required)."""
        idx = np.flatnonzero(self.times == t)
        if idx.size == 0:
            raise KeyError(f"time {t!r} is not a sample point")
        return self.states[idx[0]]

    def header(self) -> list[str]:
        cols = ["t_gw", "total_excitation"]
        if self.mode_weights is not None:
            cols += [f"L{j + 1}" for j in range(self.mode_weights.shape[1])]
        return cols

    def csv_rows(self, gamma_w: float = 1.0, normalize: float = 1.0):
        exc = self.total_excitation / normalize
        for i, t in enumerate(self.times):
            row = [t * gamma_w, exc[i]]
            if self.mode_weights is not None:
                row += list(self.mode_weights[i])
            yield row

    def to_csv(self, path, gamma_w: float = 1.0, normalize: float = 1.0):
        return write_csv(path, self.header(), self.csv_rows(gamma_w, normalize))


def total_excitation(b) -> float:
    """``sum_j |P_j|^2``."""
    return float(np.sum(np.abs(np.asarray(b)) ** 2))


def evolve(
    array: AtomArray,
    params: WaveguideParams,
    det_schedule: DetuningSchedule | None = None,
    drive_schedule: DriveSchedule | None = None,
    b0=None,
    t_span: tuple[float, float] = (0.0, 10.0),
    tol: float = 1e-10,
    n_samples: int = 201,
    t_eval=None,
    modes: EigenmodeSet | None = None,
) -> Trajectory:
    """Integrate the dipole equations with adaptive Runge-Kutta (DOP853).

    Positions come from ``array``; detunings from ``det_schedule`` (default:
    the array's own, held constant); the drive envelope from
    ``drive_schedule`` (default: constant unit amplitude). Integration
    restarts at every schedule breakpoint, and every breakpoint inside
    ``t_span`` is a sample point. ``modes`` enables weight tracking against a
    fixed mode set.

    Raises
    ------
    IntegrationError
        If the step size underflows; carries the failing time.
    """
    t0, t1 = map(float, t_span)
    if not t0 < t1:
        raise ValueError("t_span must satisfy start < end")
    if not tol > 0:
        raise ValueError("tol must be positive")
    n = array.n_atoms
    if det_schedule is None:
        det_schedule = DetuningSchedule.constant(array.detunings)
    if det_schedule.n_atoms != n:
        raise ValueError("detuning schedule does not match the atom count")
    if drive_schedule is None:
        drive_schedule = DriveSchedule.constant(1.0)

    a0 = build_evolution_matrix(array.with_detunings(0.0), params)
    f_unit = drive_vector(array, params, DriveField(1.0))
    b = np.zeros(n, dtype=complex) if b0 is None else np.asarray(b0, dtype=complex).copy()
    if b.shape != (n,):
        raise ValueError("initial state has the wrong length")

    breaks = np.union1d(det_schedule.times, drive_schedule.times)
    inner = breaks[(breaks > t0) & (breaks < t1)]
    edges = np.concatenate([[t0], inner, [t1]])
    if t_eval is None:
        t_eval = np.linspace(t0, t1, n_samples)
    samples = np.union1d(np.asarray(t_eval, dtype=float), edges)
    samples = samples[(samples >= t0) & (samples <= t1)]

    scale = max(np.max(np.abs(b), initial=0.0), np.max(np.abs(f_unit)) * np.max(np.abs(drive_schedule.values)) / params.gamma_w)
    # floor keeps the error norm finite for zero or subnormal states
    atol = max(tol * 1e-6 * scale, _ATOL_FLOOR)

    states = np.empty((samples.size, n), dtype=complex)
    states[0] = b
    filled = 1
    for a, c in zip(edges[:-1], edges[1:]):
        da, dc = det_schedule(a), det_schedule(c)
        fa, fc = drive_schedule(a), drive_schedule(c)
        span = c - a

        def rhs(t, y, a=a, da=da, dc=dc, fa=fa, fc=fc, span=span):
            s = (t - a) / span
            det = da + s * (dc - da)
            amp = fa + s * (fc - fa)
            return a0 @ y + 1j * det * y + amp * f_unit

        seg = samples[(samples > a) & (samples <= c)]
        sol = solve_ivp(rhs, (a, c), b, method="DOP853", rtol=tol, atol=atol, t_eval=seg)
        if sol.status != 0:
            failed = float(sol.t[-1]) if sol.t.size else a
            raise IntegrationError(sol.message, failed)
        states[filled : filled + seg.size] = sol.y.T
        filled += seg.size
        # segment ends are always sample points, so the last column is b(c)
        b = sol.y[:, -1]

    weights = None
    if modes is not None:
        weights = np.array([_safe_weights(modes, s) for s in states])
    return Trajectory(samples, states, weights)


def _safe_weights(modes: EigenmodeSet, b) -> np.ndarray:
    try:
        return mode_weights(modes, b)
    except ValueError:
        return np.full(len(modes), np.nan)
