"""2x2 transfer matrices for point scatterers in a single-mode waveguide.

A matrix maps the right/left-moving amplitudes ``[E+, E-]`` just left of a
scatterer to those just right of it. Amplitudes are referenced locally at
each atom, so a cascade returns ``t`` and ``r`` relative to the first and
last atom. Public functions convert them to the direct solver's convention:
the free-propagation phase is stripped, ``t = t_M exp(-ik(x_N - x_1))`` and
``r = r_M exp(2ik x_1)``.

A resonant lossless atom (``eta = -1``) is a perfect mirror and has no
transfer matrix; :func:`atom_matrix` raises :class:`TotalReflection`, and
:func:`cascade` treats that atom as a mirror instead.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import comb

from .core import AtomArray, LatticeSpec, WaveguideParams, eta
from .errors import PoleError, TotalReflection

MIRROR_TOL = 1e-14
DEGENERATE_TOL = 1e-7

ANALYTIC_HEADER = ("delta_over_gw", "t_re", "t_im", "r_re", "r_im", "T", "R", "T_mft", "D_exact", "D_approx")


@dataclass(frozen=True)
class SingleAtomScattering:
    """Single-atom amplitudes; ``r = sqrt(R) exp(i phase)`` with ``phase = arg(eta)``."""

    t: complex
    r: complex

    @property
    def T(self) -> float:
        return abs(self.t) ** 2

    @property
    def R(self) -> float:
        return abs(self.r) ** 2

    @property
    def phase(self) -> float:
        return math.atan2(self.r.imag, self.r.real)


def single_atom_scattering(delta: float, params: WaveguideParams) -> SingleAtomScattering:
    """``t = 1 + eta`` and ``r = eta``.

    The reflection phase equals ``arctan(Delta/gamma_t) + pi``: since
    ``eta = -sqrt(R) exp(i arctan(Delta/gamma_t))``, the extra ``pi`` is needed
    for ``r = sqrt(R) exp(i phase)`` to hold.
    """
    e = complex(eta(delta, params))
    return SingleAtomScattering(1.0 + e, e)


def atom_matrix(delta: float, params: WaveguideParams) -> np.ndarray:
    """``[[2eta+1, eta], [-eta, 1]] / (eta+1)``; unit determinant.

    Raises
    ------
    TotalReflection
        If ``eta = -1`` (a resonant atom with no losses reflects everything).
    """
    e = complex(eta(delta, params))
    if abs(1.0 + e) < MIRROR_TOL:
        raise TotalReflection(float(delta))
    return np.array([[2 * e + 1, e], [-e, 1.0]]) / (e + 1)


def propagation_matrix(dx: float, k: float) -> np.ndarray:
    """``diag(exp(ik dx), exp(-ik dx))``."""
    p = np.exp(1j * k * dx)
    return np.array([[p, 0.0], [0.0, 1.0 / p]])


def transmission_from_matrix(m: np.ndarray) -> tuple[complex, complex]:
    """``(t, r) = (1/M22, -M21/M22)`` for a unit-determinant matrix.

    Raises
    ------
    PoleError
        If ``M22 = 0``.
    """
    m22 = complex(m[1, 1])
    if m22 == 0:
        raise PoleError("transfer matrix has M22 = 0 (total reflection)")
    return 1.0 / m22, -complex(m[1, 0]) / m22


def cascade(array: AtomArray, params: WaveguideParams) -> tuple[complex, complex]:
    """Transmission and reflection of an arbitrary array by multiplying transfer matrices.

    Detunings are taken from ``array``. Returns amplitudes in the direct
    solver's phase convention.
    """
    x = array.positions
    m = np.eye(2, dtype=complex)
    for j in range(array.n_atoms):
        if j > 0:
            m = propagation_matrix(x[j] - x[j - 1], params.k) @ m
        try:
            m = atom_matrix(array.detunings[j], params) @ m
        except TotalReflection:
            # Perfect mirror: the field just left of it satisfies E+ + E- = 0.
            den = complex(m[0, 1] + m[1, 1])
            if den == 0:
                raise PoleError("array in front of a mirror has a pole") from None
            r_m = -complex(m[0, 0] + m[1, 0]) / den
            return 0j, r_m * np.exp(2j * params.k * x[0])
    t_m, r_m = transmission_from_matrix(m)
    return t_m * np.exp(-1j * params.k * (x[-1] - x[0])), r_m * np.exp(2j * params.k * x[0])


def two_atom_t(delta1: float, delta2: float, x12: float, params: WaveguideParams) -> complex:
    """``t_2 t_1 / (1 - sqrt(R_1 R_2) zeta_1 zeta_2 exp(2ik x12))``, propagation phase stripped.

    Raises
    ------
    PoleError
        If the recurrent-scattering denominator vanishes.
    """
    if not x12 > 0:
        raise ValueError("x12 must be positive")
    a1, a2 = single_atom_scattering(delta1, params), single_atom_scattering(delta2, params)
    den = 1.0 - a1.r * a2.r * np.exp(2j * params.k * x12)
    if abs(den) < MIRROR_TOL:
        raise PoleError("two-atom denominator vanishes")
    return complex(a1.t * a2.t / den)


def recurrent_series(delta1: float, delta2: float, x12: float, params: WaveguideParams, n_terms: int) -> complex:
    """Partial sum ``t_2 t_1 sum_{m<n} (sqrt(R_1 R_2) e^{i phi})^m`` of the recurrent-scattering series.

    Warns with :class:`RuntimeWarning` when ``sqrt(R_1 R_2) >= 1``, where the
    series does not converge.
    """
    if n_terms < 1:
        raise ValueError("n_terms must be at least 1")
    a1, a2 = single_atom_scattering(delta1, params), single_atom_scattering(delta2, params)
    ratio = math.sqrt(a1.R * a2.R)
    if ratio >= 1.0:
        warnings.warn("recurrent-scattering series diverges (sqrt(R1 R2) >= 1)", RuntimeWarning, stacklevel=2)
    q = ratio * np.exp(1j * (a1.phase + a2.phase + 2 * params.k * x12))
    terms = q ** np.arange(n_terms)
    return complex(a1.t * a2.t * terms.sum())


def lattice_temporaries(spacing: float, delta: float, params: WaveguideParams) -> tuple[complex, complex, complex, complex]:
    """``(eta, xi, A, B)`` with ``A = (2eta+1) xi^2`` and ``B = sqrt(xi^2-1) sqrt((2eta+1)^2 xi^2-1)`` (principal roots)."""
    e = complex(eta(delta, params))
    xi = complex(np.exp(1j * params.k * spacing))
    a = (2 * e + 1) * xi**2
    b = np.sqrt(xi**2 - 1) * np.sqrt((2 * e + 1) ** 2 * xi**2 - 1)
    return e, xi, a, complex(b)


def lattice_t(n_atoms: int, spacing: float, delta: float, params: WaveguideParams) -> complex:
    """Closed-form transmission of ``n_atoms`` identical atoms at spacing ``d``.

    Evaluates ``2^{N+1} B (eta+1)^N xi^N / [(A+B-1)(A-B+1)^N + (B+1-A)(A+B+1)^N]``
    and strips the free-propagation factor ``xi^N``. Powers are scaled by the
    larger of ``A +- B + 1`` so large ``N`` neither overflows nor cancels.
    For ``|B| < 1e-7 |A|`` the ``B``-odd ratio is expanded as an exact
    polynomial in ``B^2``, which removes the ``0/0``.

    Raises
    ------
    PoleError
        If the denominator vanishes.
    """
    if int(n_atoms) != n_atoms or n_atoms < 1:
        raise ValueError("n_atoms must be a positive integer")
    n = int(n_atoms)
    e, xi, a, b = lattice_temporaries(spacing, delta, params)
    if abs(1.0 + e) < MIRROR_TOL:
        return 0j
    if abs(b) < DEGENERATE_TOL * max(abs(a), 1.0):
        return _lattice_t_series(n, e, xi, a, b)
    if abs(a + b + 1) < abs(a - b + 1):
        b = -b
    q, p = a + b + 1, a - b + 1
    den = (a + b - 1) * (p / q) ** n + (b + 1 - a)
    if den == 0:
        raise PoleError("lattice transmission has a pole")
    return complex(2 * b * (2 * (e + 1) / q) ** n / den)


def _lattice_t_series(n: int, e: complex, xi: complex, a: complex, b: complex) -> complex:
    # Numerator and denominator are both odd in B; divide out B and sum the even powers exactly.
    s, am = a + 1, a - 1
    if s == 0:
        raise PoleError("degenerate lattice expansion point is singular")
    x = (b / s) ** 2
    j = np.arange(n // 2 + 1)
    coeff = s * comb(n, 2 * j) - am * comb(n, 2 * j + 1)
    poly = np.sum(coeff * x**j)
    if poly == 0:
        raise PoleError("lattice transmission has a pole")
    return complex((2 * (e + 1) / s) ** n * s / poly)


def lattice_r(n_atoms: int, spacing: float, delta: float, params: WaveguideParams, origin: float = 0.0) -> complex:
    """Reflection of a regular lattice from the matrix cascade (direct-solver convention)."""
    arr = LatticeSpec(n_atoms, spacing, origin).to_array(delta)
    return cascade(arr, params)[1]


def mft_t(n_atoms: int, delta: float, params: WaveguideParams) -> complex:
    """Mean-field transmission ``[t^(1)]^N``."""
    return complex(single_atom_scattering(delta, params).t ** n_atoms)


def _cot_kd(spacing: float, k: float) -> float:
    s = math.sin(k * spacing)
    if abs(s) < 1e-12:
        raise ZeroDivisionError("spacing is a multiple of half a wavelength: the expansion does not apply (no shift there)")
    return math.cos(k * spacing) / s


def optical_thickness_approx(n_atoms: int, spacing: float, delta, params: WaveguideParams):
    """Large-``N``, small ``gamma_w/gamma_t`` expansion of ``-ln T``.

    ``2 gt gw N/(gt^2+D^2) + 2 gw^2 N [gt^2 + gt D cot(kd) - D^2]/(gt^2+D^2)^2``.
    The expansion of the exact lattice formula carries ``cot(kd)``, which
    diverges at half-wavelength multiples as the asymmetric shift should.

    Raises
    ------
    ZeroDivisionError
        If ``sin(kd) = 0``.
    """
    gt, gw = params.gamma_t, params.gamma_w
    c = _cot_kd(spacing, params.k)
    d = np.asarray(delta, dtype=float)
    den = gt**2 + d**2
    return 2 * gt * gw * n_atoms / den + 2 * gw**2 * n_atoms * (gt**2 + gt * d * c - d**2) / den**2


def line_shift(spacing: float, params: WaveguideParams) -> float:
    """Resonance shift ``Delta_L = cot(kd) gamma_w / 2`` of a large lossy lattice.

    Raises
    ------
    ZeroDivisionError
        At half-wavelength multiples, where the expansion breaks down and the
        exact line is unshifted.
    """
    return 0.5 * _cot_kd(spacing, params.k) * params.gamma_w


def analytic_rows(n_atoms: int, spacing: float, grid, params: WaveguideParams):
    """Rows of the analytic spectrum table: closed-form ``t``, cascade ``r``, MFT and optical thickness."""
    try:
        _cot_kd(spacing, params.k)
        approx_ok = True
    except ZeroDivisionError:
        approx_ok = False
    for delta in np.asarray(grid, dtype=float):
        t = lattice_t(n_atoms, spacing, delta, params)
        r = lattice_r(n_atoms, spacing, delta, params)
        tt = abs(t) ** 2
        d_exact = -math.log(tt) if tt > 0 else math.inf
        d_approx = float(optical_thickness_approx(n_atoms, spacing, delta, params)) if approx_ok else math.nan
        t_mft = abs(mft_t(n_atoms, delta, params)) ** 2
        yield (delta / params.gamma_w, t.real, t.imag, r.real, r.imag, tt, abs(r) ** 2, t_mft, d_exact, d_approx)
