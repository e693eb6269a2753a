"""Collective excitation eigenmodes of the coupled-dipole matrix.

The evolution matrix ``A`` (built with every ``Delta_j = 0``) is complex
symmetric, so eigenvectors belonging to different eigenvalues satisfy the
bilinear (transpose, not conjugate) orthogonality ``v_m^T v_n = 0``.
Eigenvalues are stored as the physical pair ``(delta_n, upsilon_n)`` via
``lambda_n = i delta_n - upsilon_n``: ``upsilon_n`` is the collective
linewidth and a mode shows up in a spectrum at drive detuning ``-delta_n``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .core import AtomArray, WaveguideParams, build_evolution_matrix
from .csvio import write_csv
from .parallel import parallel_map

BINORM_TOL = 1e-8
CLUSTER_TOL = 1e-8
_ORDER_TOL = 1e-9

EIGEN_SCAN_HEADER = ("geometry_param", "mode_index", "delta_over_gw", "upsilon_over_gw", "is_superradiant")


@dataclass
class EigenmodeSet:
    """Modes sorted by descending linewidth; ``eigenvectors[n]`` is mode ``n``."""

    shifts: np.ndarray
    linewidths: np.ndarray
    eigenvectors: np.ndarray
    binorms: np.ndarray
    zero_binorm: np.ndarray

    def __len__(self):
        return len(self.shifts)

    @property
    def eigenvalues(self) -> np.ndarray:
        return 1j * self.shifts - self.linewidths

    @property
    def matrix(self) -> np.ndarray:
        """Eigenvectors as columns."""
        return self.eigenvectors.T

    @classmethod
    def from_vectors(cls, vectors, shifts, linewidths) -> "EigenmodeSet":
        vectors = np.asarray(vectors, dtype=complex)
        binorms = np.einsum("ij,ij->i", vectors, vectors)
        return cls(
            shifts=np.asarray(shifts, dtype=float),
            linewidths=np.asarray(linewidths, dtype=float),
            eigenvectors=vectors,
            binorms=binorms,
            zero_binorm=np.abs(binorms) < BINORM_TOL,
        )


def canonical_basis_wavelength_lattice(n_atoms: int) -> np.ndarray:
    """Real eigenbasis for a lattice of spacing ``lambda`` (rows are vectors).

    ``v_1 = (1, ..., 1)/sqrt(N)`` and ``v_j = (e_j - e_1)/sqrt(2)`` for
    ``j >= 2``. Each vector has unit norm and ``v_1`` is orthogonal to the
    rest, which span the zero-sum subspace. The ``v_j`` with ``j >= 2`` are
    not mutually orthogonal (``v_i . v_j = 1/2``).
    """
    if n_atoms < 1:
        raise ValueError("n_atoms must be positive")
    basis = np.zeros((n_atoms, n_atoms))
    basis[0] = 1.0 / math.sqrt(n_atoms)
    for j in range(1, n_atoms):
        basis[j, 0] = -1.0
        basis[j, j] = 1.0
    basis[1:] /= math.sqrt(2.0)
    return basis


def wavelength_lattice_modes(n_atoms: int, params: WaveguideParams, signs=None) -> EigenmodeSet:
    """Mode set of a (half-)wavelength lattice built on the canonical basis.

    ``signs`` is the output of :func:`half_wave_sign_map`; it maps the basis
    back to the physical amplitudes when the spacing is a half-wavelength
    multiple.
    """
    vectors = canonical_basis_wavelength_lattice(n_atoms).astype(complex)
    if signs is not None:
        vectors = vectors * np.asarray(signs)[None, :]
    widths = np.full(n_atoms, params.gamma_t - params.gamma_w)
    widths[0] = params.gamma_t + (n_atoms - 1) * params.gamma_w
    return EigenmodeSet.from_vectors(vectors, np.zeros(n_atoms), widths)


def _fix_phase(v: np.ndarray) -> np.ndarray:
    """Resolve the sign left over by ``v^T v = 1`` normalization."""
    mags = np.abs(v)
    j = int(np.argmax(mags > 1e-8 * mags.max()))
    z = v[j]
    if z.real < -1e-12 * mags.max() or (abs(z.real) <= 1e-12 * mags.max() and z.imag < 0):
        return -v
    return v


def _normalize(v: np.ndarray) -> tuple[np.ndarray, complex, bool]:
    v = v / np.linalg.norm(v)
    binorm = complex(v @ v)
    if abs(binorm) < BINORM_TOL:
        return _fix_phase(v), binorm, True
    v = v / np.sqrt(binorm)
    return _fix_phase(v), complex(v @ v), False


def _cluster_basis(q: np.ndarray, seeds: np.ndarray) -> list[np.ndarray]:
    """Deterministic bilinear Gram-Schmidt inside the span of the columns of ``q``."""
    u, s, _ = np.linalg.svd(q, full_matrices=False)
    rank = int(np.sum(s > 1e-8 * s[0]))
    span = u[:, :rank]
    out: list[np.ndarray] = []
    for seed in seeds:
        if len(out) == rank:
            break
        p = span @ (span.conj().T @ seed)
        for w in out:
            p = p - (w @ p) * w
        nrm = np.linalg.norm(p)
        if nrm < 1e-8:
            continue
        p = p / nrm
        bn = p @ p
        if abs(bn) < BINORM_TOL:
            continue
        out.append(_fix_phase(p / np.sqrt(bn)))
    return out


def _clusters(w: np.ndarray, tol: float) -> list[list[int]]:
    n = w.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(w[i] - w[j]) < tol:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _mode_cmp(a, b):
    (ua, da, va), (ub, db, vb) = a, b
    if abs(ua - ub) > _ORDER_TOL:
        return -1 if ua > ub else 1
    if abs(da - db) > _ORDER_TOL:
        return -1 if da < db else 1
    for x, y in zip(va, vb):
        for p, q in ((x.real, y.real), (x.imag, y.imag)):
            if abs(p - q) > _ORDER_TOL:
                return -1 if p < q else 1
    return 0


def decompose(array: AtomArray, params: WaveguideParams) -> EigenmodeSet:
    """Eigendecomposition of the evolution matrix with all detunings set to zero.

    Eigenvectors are scaled to ``v^T v = 1``. A mode whose unit-norm vector
    has ``|v^T v| < 1e-8`` is flagged zero-binorm and left at unit Euclidean
    norm. Degenerate clusters are re-spanned by a bilinear Gram-Schmidt
    seeded with the canonical wavelength-lattice basis, then the unit
    vectors. Modes are ordered by descending linewidth, ascending shift,
    then lexicographically on the vector entries.

    Raises
    ------
    numpy.linalg.LinAlgError
        If the eigensolver does not converge.
    """
    a = build_evolution_matrix(array.with_detunings(0.0), params)
    n = a.shape[0]
    w, vecs = np.linalg.eig(a)
    seeds = np.vstack([canonical_basis_wavelength_lattice(n), np.eye(n)]).astype(complex)
    tol = CLUSTER_TOL * params.gamma_w

    modes = []
    for group in _clusters(w, tol):
        lam = complex(np.mean(w[group]))
        if len(group) == 1:
            v, bn, flag = _normalize(vecs[:, group[0]])
            modes.append((lam, v, bn, flag))
            continue
        basis = _cluster_basis(vecs[:, group], seeds)
        for v in basis:
            modes.append((lam, v, complex(v @ v), False))
        # Defective cluster or isotropic directions: keep the solver's vectors, flagged.
        for i in group[len(basis):]:
            v = vecs[:, i] / np.linalg.norm(vecs[:, i])
            modes.append((lam, _fix_phase(v), complex(v @ v), True))

    keyed = [(-m[0].real, m[0].imag, m[1], m) for m in modes]
    keyed.sort(key=functools.cmp_to_key(lambda x, y: _mode_cmp(x[:3], y[:3])))
    ordered = [k[3] for k in keyed]
    return EigenmodeSet(
        shifts=np.array([m[0].imag for m in ordered]),
        linewidths=np.array([-m[0].real for m in ordered]),
        eigenvectors=np.array([m[1] for m in ordered]),
        binorms=np.array([m[2] for m in ordered]),
        zero_binorm=np.array([m[3] for m in ordered], dtype=bool),
    )


def mode_weights(modes: EigenmodeSet, b) -> np.ndarray:
    """Relative populations ``L_j = |v_j^T b|^2 / sum_i |v_i^T b|^2``.

    Zero-binorm modes get weight NaN and are excluded from the sum.
    """
    b = np.asarray(b, dtype=complex)
    if b.shape[-1] != modes.eigenvectors.shape[1]:
        raise ValueError("state length does not match the mode set")
    proj = np.abs(b @ modes.eigenvectors.T) ** 2
    use = ~modes.zero_binorm
    total = proj[..., use].sum(axis=-1, keepdims=True)
    if np.any(total == 0):
        raise ValueError("state has no overlap with any mode")
    weights = np.where(use, proj / total, np.nan)
    return weights


def classify(modes: EigenmodeSet, params: WaveguideParams, tol: float = 1e-9) -> list[str]:
    """Label each mode ``superradiant``, ``subradiant`` or ``neutral`` against ``gamma_t``."""
    labels = []
    for u in modes.linewidths:
        if u > params.gamma_t + tol * params.gamma_t:
            labels.append("superradiant")
        elif u < params.gamma_t - tol * params.gamma_t:
            labels.append("subradiant")
        else:
            labels.append("neutral")
    return labels


@dataclass(frozen=True)
class SignMap:
    """``P~_j = s_j P_j`` with ``s_j = exp(ik(x_j - x_1)) = +-1``."""

    signs: np.ndarray

    def __call__(self, b):
        return self.signs * np.asarray(b)

    def inverse(self, b):
        return self.signs * np.asarray(b)

    def transform_matrix(self, a):
        return self.signs[:, None] * np.asarray(a) * self.signs[None, :]


def half_wave_sign_map(array: AtomArray, params: WaveguideParams, tol: float = 1e-9) -> SignMap:
    """Sign map that turns a half-wavelength-multiple geometry into the one-wavelength problem.

    Raises
    ------
    ValueError
        If some ``x_j - x_1`` is not an integer multiple of ``lambda/2`` within ``tol``.
    """
    rel = (array.positions - array.positions[0]) * params.k / math.pi
    steps = np.rint(rel)
    if np.any(np.abs(rel - steps) > tol):
        raise ValueError("every spacing must be an integer multiple of half a wavelength")
    signs = np.where(steps.astype(np.int64) % 2 == 0, 1.0, -1.0)
    return SignMap(signs)


def eigen_scan(configs, params: WaveguideParams, geometry_params, threads: int = 1):
    """Decompose many geometries; returns ``(geometry_param, EigenmodeSet)`` pairs in input order."""
    sets = parallel_map(lambda arr: decompose(arr, params), configs, threads)
    return list(zip(geometry_params, sets))


def eigen_scan_rows(scan, params: WaveguideParams):
    for g, modes in scan:
        labels = classify(modes, params)
        for n in range(len(modes)):
            yield (
                float(g),
                n,
                modes.shifts[n] / params.gamma_w,
                modes.linewidths[n] / params.gamma_w,
                labels[n] == "superradiant",
            )


def write_eigen_scan(path, scan, params: WaveguideParams):
    return write_csv(path, EIGEN_SCAN_HEADER, eigen_scan_rows(scan, params))
