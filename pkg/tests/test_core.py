import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from waveguide_atoms.core import (
    AtomArray,
    DipoleCouplingInputs,
    DriveField,
    LatticeSpec,
    WaveguideParams,
    build_evolution_matrix,
    derive_gamma_w,
    drive_vector,
    eta,
    green_function,
    polarizability,
)

K = 2 * math.pi
finite = st.floats(-50, 50, allow_nan=False)


def test_params_defaults_and_loss_rate():
    p = WaveguideParams(gamma_w=1.0, gamma_t=2.5)
    assert p.gamma_l == pytest.approx(1.5)
    assert p.wavelength == pytest.approx(1.0)
    assert WaveguideParams().lossless


@pytest.mark.parametrize("kw", [dict(gamma_w=0.0), dict(gamma_w=2.0, gamma_t=1.0), dict(k=-1.0), dict(gamma_t=math.inf)])
def test_params_rejects_invalid(kw):
    with pytest.raises(ValueError):
        WaveguideParams(**kw)


def test_from_ratio_message():
    with pytest.raises(ValueError, match="gamma_w must not exceed gamma_t"):
        WaveguideParams.from_ratio(1.5)
    assert WaveguideParams.from_ratio(0.5).gamma_t == pytest.approx(2.0)


def test_atom_array_sorts_and_keeps_detunings():
    arr = AtomArray([0.7, 0.1, 0.4], [3.0, 1.0, 2.0])
    assert arr.positions.tolist() == [0.1, 0.4, 0.7]
    assert arr.detunings.tolist() == [1.0, 2.0, 3.0]
    assert arr.order.tolist() == [1, 2, 0]
    assert len(arr) == 3
    with pytest.raises(ValueError):
        arr.positions[0] = 5.0


@pytest.mark.parametrize("pos,det", [([], 0.0), ([0.0, 1.0], [1.0]), ([0.0, math.nan], 0.0)])
def test_atom_array_rejects_invalid(pos, det):
    with pytest.raises(ValueError):
        AtomArray(pos, det)


def test_lattice_spec():
    lat = LatticeSpec(4, 0.25, origin=1.0)
    assert np.allclose(lat.sites(), [1.0, 1.25, 1.5, 1.75])
    with pytest.raises(ValueError):
        LatticeSpec(0, 0.5)
    with pytest.raises(ValueError):
        LatticeSpec(3, 0.0)


def test_green_function_examples():
    assert green_function(0.0, K) == pytest.approx(0.5j * K)
    assert green_function(0.5, K) == pytest.approx(-0.5j * K)


@given(finite)
def test_green_function_even_and_constant_modulus(x):
    assert green_function(x, K) == green_function(-x, K)
    assert abs(green_function(x, K)) == pytest.approx(K / 2)


def test_polarizability_and_eta_examples(lossless):
    assert polarizability(0.0, lossless) == pytest.approx(2j / K)
    assert eta(0.0, lossless) == pytest.approx(-1.0)
    lossy = WaveguideParams(gamma_t=4.0)
    assert eta(0.0, lossy) == pytest.approx(-0.25)
    assert abs(polarizability(1e9, lossless)) < 1e-9


@given(finite, st.floats(0.05, 1.0))
def test_eta_is_i_alpha_k_over_2(delta, ratio):
    p = WaveguideParams.from_ratio(ratio)
    assert eta(delta, p) == pytest.approx(0.5j * p.k * polarizability(delta, p), rel=1e-14, abs=1e-15)
    assert abs(eta(delta, p)) <= ratio + 1e-15


def test_evolution_matrix_examples(lossless):
    a = build_evolution_matrix(AtomArray([0.0], [0.3]), lossless)
    assert a.shape == (1, 1) and a[0, 0] == pytest.approx(0.3j - 1.0)
    lossy = WaveguideParams(gamma_t=2.0)
    a = build_evolution_matrix(AtomArray([0.0, 0.5]), lossy)
    assert np.allclose(a, [[-2.0, 1.0], [1.0, -2.0]], atol=1e-15)


@given(st.lists(st.floats(-3, 3), min_size=1, max_size=10), st.floats(0.05, 1.0))
def test_evolution_matrix_is_complex_symmetric(xs, ratio):
    arr = AtomArray(xs, np.linspace(-1, 1, len(xs)))
    a = build_evolution_matrix(arr, WaveguideParams.from_ratio(ratio))
    assert np.array_equal(a, a.T)


def test_coincident_atoms_allowed(lossless):
    a = build_evolution_matrix(AtomArray([0.2, 0.2]), lossless)
    assert a[0, 1] == pytest.approx(-1.0)


def test_drive_vector(lossless):
    assert np.all(drive_vector(LatticeSpec(3, 0.3).to_array(), lossless, DriveField(0.0)) == 0)
    f = drive_vector(LatticeSpec(5, 0.37).to_array(), lossless, DriveField(0.7))
    assert np.allclose(np.abs(f), np.abs(f[0]))
    f = drive_vector(LatticeSpec(5, 1.0).to_array(), lossless, DriveField(1.0))
    assert np.allclose(f, f[0], atol=1e-13)
    assert f[0] == pytest.approx(2j / K)


def test_drive_field_finite():
    with pytest.raises(ValueError):
        DriveField(complex(math.inf, 0))


def test_derive_gamma_w():
    base = DipoleCouplingInputs(1.0, 1.0, 1.0, hbar=1.0, epsilon_0=1.0)
    assert derive_gamma_w(base) == pytest.approx(1 / (2 * math.pi))
    wide = DipoleCouplingInputs(1.0, 2.0, 1.0, hbar=1.0, epsilon_0=1.0)
    strong = DipoleCouplingInputs(2.0, 1.0, 1.0, hbar=1.0, epsilon_0=1.0)
    assert derive_gamma_w(wide) == pytest.approx(derive_gamma_w(base) / 4)
    assert derive_gamma_w(strong) == pytest.approx(derive_gamma_w(base) * 4)
    with pytest.raises(ValueError):
        DipoleCouplingInputs(0.0, 1.0, 1.0)
