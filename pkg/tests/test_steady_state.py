import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from waveguide_atoms.core import AtomArray, DriveField, LatticeSpec, WaveguideParams, eta, polarizability
from waveguide_atoms.errors import SingularSystemError
from waveguide_atoms.steady_state import (
    SPECTRUM_HEADER,
    SpectrumTable,
    scattering_coefficients,
    solve_steady,
    spectrum,
    steady_state_residual,
    total_field,
)

D = DriveField(1.0)


def coeffs(arr, p, drive=D):
    return scattering_coefficients(solve_steady(arr, p, drive), arr, p, drive)


def test_single_atom_resonant_extinction(lossless):
    arr = AtomArray([0.3])
    b = solve_steady(arr, lossless, D)
    assert b[0] == pytest.approx(polarizability(0.0, lossless) * D.at(0.3, lossless.k))
    assert abs(total_field(b, arr, lossless, D, [0.9, 2.4])).max() < 1e-14
    sc = scattering_coefficients(b, arr, lossless, D)
    assert sc.T < 1e-28 and sc.R == pytest.approx(1.0, abs=1e-14)


@given(st.floats(-20, 20), st.floats(0.05, 1.0))
def test_single_atom_closed_form(delta, ratio):
    p = WaveguideParams.from_ratio(ratio)
    sc = coeffs(AtomArray([0.0], delta), p)
    gt, gw = p.gamma_t, p.gamma_w
    assert sc.T == pytest.approx(((gt - gw) ** 2 + delta**2) / (gt**2 + delta**2), abs=1e-13)
    assert sc.R == pytest.approx(gw**2 / (gt**2 + delta**2), abs=1e-13)


@pytest.mark.parametrize("n", [2, 3, 5, 9])
def test_wavelength_lattice_equal_amplitudes(lossless, n):
    delta = 0.7
    arr = LatticeSpec(n, 1.0, 0.2).to_array(delta)
    b = solve_steady(arr, lossless, D)
    e = eta(delta, lossless)
    expect = polarizability(delta, lossless) * D.at(0.2, lossless.k) / (1 - (n - 1) * e)
    assert np.allclose(b, expect, rtol=1e-12)


def test_zero_drive_gives_zero_state(lossless):
    b = solve_steady(LatticeSpec(4, 0.3).to_array(0.5), lossless, DriveField(0.0))
    assert np.all(b == 0)
    with pytest.raises(ValueError):
        scattering_coefficients(b, LatticeSpec(4, 0.3).to_array(0.5), lossless, DriveField(0.0))


def test_singular_system_reported(lossless):
    with pytest.raises(SingularSystemError) as info:
        solve_steady(LatticeSpec(2, 0.5).to_array(), lossless, D)
    assert info.value.rcond < 1e-13


def test_total_field_linearity(lossless, rng):
    arr = AtomArray(rng.uniform(0, 2, 4))
    b1, b2 = rng.normal(size=4) + 1j * rng.normal(size=4), rng.normal(size=4)
    x = np.array([-1.0, 0.5, 3.0])
    inc = D.at(x, lossless.k)
    lhs = total_field(b1 + b2, arr, lossless, D, x) - inc
    rhs = (total_field(b1, arr, lossless, D, x) - inc) + (total_field(b2, arr, lossless, D, x) - inc)
    assert np.allclose(lhs, rhs, atol=1e-13)
    assert np.allclose(total_field(np.zeros(4), arr, lossless, D, x), inc)


def test_detector_independence(lossless, rng):
    for _ in range(20):
        n = rng.integers(1, 8)
        arr = AtomArray(rng.uniform(0, 3, n), rng.uniform(-2, 2, n))
        b = solve_steady(arr, lossless, D)
        sc = scattering_coefficients(b, arr, lossless, D)
        for x in (arr.positions.max() + 0.123, arr.positions.max() + 7.77):
            e = total_field(b, arr, lossless, D, x)
            assert abs(e / D.at(x, lossless.k) - sc.t) < 1e-12
        for x in (arr.positions.min() - 0.31, arr.positions.min() - 5.2):
            e = total_field(b, arr, lossless, D, x) - D.at(x, lossless.k)
            assert abs(e / (D.amplitude * np.exp(-1j * lossless.k * x)) - sc.r) < 1e-12


def test_energy_conservation_and_dissipation(rng):
    for _ in range(100):
        n = int(rng.integers(1, 13))
        arr = AtomArray(rng.uniform(0, 4, n), rng.uniform(-3, 3, n))
        sc = coeffs(arr, WaveguideParams())
        assert abs(sc.T + sc.R - 1) < 1e-10
        lossy = coeffs(arr, WaveguideParams.from_ratio(rng.uniform(0.1, 0.9)))
        assert lossy.T + lossy.R < 1


def test_steady_state_residual(rng):
    for _ in range(50):
        n = int(rng.integers(1, 13))
        p = WaveguideParams.from_ratio(rng.uniform(0.1, 1.0))
        arr = AtomArray(rng.uniform(0, 4, n), rng.uniform(-3, 3, n))
        b = solve_steady(arr, p, DriveField(0.3 - 0.8j))
        assert steady_state_residual(b, arr, p, DriveField(0.3 - 0.8j)) < 1e-10


def test_fig4a_full_transmission(lossless):
    roots = [math.sqrt(2), math.sqrt(2 * (2 + math.sqrt(2))), math.sqrt(2 * (2 - math.sqrt(2)))]
    grid = np.sort(np.concatenate([roots, np.negative(roots)]))
    table = spectrum(LatticeSpec(8, 0.25).to_array(), lossless, D, grid)
    assert np.allclose(table.T, 1.0, atol=1e-9)


def test_fano_peak_two_atoms(lossless):
    grid = np.linspace(0.2, 0.45, 2501)
    table = spectrum(AtomArray([0.0, 0.45]), lossless, D, grid)
    assert 0.30 <= grid[np.argmax(table.T)] <= 0.34


def test_half_wave_pair_single_dip(lossless):
    grid = np.linspace(-6, 6, 600)
    T = spectrum(AtomArray([0.0, 0.5]), lossless, D, grid).T
    # a single Lorentzian dip of full width 2 gamma_w: T = D^2/(D^2 + 4)
    assert np.allclose(T, grid**2 / (grid**2 + 4), atol=1e-12)


def test_weak_coupling_limit():
    p = WaveguideParams(gamma_w=1e-9, gamma_t=1.0)
    table = spectrum(LatticeSpec(5, 0.3).to_array(), p, D, np.linspace(-3, 3, 11))
    assert np.allclose(table.T, 1.0, atol=1e-8)


def test_spectrum_validation_and_singular_tag(lossless):
    arr = LatticeSpec(2, 0.5).to_array()
    with pytest.raises(ValueError):
        spectrum(arr, lossless, D, [])
    with pytest.raises(ValueError):
        spectrum(arr, lossless, D, [1.0, 0.5])
    with pytest.raises(SingularSystemError) as info:
        spectrum(arr, lossless, D, [-1.0, 0.0, 1.0])
    assert info.value.delta == 0.0


def test_spectrum_offsets_per_atom_detunings(lossless):
    arr = AtomArray([0.0, 0.3], [0.5, -0.2])
    table = spectrum(arr, lossless, D, [0.1])
    direct = coeffs(AtomArray([0.0, 0.3], [0.6, -0.1]), lossless)
    assert table.t[0] == pytest.approx(direct.t, abs=1e-14)


def test_spectrum_independent_of_threads(lossless):
    arr = AtomArray([0.0, 0.37, 0.81, 1.3], [0.1, 0.0, -0.3, 0.2])
    grid = np.linspace(-4, 4, 301)
    one = spectrum(arr, lossless, D, grid, threads=1)
    for k in (2, 3, 7):
        other = spectrum(arr, lossless, D, grid, threads=k)
        assert np.array_equal(one.t, other.t) and np.array_equal(one.r, other.r)


def test_spectrum_table_csv(tmp_path, lossless):
    table = spectrum(AtomArray([0.0]), lossless, D, [-1.0, 1.0])
    path = table.to_csv(tmp_path / "s.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(SPECTRUM_HEADER)
    assert len(lines) == 3
    with pytest.raises(ValueError):
        SpectrumTable([0.0, 0.0], [1, 1], [0, 0])
