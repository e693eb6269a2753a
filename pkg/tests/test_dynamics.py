import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from waveguide_atoms.core import AtomArray, DriveField, LatticeSpec, WaveguideParams
from waveguide_atoms.dynamics import DetuningSchedule, DriveSchedule, evolve, total_excitation
from waveguide_atoms.eigenmodes import decompose, half_wave_sign_map
from waveguide_atoms.steady_state import solve_steady

OFF = DriveSchedule.constant(0.0)


@pytest.mark.parametrize("ratio", [1.0, 0.5, 0.1])
def test_single_atom_free_decay(ratio):
    p = WaveguideParams.from_ratio(ratio)
    traj = evolve(AtomArray([0.3], [0.7]), p, drive_schedule=OFF, b0=[1.0], t_span=(0, 3 / p.gamma_t), n_samples=31)
    expect = np.exp(-2 * p.gamma_t * traj.times)
    assert np.allclose(traj.total_excitation, expect, rtol=1e-8, atol=0)


def test_long_time_limit_is_steady_state():
    p = WaveguideParams.from_ratio(0.8)
    arr = AtomArray([0.0, 0.31, 0.77], [0.2, -0.4, 0.1])
    tol = 1e-10
    traj = evolve(arr, p, t_span=(0, 60), tol=tol, n_samples=3)
    b_ss = solve_steady(arr, p, DriveField(1.0))
    assert np.linalg.norm(traj.states[-1] - b_ss) <= 10 * tol * np.linalg.norm(b_ss)


@pytest.mark.parametrize("n", [2, 4, 6])
def test_dark_subspace_is_conserved(n):
    p = WaveguideParams()
    arr = LatticeSpec(n, 1.0).to_array()
    b0 = np.zeros(n, dtype=complex)
    b0[0], b0[1] = 1.0, -1.0
    traj = evolve(arr, p, drive_schedule=OFF, b0=b0, t_span=(0, 20), n_samples=21)
    assert np.allclose(traj.total_excitation, 2.0, rtol=1e-9)


@pytest.mark.parametrize("n", [2, 4, 8])
def test_superradiant_decay_rate(n):
    p = WaveguideParams.from_ratio(0.7)
    arr = LatticeSpec(n, 1.0).to_array()
    traj = evolve(arr, p, drive_schedule=OFF, b0=np.ones(n) / math.sqrt(n), t_span=(0, 1), n_samples=11)
    rate = -np.polyfit(traj.times, np.log(traj.total_excitation), 1)[0]
    assert rate == pytest.approx(2 * (p.gamma_t + (n - 1) * p.gamma_w), rel=1e-2)


def test_linearity(rng):
    p = WaveguideParams()
    arr = AtomArray([0.0, 0.23, 0.61], [0.1, 0.0, -0.3])
    b1 = rng.normal(size=3) + 1j * rng.normal(size=3)
    b2 = rng.normal(size=3) + 1j * rng.normal(size=3)
    drive1 = DriveSchedule(np.array([0.0, 2.0]), np.array([0.0, 1.0]))
    drive2 = DriveSchedule(np.array([0.0, 2.0]), np.array([0.5j, 0.0]))
    drive_sum = DriveSchedule(np.array([0.0, 2.0]), np.array([1.5j, 1.0]))
    kw = dict(t_span=(0, 4), n_samples=9, tol=1e-12)
    x = evolve(arr, p, drive_schedule=drive1, b0=b1, **kw).states
    y = evolve(arr, p, drive_schedule=drive2, b0=b2, **kw).states
    z = evolve(arr, p, drive_schedule=drive_sum, b0=b1 + 3 * b2, **kw).states
    assert np.allclose(z, x + 3 * y, atol=1e-9)


def test_breakpoints_are_samples_and_state_is_continuous():
    p = WaveguideParams()
    det = DetuningSchedule(np.array([1.3, 2.7]), np.array([[0.0, 0.0], [2.0, -1.0]]))
    traj = evolve(AtomArray([0.0, 0.4]), p, det_schedule=det, t_span=(0, 5), n_samples=5)
    for t in (1.3, 2.7):
        assert t in traj.times
    fine = evolve(AtomArray([0.0, 0.4]), p, det_schedule=det, t_span=(0, 5), t_eval=np.linspace(2.6, 2.8, 41))
    local = fine.states[(fine.times >= 2.6) & (fine.times <= 2.8)]
    jumps = np.abs(np.diff(local, axis=0)).max()
    assert jumps < 0.05


def test_schedule_interpolation():
    det = DetuningSchedule(np.array([0.0, 1.0]), np.array([[0.0, 2.0], [1.0, 0.0]]))
    assert np.allclose(det(0.5), [0.5, 1.0])
    assert np.allclose(det(-1.0), [0.0, 2.0])
    assert np.allclose(det(9.0), [1.0, 0.0])
    drive = DriveSchedule(np.array([0.0, 2.0]), np.array([1.0, 1j]))
    assert drive(1.0) == pytest.approx(0.5 + 0.5j)


@pytest.mark.parametrize(
    "times,values",
    [([1.0, 0.5], [[0.0], [1.0]]), ([0.0, 0.0], [[0.0], [1.0]]), ([0.0, 1.0], [[0.0]]), ([0.0], [[np.nan]]), ([np.inf], [[0.0]])],
)
def test_detuning_schedule_validation(times, values):
    with pytest.raises(ValueError):
        DetuningSchedule(np.array(times), np.array(values))


def test_drive_schedule_validation():
    with pytest.raises(ValueError):
        DriveSchedule(np.array([0.0, 1.0]), np.array([1.0]))
    with pytest.raises(ValueError):
        DriveSchedule(np.array([1.0, 0.0]), np.array([1.0, 1.0]))


def test_evolve_argument_validation():
    arr = AtomArray([0.0, 0.4])
    p = WaveguideParams()
    with pytest.raises(ValueError):
        evolve(arr, p, t_span=(1, 1))
    with pytest.raises(ValueError):
        evolve(arr, p, tol=0)
    with pytest.raises(ValueError):
        evolve(arr, p, b0=[1.0])
    with pytest.raises(ValueError):
        evolve(arr, p, det_schedule=DetuningSchedule.constant([0.0, 0.0, 0.0]))


@given(st.lists(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False), min_size=4, max_size=4))
def test_sign_map_preserves_excitation(b0):
    p = WaveguideParams()
    half = LatticeSpec(4, 0.5).to_array()
    full = LatticeSpec(4, 1.0).to_array()
    signs = half_wave_sign_map(half, p)
    b0 = np.array(b0)
    kw = dict(drive_schedule=OFF, t_span=(0, 2), n_samples=5, tol=1e-11)
    a = evolve(half, p, b0=b0, **kw)
    b = evolve(full, p, b0=signs(b0), **kw)
    assert np.allclose(a.total_excitation, b.total_excitation, rtol=1e-7, atol=1e-12)


def test_mode_weights_tracked():
    p = WaveguideParams()
    arr = LatticeSpec(3, 1.0).to_array()
    modes = decompose(arr, p)
    traj = evolve(arr, p, t_span=(0, 2), n_samples=5, modes=modes)
    assert np.isnan(traj.mode_weights[0]).all()
    assert np.allclose(traj.mode_weights[1:, 0], 1.0)


def test_trajectory_csv(tmp_path):
    traj = evolve(AtomArray([0.0]), WaveguideParams(), t_span=(0, 1), n_samples=3)
    path = traj.to_csv(tmp_path / "t.csv", normalize=2.0)
    lines = path.read_text().splitlines()
    assert lines[0] == "t_gw,total_excitation"
    assert len(lines) == 4
    assert float(lines[-1].split(",")[1]) == pytest.approx(traj.total_excitation[-1] / 2)
    with pytest.raises(KeyError):
        traj.at(0.1234)
    assert np.array_equal(traj.at(1.0), traj.states[-1])
    assert total_excitation([3, 4j]) == 25.0


@pytest.mark.parametrize("b0", [[0.0, 0.0], [5e-324, 0.0], [1e-300, 1.0]])
def test_zero_and_subnormal_states_integrate(b0):
    traj = evolve(AtomArray([0.0, 0.5]), WaveguideParams(), drive_schedule=OFF, b0=b0, t_span=(0, 2), n_samples=3)
    assert np.all(np.isfinite(traj.states))
