import math

import numpy as np
import pytest
from scipy import fft
from scipy.linalg import eigh

from rectification.errors import (
    BoundaryContamination,
    BoxTooSmall,
    NoConvergence,
    PreconditionError,
    StepTooLarge,
    UnboundPotential,
)
from rectification.field_model import DriveField, make_bichromatic
from rectification.harmonic_oracle import HarmonicSolution, exact_harmonic_trajectory
from rectification.potential_model import CosineLattice, Harmonic, Quartic
from rectification.quantum_engine import (
    GridSpec,
    Wavefunction,
    ground_state,
    init_gaussian_state,
    propagate_wavefunction,
    wigner_transform,
)

NO_FIELD = DriveField(1.0, ())


# =============================================================================
# Grid and states
# =============================================================================

@pytest.mark.parametrize("args", [(-1.0, 1.0, 100), (-1.0, 1.0, 64), (1.0, -1.0, 256), (-1.0, 1.0, 256, 0.0)])
def test_grid_validation(args):
    with pytest.raises(PreconditionError):
        GridSpec(*args)


def test_grid_geometry():
    grid = GridSpec(-20.0, 20.0, 512)
    assert grid.dx == pytest.approx(40.0 / 512)
    assert grid.dp == pytest.approx(2 * math.pi / 40.0)
    assert grid.is_symmetric
    assert grid.x[256] == 0.0


def test_gaussian_state_moments():
    grid = GridSpec(-20.0, 20.0, 1024)
    psi = init_gaussian_state(grid, 1.0)
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)
    assert abs(psi.mean_position()) <= 1e-12
    assert abs(psi.mean_momentum()) <= 1e-12
    second = float(np.sum(grid.x ** 2 * psi.density()) * grid.dx)
    assert second == pytest.approx(1.0, abs=1e-6)


def test_gaussian_state_with_momentum_kick(grid):
    psi = init_gaussian_state(grid, 1.0, x0=2.0, p0=1.5)
    assert psi.mean_position() == pytest.approx(2.0, abs=1e-10)
    assert psi.mean_momentum() == pytest.approx(1.5, abs=1e-10)
    assert psi.reflect().mean_position() == pytest.approx(-2.0, abs=1e-10)
    assert psi.reflect().mean_momentum() == pytest.approx(-1.5, abs=1e-10)


def test_box_too_small():
    with pytest.raises(BoxTooSmall):
        init_gaussian_state(GridSpec(-10.0, 10.0, 256), 3.0)


def test_momentum_density_is_normalised(grid):
    psi = init_gaussian_state(grid, 0.8, p0=0.7)
    p, density = psi.momentum_density(pad=2)
    assert np.all(np.diff(p) > 0)
    assert float(np.sum(density) * (p[1] - p[0])) == pytest.approx(1.0, abs=1e-10)


# =============================================================================
# Ground states
# =============================================================================

def test_harmonic_ground_state(grid):
    psi = ground_state(grid, Harmonic(1.0, 1.0))
    assert psi.energy(Harmonic(1.0, 1.0)) == pytest.approx(0.5, abs=1e-6)
    exact = np.pi ** -0.25 * np.exp(-grid.x ** 2 / 2)
    overlap = abs(np.sum(np.conj(exact) * psi.amplitudes) * grid.dx) ** 2
    assert overlap >= 1 - 1e-8


def test_ground_state_is_even(grid):
    psi = ground_state(grid, Quartic(1.0, 1.0))
    assert np.max(np.abs(psi.reflect().amplitudes - psi.amplitudes)) <= 1e-8
    assert psi.norm() == pytest.approx(1.0, abs=1e-12)


def test_quartic_ground_state_matches_dense_diagonalisation():
    grid = GridSpec(-10.0, 10.0, 256)
    spec = Quartic(1.0, 1.0)
    n = grid.n_points
    kinetic = fft.ifft((grid.p ** 2 / 2.0)[:, None] * fft.fft(np.eye(n), axis=0), axis=0)
    hamiltonian = kinetic + np.diag(spec.value(grid.x))
    hamiltonian = 0.5 * (hamiltonian + hamiltonian.conj().T)
    lowest = eigh(hamiltonian, eigvals_only=True, subset_by_index=[0, 0])[0]
    assert ground_state(grid, spec).energy(spec) == pytest.approx(lowest, abs=1e-6)


def test_ground_state_needs_bound_potential(grid):
    with pytest.raises(UnboundPotential):
        ground_state(grid, CosineLattice())


def test_ground_state_iteration_cap(grid):
    with pytest.raises(NoConvergence):
        ground_state(grid, Harmonic(), max_iter=3)


# =============================================================================
# Real-time propagation
# =============================================================================

def test_propagation_preconditions(grid):
    psi = init_gaussian_state(grid, 1.0)
    with pytest.raises(StepTooLarge):
        propagate_wavefunction(psi, Harmonic(), NO_FIELD, NO_FIELD.period / 100, 10)
    with pytest.raises(UnboundPotential):
        propagate_wavefunction(psi, CosineLattice(), NO_FIELD, NO_FIELD.period / 200, 10)


def test_series_columns(grid):
    series, final = propagate_wavefunction(init_gaussian_state(grid, 1.0), Harmonic(), NO_FIELD,
                                           NO_FIELD.period / 200, 20, record_every=7)
    assert list(series.to_frame().columns) == ["t", "mean_x", "mean_p", "norm", "energy"]
    assert len(series) == 4
    assert final.time == pytest.approx(20 * NO_FIELD.period / 200)


def test_unitarity(grid):
    drive = make_bichromatic(1, 2, 0.3, 0.3, 0.0, 0.5, 1.0)
    psi = init_gaussian_state(grid, 1.0)
    series, _ = propagate_wavefunction(psi, Quartic(1.0, 1.0), drive, drive.period / 400, 10_000,
                                       record_every=500)
    assert np.max(np.abs(series.norm - 1.0)) <= 1e-10


def test_field_free_ground_state_is_stationary(grid):
    spec = Quartic(1.0, 1.0)
    psi = ground_state(grid, spec)
    series, _ = propagate_wavefunction(psi, spec, NO_FIELD, NO_FIELD.period / 2000, 3 * 2000,
                                       record_every=100)
    assert np.max(np.abs(series.mean_x)) <= 1e-8
    drift = np.abs(series.energy - series.energy[0]) / series.energy[0]
    assert drift.max() <= 1e-8


@pytest.mark.slow
def test_field_free_energy_drift_over_a_thousand_periods():
    small = GridSpec(-8.0, 8.0, 128)
    spec = Quartic(1.0, 1.0)
    psi = ground_state(small, spec)
    steps_per_period = 2000
    series, final = propagate_wavefunction(psi, spec, NO_FIELD, NO_FIELD.period / steps_per_period,
                                           1000 * steps_per_period, record_every=steps_per_period)
    assert len(series) == 1001
    drift = np.abs(series.energy - series.energy[0]) / series.energy[0]
    assert drift.max() <= 1e-8
    assert final.norm() == pytest.approx(psi.norm(), abs=1e-10)


def test_harmonic_mean_follows_classical_oracle(grid):
    spec = Harmonic(1.0, 1.0)
    drive = make_bichromatic(1, 2, 0.5, 0.5, 0.0, 1.0, 0.7)
    psi = ground_state(grid, spec)
    steps_per_period = 20_000
    series, _ = propagate_wavefunction(psi, spec, drive, drive.period / steps_per_period,
                                       2 * steps_per_period, record_every=1000)
    x_exact, p_exact = exact_harmonic_trajectory(HarmonicSolution(0.0, 0.0, 1.0, 1.0, 1.0, drive), series.times)
    assert np.max(np.abs(series.mean_x - x_exact)) <= 1e-6
    assert np.max(np.abs(series.mean_p - p_exact)) <= 1e-6


def test_second_order_convergence(grid):
    spec = Quartic(1.0, 1.0)
    drive = make_bichromatic(1, 2, 0.3, 0.3, 0.0, 0.8, 1.0)
    psi = init_gaussian_state(grid, 1.0)
    finals = []
    for steps in (200, 400, 800):
        _, final = propagate_wavefunction(psi, spec, drive, drive.period / steps, steps, record_every=steps)
        finals.append(final.amplitudes)
    coarse = np.linalg.norm(finals[0] - finals[1])
    fine = np.linalg.norm(finals[1] - finals[2])
    assert 3.5 <= coarse / fine <= 4.5


def test_boundary_contamination_detected(grid):
    psi = init_gaussian_state(grid, 1.0, p0=5.0)
    with pytest.raises(BoundaryContamination):
        propagate_wavefunction(psi, Quartic(0.0, 1e-6), NO_FIELD, NO_FIELD.period / 200, 400, record_every=10)


def test_input_state_not_modified(grid):
    psi = init_gaussian_state(grid, 1.0)
    before = psi.amplitudes.copy()
    propagate_wavefunction(psi, Harmonic(), NO_FIELD, NO_FIELD.period / 200, 10)
    assert np.array_equal(psi.amplitudes, before)


# =============================================================================
# Wigner transform
# =============================================================================

def test_gaussian_wigner_closed_form(grid):
    sigma = 1.0
    psi = init_gaussian_state(grid, sigma)
    w = wigner_transform(psi)
    x = w.x_values[:, None]
    p = w.p_values[None, :]
    exact = np.exp(-x ** 2 / (2 * sigma ** 2) - 2 * sigma ** 2 * p ** 2) / math.pi
    assert np.max(np.abs(w.w_values - exact)) <= 1e-10
    assert w.w_values.min() >= -1e-10


def test_wigner_normalisation_and_marginals(grid):
    psi = init_gaussian_state(grid, 0.9, x0=1.0, p0=0.6)
    w = wigner_transform(psi)
    assert w.total() == pytest.approx(1.0, abs=1e-8)

    position_error = np.sum(np.abs(w.position_marginal() - psi.density())) * grid.dx
    assert position_error <= 1e-8

    n = grid.n_points
    p, density = psi.momentum_density(pad=2)
    assert np.allclose(p[n // 2:n // 2 + n], w.p_values)
    momentum_error = np.sum(np.abs(w.momentum_marginal() - density[n // 2:n // 2 + n])) * w.dp
    assert momentum_error <= 1e-8


@pytest.mark.parametrize("parity", ["even", "odd"])
def test_wigner_parity(grid, parity):
    x = grid.x
    amplitudes = np.exp(-x ** 2 / 2) * (1.0 if parity == "even" else x)
    psi = Wavefunction(grid, amplitudes / math.sqrt(np.sum(np.abs(amplitudes) ** 2) * grid.dx))
    w = wigner_transform(psi).w_values
    inner = w[1:, 1:]
    mirrored = w[:0:-1, :0:-1]
    assert np.max(np.abs(inner - mirrored)) <= 1e-10


def test_first_excited_state_is_negative_at_origin(grid):
    x = grid.x
    amplitudes = x * np.exp(-x ** 2 / 2)
    psi = Wavefunction(grid, amplitudes / math.sqrt(np.sum(amplitudes ** 2) * grid.dx))
    w = wigner_transform(psi)
    origin = w.w_values[grid.n_points // 2, grid.n_points // 2]
    assert origin == pytest.approx(-1.0 / math.pi, abs=1e-8)


def test_wigner_frame_layout(grid):
    w = wigner_transform(init_gaussian_state(grid, 1.0), x_stride=8)
    frame = w.to_frame()
    assert frame.shape == (grid.n_points // 8, grid.n_points)
    assert frame.index.name == "x"
