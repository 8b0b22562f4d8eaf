import math
from dataclasses import replace

import numpy as np
import pytest

from rectification.classical_engine import (
    STEP_WEIGHTS,
    Ensemble,
    concat_ensembles,
    propagate_ensemble,
    sample_symmetric_ensemble,
    single_trajectory,
    split_ensemble,
)
from rectification.errors import NonFiniteState, OddSampleCount, PreconditionError, StepTooLarge
from rectification.field_model import DriveField, make_bichromatic
from rectification.harmonic_oracle import HarmonicSolution, exact_harmonic_trajectory
from rectification.potential_model import CosineLattice, Harmonic, Quartic
from rectification.symmetry_predictor import SymmetryClass

NO_FIELD = DriveField(1.0, ())


def _pairs(x, p):
    return sorted(zip(x.tolist(), p.tolist()))


# =============================================================================
# Sampling
# =============================================================================

@pytest.mark.parametrize("symmetry_class", list(SymmetryClass))
def test_sampled_means_vanish_exactly(symmetry_class):
    ens = sample_symmetric_ensemble(1000, 1.0, 0.5, 42, symmetry_class)
    assert ens.size == 1000
    assert math.fsum(ens.positions) == 0.0
    assert math.fsum(ens.momenta) == 0.0


def test_reflection_class_is_closed_under_reflection():
    ens = sample_symmetric_ensemble(64, 1.0, 1.0, 1, SymmetryClass.REFLECTION)
    assert _pairs(ens.positions, ens.momenta) == _pairs(-ens.positions, -ens.momenta)


def test_even_in_p_class():
    ens = sample_symmetric_ensemble(64, 1.0, 1.0, 1, SymmetryClass.EVEN_IN_P)
    assert _pairs(ens.positions, ens.momenta) == _pairs(ens.positions, -ens.momenta)


def test_even_in_x_class():
    ens = sample_symmetric_ensemble(64, 1.0, 1.0, 1, SymmetryClass.EVEN_IN_X)
    assert _pairs(ens.positions, ens.momenta) == _pairs(-ens.positions, ens.momenta)


def test_full_class_has_all_three_symmetries():
    ens = sample_symmetric_ensemble(64, 1.0, 1.0, 1, SymmetryClass.FULL)
    x, p = ens.positions, ens.momenta
    base = _pairs(x, p)
    assert base == _pairs(-x, -p) == _pairs(x, -p) == _pairs(-x, p)


@pytest.mark.parametrize("symmetry_class", [SymmetryClass.EVEN_IN_P, SymmetryClass.EVEN_IN_X])
def test_half_odd_sample_means_vanish_exactly(symmetry_class):
    # n = 6 leaves an odd number of antithetic draws
    ens = sample_symmetric_ensemble(6, 1.0, 1.0, 3, symmetry_class)
    assert math.fsum(ens.positions) == 0.0
    assert math.fsum(ens.momenta) == 0.0
    assert _pairs(ens.positions, ens.momenta) == (
        _pairs(ens.positions, -ens.momenta) if symmetry_class is SymmetryClass.EVEN_IN_P
        else _pairs(-ens.positions, ens.momenta)
    )


def test_small_reflection_sample():
    ens = sample_symmetric_ensemble(4, 1.0, 1.0, 0, "reflection")
    assert ens.positions.mean() == 0.0
    assert ens.momenta.mean() == 0.0


def test_sample_spread_matches_sigmas():
    ens = sample_symmetric_ensemble(20_000, 2.0, 0.5, 5, SymmetryClass.FULL)
    assert ens.positions.std() == pytest.approx(2.0, rel=0.05)
    assert ens.momenta.std() == pytest.approx(0.5, rel=0.05)


def test_sampling_is_deterministic():
    a = sample_symmetric_ensemble(128, 1.0, 1.0, 9, SymmetryClass.EVEN_IN_P)
    b = sample_symmetric_ensemble(128, 1.0, 1.0, 9, SymmetryClass.EVEN_IN_P)
    c = sample_symmetric_ensemble(128, 1.0, 1.0, 10, SymmetryClass.EVEN_IN_P)
    assert np.array_equal(a.positions, b.positions) and np.array_equal(a.momenta, b.momenta)
    assert not np.array_equal(a.positions, c.positions)


def test_seed_sequence_accepted():
    seed = np.random.SeedSequence(entropy=3, spawn_key=(1, 2))
    a = sample_symmetric_ensemble(16, 1.0, 1.0, seed, SymmetryClass.REFLECTION)
    b = sample_symmetric_ensemble(16, 1.0, 1.0, np.random.SeedSequence(entropy=3, spawn_key=(1, 2)),
                                  SymmetryClass.REFLECTION)
    assert np.array_equal(a.positions, b.positions)


@pytest.mark.parametrize("n, symmetry_class", [
    (3, SymmetryClass.REFLECTION),
    (0, SymmetryClass.EVEN_IN_X),
    (6, SymmetryClass.FULL),
])
def test_bad_sample_counts(n, symmetry_class):
    with pytest.raises(OddSampleCount):
        sample_symmetric_ensemble(n, 1.0, 1.0, 0, symmetry_class)


def test_bad_sigma():
    with pytest.raises(PreconditionError):
        sample_symmetric_ensemble(4, 0.0, 1.0, 0, SymmetryClass.REFLECTION)


def test_ensemble_length_mismatch():
    with pytest.raises(PreconditionError):
        Ensemble(np.zeros(3), np.zeros(4))


# =============================================================================
# Propagation contracts
# =============================================================================

def test_step_cap():
    with pytest.raises(StepTooLarge):
        propagate_ensemble(single_trajectory(1.0, 0.0), Harmonic(), NO_FIELD, NO_FIELD.period / 100, 10)
    with pytest.raises(PreconditionError):
        propagate_ensemble(single_trajectory(1.0, 0.0), Harmonic(), NO_FIELD, 0.0, 10)


def test_record_schedule():
    series, final = propagate_ensemble(single_trajectory(1.0, 0.0), Harmonic(), NO_FIELD,
                                       NO_FIELD.period / 400, 10, record_every=3)
    dt = NO_FIELD.period / 400
    assert np.allclose(series.times, np.array([0, 3, 6, 9, 10]) * dt)
    assert final.time == pytest.approx(10 * dt)
    assert list(series.to_frame().columns) == ["t", "mean_x", "mean_p", "energy"]


def test_non_finite_state_detected():
    ens = single_trajectory(1e60, 0.0)
    with pytest.raises(NonFiniteState):
        propagate_ensemble(ens, Quartic(1.0, 1.0), NO_FIELD, NO_FIELD.period / 200, 5)


def test_input_ensemble_not_modified():
    ens = sample_symmetric_ensemble(8, 1.0, 1.0, 0, SymmetryClass.REFLECTION)
    before = ens.positions.copy()
    propagate_ensemble(ens, Quartic(), NO_FIELD, NO_FIELD.period / 200, 50)
    assert np.array_equal(ens.positions, before)


# =============================================================================
# Accuracy against the harmonic oracle
# =============================================================================

@pytest.mark.parametrize("order, odd_powers", [(4, (3,)), (6, (3, 5))])
def test_composition_weights_satisfy_order_conditions(order, odd_powers):
    weights = np.array(STEP_WEIGHTS[order])
    assert weights.sum() == pytest.approx(1.0, abs=1e-14)
    assert np.array_equal(weights, weights[::-1])
    for power in odd_powers:
        assert abs(np.sum(weights ** power)) <= 1e-10


@pytest.mark.parametrize("order, tol", [(2, 1e-5), (4, 1e-8), (6, 1e-10)])
def test_free_harmonic_orbit_closes(order, tol):
    ens = sample_symmetric_ensemble(16, 1.0, 1.0, 2, SymmetryClass.FULL)
    drive = DriveField(1.0, ())
    steps = 2000
    _, final = propagate_ensemble(ens, Harmonic(1.0, 1.0), drive, drive.period / steps, steps, order=order)
    scale = np.sqrt(ens.positions ** 2 + ens.momenta ** 2)
    assert np.all(np.abs(final.positions - ens.positions) <= tol * scale)
    assert np.all(np.abs(final.momenta - ens.momenta) <= tol * scale)


@pytest.mark.parametrize("order, tol", [(2, 5e-4), (4, 1e-6), (6, 1e-9)])
def test_driven_harmonic_mean_follows_oracle(order, tol):
    drive = make_bichromatic(1, 2, 0.5, 0.5, 0.0, 1.0, 0.7)
    ens = sample_symmetric_ensemble(32, 1.0, 1.0, 4, SymmetryClass.FULL)
    steps_per_period = 2000
    series, _ = propagate_ensemble(ens, Harmonic(1.0, 1.0), drive, drive.period / steps_per_period,
                                   10 * steps_per_period, record_every=100, order=order)
    sol = HarmonicSolution(0.0, 0.0, 1.0, 1.0, 1.0, drive)
    x_exact, p_exact = exact_harmonic_trajectory(sol, series.times)
    assert np.max(np.abs(series.mean_x - x_exact)) <= tol
    assert np.max(np.abs(series.mean_p - p_exact)) <= tol


def test_single_trajectory_follows_oracle_with_charge_and_mass():
    drive = make_bichromatic(1, 3, 0.4, 0.2, 0.3, 0.0, 0.6).with_global_phase(1.0)
    m, q, w0 = 1.7, -0.8, 1.3
    ens = single_trajectory(0.5, -0.2, mass=m, charge=q)
    potential = Harmonic(omega0=w0, mass=m)
    series, _ = propagate_ensemble(ens, potential, drive, drive.period / 2000, 5 * 2000,
                                   record_every=250, order=4)
    x_exact, _ = exact_harmonic_trajectory(HarmonicSolution(0.5, -0.2, w0, m, q, drive), series.times)
    assert np.max(np.abs(series.mean_x - x_exact)) <= 1e-6


def _random_resonance_free_oscillator(rng):
    while True:
        omega = rng.uniform(0.8, 1.2)
        w0 = rng.uniform(0.6, 2.0)
        if min(abs(w0 - omega), abs(w0 - 2 * omega)) >= 0.15:
            break
    eps_1, eps_2 = rng.uniform(0.1, 0.5, size=2)
    phi_1, phi_2 = rng.uniform(0.0, 2 * math.pi, size=2)
    x0, p0 = rng.uniform(-1.0, 1.0, size=2)
    return make_bichromatic(1, 2, eps_1, eps_2, phi_1, phi_2, omega), w0, x0, p0


@pytest.mark.slow
def test_sixth_order_stepper_matches_closed_form_on_random_oscillators():
    rng = np.random.default_rng(2024)
    steps_per_period = 2000
    for _ in range(20):
        drive, w0, x0, p0 = _random_resonance_free_oscillator(rng)
        series, _ = propagate_ensemble(single_trajectory(x0, p0), Harmonic(w0, 1.0), drive,
                                       drive.period / steps_per_period, 100 * steps_per_period,
                                       record_every=steps_per_period // 10, order=6)
        x_exact, _ = exact_harmonic_trajectory(HarmonicSolution(x0, p0, w0, 1.0, 1.0, drive), series.times)
        error = np.abs(series.mean_x - x_exact)
        assert np.all(error <= 1e-8 * np.maximum(1.0, np.abs(x_exact))), (drive, w0, error.max())


# =============================================================================
# Structure-preserving properties
# =============================================================================

def test_field_free_energy_is_bounded():
    ens = sample_symmetric_ensemble(64, 0.5, 0.5, 8, SymmetryClass.FULL)
    steps_per_period = 2000
    series, _ = propagate_ensemble(ens, Quartic(1.0, 1.0), NO_FIELD, NO_FIELD.period / steps_per_period,
                                   50 * steps_per_period, record_every=20)
    deviation = np.abs(series.energy - series.energy[0]) / series.energy[0]
    per_period = 100
    assert deviation.max() <= 2e-5
    # oscillates without secular growth
    assert deviation[-5 * per_period:].max() <= 2.0 * deviation[:5 * per_period].max()


@pytest.mark.slow
def test_field_free_energy_drift_over_a_thousand_periods():
    ens = sample_symmetric_ensemble(16, 0.5, 0.5, 8, SymmetryClass.FULL)
    steps_per_period = 2000
    series, _ = propagate_ensemble(ens, Quartic(1.0, 1.0), NO_FIELD, NO_FIELD.period / steps_per_period,
                                   1000 * steps_per_period, record_every=steps_per_period, order=4)
    assert len(series) == 1001
    drift = np.abs(series.energy - series.energy[0]) / series.energy[0]
    assert drift.max() <= 1e-8


def test_reflection_equivariance():
    drive = make_bichromatic(1, 2, 0.2, 0.2, 0.0, 0.8, 0.6)
    ens = sample_symmetric_ensemble(32, 0.5, 0.5, 3, SymmetryClass.EVEN_IN_X)
    dt = drive.period / 400
    forward, _ = propagate_ensemble(ens, Quartic(1.0, 1.0), drive, dt, 4000, record_every=10)
    mirrored, _ = propagate_ensemble(ens.reflected(), Quartic(1.0, 1.0), drive.negated(), dt, 4000,
                                     record_every=10)
    assert np.allclose(mirrored.mean_x, -forward.mean_x, rtol=0, atol=1e-10)
    assert np.allclose(mirrored.mean_p, -forward.mean_p, rtol=0, atol=1e-10)


@pytest.mark.parametrize("order", [2, 4, 6])
def test_time_reversal(order):
    drive = make_bichromatic(1, 2, 0.3, 0.3, 0.0, 0.5, 0.9)
    ens = sample_symmetric_ensemble(16, 0.7, 0.7, 6, SymmetryClass.REFLECTION)
    dt = drive.period / 500
    _, there = propagate_ensemble(ens, Quartic(1.0, 1.0), drive, dt, 2000, order=order)
    _, back = propagate_ensemble(there, Quartic(1.0, 1.0), drive, -dt, 2000, order=order)
    assert back.time == pytest.approx(0.0, abs=1e-9)
    assert np.max(np.abs(back.positions - ens.positions)) <= 1e-9
    assert np.max(np.abs(back.momenta - ens.momenta)) <= 1e-9


def test_global_phase_is_a_time_origin_shift():
    base = make_bichromatic(1, 2, 0.3, 0.3, 0.0, 0.4, 0.8)
    alpha = 2.1
    ens = sample_symmetric_ensemble(16, 0.5, 0.5, 7, SymmetryClass.FULL)
    dt = base.period / 400
    shifted_field, _ = propagate_ensemble(ens, Quartic(), base.with_global_phase(alpha), dt, 2000, record_every=40)
    t0 = alpha * base.period / (2 * math.pi)
    shifted_origin, _ = propagate_ensemble(replace(ens, time=t0), Quartic(), base, dt, 2000, record_every=40)
    assert np.allclose(shifted_field.mean_x, shifted_origin.mean_x, rtol=0, atol=1e-8)
    assert np.allclose(shifted_field.mean_p, shifted_origin.mean_p, rtol=0, atol=1e-8)


def test_partitioned_propagation_is_bitwise_identical():
    drive = make_bichromatic(1, 2, 0.5, 0.5, 0.0, 1.0, 1.1)
    ens = sample_symmetric_ensemble(64, 1.0, 1.0, 12, SymmetryClass.FULL)
    dt = drive.period / 300
    _, whole = propagate_ensemble(ens, Quartic(-1.0, 1.0), drive, dt, 600)
    parts = [propagate_ensemble(part, Quartic(-1.0, 1.0), drive, dt, 600)[1] for part in split_ensemble(ens, 4)]
    merged = concat_ensembles(parts)
    assert np.array_equal(merged.positions, whole.positions)
    assert np.array_equal(merged.momenta, whole.momenta)


def test_split_needs_equal_parts():
    ens = sample_symmetric_ensemble(8, 1.0, 1.0, 0, SymmetryClass.REFLECTION)
    with pytest.raises(PreconditionError):
        split_ensemble(ens, 3)


def test_block_means_average_to_the_total():
    ens = sample_symmetric_ensemble(64, 1.0, 1.0, 1, SymmetryClass.FULL)
    drive = make_bichromatic(1, 2, 0.5, 0.5, 0.0, 0.3, 1.0)
    series, _ = propagate_ensemble(ens, Quartic(), drive, drive.period / 200, 400, record_every=10, n_blocks=4)
    assert series.block_mean_x.shape == (len(series), 4)
    assert np.allclose(series.block_mean_x.mean(axis=1), series.mean_x, atol=1e-14)
    assert np.allclose(series.block_mean_p.mean(axis=1), series.mean_p, atol=1e-14)


def test_lattice_trajectories_are_not_clipped():
    drive = make_bichromatic(1, 2, 2.0, 2.0, 0.0, math.pi / 2, 1.0)
    ens = sample_symmetric_ensemble(64, 1.0, 1.0, 0, SymmetryClass.FULL)
    _, final = propagate_ensemble(ens, CosineLattice(1.0, 1.0), drive, drive.period / 200, 20 * 200)
    assert np.all(np.isfinite(final.positions))
    assert np.max(np.abs(final.positions)) > 2 * math.pi
