import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies

from Physics.Hilbert import OperatorMatrix, ket_to_density, fock_state
from Physics.Hilbert import InvalidStateError
from Physics.Dynamics import InvalidParameterError
from Physics.Drive import CombSpec, if_drive_signal
from Physics.Trajectories import VoltageRecord, RecordSet, simulate_record, simulate_ensemble, ensemble_mean_record
from Physics.Trajectories import poisson_populations, sample_jumps, simulate_jump_record, simulate_jump_ensemble
from Physics.Trajectories import sme_step_heterodyne, sme_step_homodyne, comb_reference, sampled_comb_reference
from Physics.Random import trajectory_generator


def test_record_length_and_states(fast_params, half_kick_comb):
    result = simulate_record(fast_params, half_kick_comb, 1, seed=11, substeps=5)
    assert len(result.record) == 5 * 42
    assert result.record.dt == pytest.approx(half_kick_comb.sample_dt)
    assert len(result.states) == len(result.record)
    assert len(result.dW) == 5 * len(result.record)
    for state in result.states[::40]:
        assert state.min_eigenvalue() > -1e-9


def test_record_is_reproducible(fast_params, half_kick_comb):
    first = simulate_record(fast_params, half_kick_comb, 2, seed=3, index=4)
    second = simulate_record(fast_params, half_kick_comb, 2, seed=3, index=4)
    other = simulate_record(fast_params, half_kick_comb, 2, seed=3, index=5)
    assert np.array_equal(first.record.samples, second.record.samples)
    assert not np.array_equal(first.record.samples, other.record.samples)


def test_photon_number_outside_range(fast_params, half_kick_comb):
    with pytest.raises(InvalidParameterError):
        simulate_record(fast_params, half_kick_comb, fast_params.N_max + 1)


def test_duration_must_fill_periods(fast_params, half_kick_comb):
    with pytest.raises(InvalidParameterError):
        simulate_record(fast_params, half_kick_comb, 0, duration=1.5 * half_kick_comb.period)


def test_ensemble_does_not_depend_on_workers(fast_params, half_kick_comb):
    single = simulate_ensemble(fast_params, half_kick_comb, 1, 70, master_seed=5, workers=1)
    pooled = simulate_ensemble(fast_params, half_kick_comb, 1, 70, master_seed=5, workers=3)
    assert len(single) == 70
    assert np.array_equal(single.samples, pooled.samples)


def test_ensemble_rows_follow_trajectory_index(fast_params, half_kick_comb):
    full = simulate_ensemble(fast_params, half_kick_comb, 0, 8, master_seed=9)
    tail = simulate_ensemble(fast_params, half_kick_comb, 0, 3, master_seed=9, first_index=5)
    assert np.allclose(tail.samples, full.samples[5:], rtol=1e-9, atol=1e-9)


def test_ensemble_mean_matches_lindblad_record(fast_params, half_kick_comb):
    template = ensemble_mean_record(fast_params, half_kick_comb, 1).samples
    ensemble = simulate_ensemble(fast_params, half_kick_comb, 1, 128, master_seed=21)
    residual = ensemble.mean() - template

    # Per sample white noise of the ensemble mean
    sigma = 1 / math.sqrt(half_kick_comb.sample_dt * len(ensemble))
    norm = np.linalg.norm(template)
    assert norm > 0
    assert abs(residual @ template) / norm < 5 * sigma
    assert np.std(residual) == pytest.approx(sigma, rel=0.2)


def test_undriven_ground_state_has_no_signal(fast_params, half_kick_comb):
    silent = half_kick_comb.with_amplitude(0.0)
    assert np.allclose(ensemble_mean_record(fast_params, silent, 0).samples, 0)


def test_comb_reference_is_added(fast_params, half_kick_comb):
    bare = simulate_record(fast_params, half_kick_comb, 0, seed=2)
    with_comb = simulate_record(fast_params, half_kick_comb, 0, seed=2, add_comb=True)
    difference = with_comb.record.samples - bare.record.samples
    assert np.max(np.abs(difference)) > 0
    reference = sampled_comb_reference(fast_params, half_kick_comb, len(bare.record))
    assert np.allclose(difference, reference, atol=1e-9)


def test_comb_reference_sign(fast_params, half_kick_comb):
    t = np.array([0.0])
    expected = -math.sqrt(fast_params.eta * fast_params.T_q) * if_drive_signal(fast_params, half_kick_comb, t)
    assert np.allclose(comb_reference(fast_params, half_kick_comb, t), expected)


def test_voltage_record_save_and_load(tmp_path):
    record = VoltageRecord(np.linspace(-1, 1, 84), 0.01, gain=2.0, n_true=3, seed=7, index=2, period=0.42)
    path = record.save(str(tmp_path / "record.f64"))
    loaded = VoltageRecord.load(path)
    assert np.array_equal(loaded.samples, record.samples)
    assert loaded.metadata() == record.metadata()


def test_voltage_record_must_fill_periods():
    with pytest.raises(ValueError):
        VoltageRecord(np.zeros(10), 0.1, period=0.3)


def test_record_set_halves_are_disjoint():
    records = RecordSet(np.arange(30.0).reshape(5, 6), 0.1)
    first, second = records.halves()
    assert first.shape == second.shape == (2, 6)
    assert not set(first[:, 0]) & set(second[:, 0])
    assert records.record(4).samples[0] == 24.0


def test_heterodyne_step_record_increment(fast_params):
    plus = ket_to_density([1, 1])
    zero = OperatorMatrix(np.zeros((2, 2)), hermitian=True)
    dt = 1e-4
    rho, dy = sme_step_heterodyne(plus, zero, fast_params, 0.0, dt)
    assert dy == pytest.approx(math.sqrt(fast_params.eta / fast_params.T_q) * 0.5 * dt)
    assert rho.min_eigenvalue() > -1e-12
    _, dy = sme_step_homodyne(plus, zero, fast_params, 0.0, dt)
    assert dy == pytest.approx(2 * math.sqrt(fast_params.eta / fast_params.T_q) * 0.5 * dt)


def test_measurement_keeps_excited_state_valid(fast_params):
    excited = ket_to_density([0, 1])
    zero = OperatorMatrix(np.zeros((2, 2)), hermitian=True)
    rho, dy = sme_step_heterodyne(excited, zero, fast_params, 0.003 + 0.002j, 1e-4)
    assert dy == pytest.approx(0.003 + 0.002j)
    assert abs(np.trace(rho.data) - 1) < 1e-12


def test_poisson_populations():
    assert np.array_equal(poisson_populations(0.0, 4), [1, 0, 0, 0, 0])
    populations = poisson_populations(2.0, 9)
    assert populations.sum() == pytest.approx(1.0)
    assert populations[1] == pytest.approx(populations[2], rel=1e-6)
    with pytest.raises(InvalidParameterError):
        poisson_populations(-1.0, 4)


def test_jump_staircase_decreases():
    rng = trajectory_generator(1, 0)
    initial, jumps = sample_jumps(rng, poisson_populations(4.0, 9), 1000.0, 50.0)
    times = [t for t, _ in jumps]
    assert times == sorted(times)
    assert [n for _, n in jumps] == list(range(initial - 1, initial - 1 - len(jumps), -1))


def test_no_jumps_without_dissipation():
    rng = trajectory_generator(1, 0)
    _, jumps = sample_jumps(rng, poisson_populations(4.0, 9), 1000.0, 50.0, dissipation=False)
    assert jumps == []
    _, jumps = sample_jumps(rng, poisson_populations(4.0, 9), 1000.0, math.inf)
    assert jumps == []


def test_jump_record_needs_diagonal_state(fast_params, half_kick_comb):
    coherent = ket_to_density(np.ones(fast_params.N_trunc + 1))
    with pytest.raises(InvalidStateError):
        simulate_jump_record(fast_params, half_kick_comb, coherent, half_kick_comb.duration, seed=1)


def test_jump_record_tracks_fock_state(fast_params, half_kick_comb):
    result = simulate_jump_record(fast_params, half_kick_comb, fock_state(2, fast_params.N_trunc),
                                  half_kick_comb.duration, seed=4, dissipation=False)
    assert result.jumps == []
    assert np.all(result.photon_numbers == 2)
    assert len(result.states) == len(result.record)


def test_jump_ensemble_is_consistent(fast_params, half_kick_comb):
    short_lived = fast_params.replace(T_c=0.2)
    populations = poisson_populations(2.0, fast_params.N_max)
    ensemble = simulate_jump_ensemble(short_lived, half_kick_comb, populations, half_kick_comb.duration, 12,
                                      master_seed=8)
    assert len(ensemble) == 12
    assert ensemble.photon_numbers.shape == (12, len(ensemble.records[0]))
    for row, initial, jumps in zip(ensemble.photon_numbers, ensemble.initial_numbers, ensemble.jumps):
        assert np.all(np.diff(row) <= 0)
        assert row[-1] >= initial - len(jumps)
        assert row[0] <= initial


def test_jump_ensemble_does_not_depend_on_workers(fast_params, half_kick_comb):
    populations = poisson_populations(2.0, fast_params.N_max)
    single = simulate_jump_ensemble(fast_params, half_kick_comb, populations, half_kick_comb.duration, 70, 3)
    pooled = simulate_jump_ensemble(fast_params, half_kick_comb, populations, half_kick_comb.duration, 70, 3,
                                    workers=4)
    assert np.array_equal(np.array([r.samples for r in single.records]),
                          np.array([r.samples for r in pooled.records]))
    assert np.array_equal(single.initial_numbers, pooled.initial_numbers)


def test_drive_off_noise_variance_is_gain_over_step(fast_params, half_kick_comb):
    silent = half_kick_comb.with_amplitude(0.0)
    gain = 2.5
    records = simulate_ensemble(fast_params, silent, 0, 384, master_seed=31, gain=gain)
    assert np.var(records.samples) == pytest.approx(gain / silent.sample_dt, rel=0.02)


@settings(max_examples=100, deadline=None)
@given(strategies.integers(min_value=0, max_value=2 ** 32 - 1), strategies.integers(min_value=0, max_value=4))
def test_trajectory_states_stay_valid(fast_params, seed, n):
    spec = CombSpec.from_kick_angle(0.5 * math.pi, fast_params, n_periods=1)
    result = simulate_record(fast_params, spec, n, seed=seed)
    for state in result.states:
        assert abs(np.trace(state.data) - 1) < 1e-9
        assert state.min_eigenvalue() > -1e-9
