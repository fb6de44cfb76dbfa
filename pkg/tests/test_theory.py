import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies

from Physics.Hilbert import annihilation_op, number_op, coherent_state, expectation
from Physics.Drive import CombSpec
from Physics.Random import trajectory_generator
from Analysis.Theory import FitError, EmittedStatePair, OutcomeModel, emitted_overlap, dephasing_rate_bound
from Analysis.Theory import binary_entropy, to_bits, accessible_information, accessible_information_rate
from Analysis.Theory import brute_force_accessible_information, kick_rotation, mode_overlap
from Analysis.Theory import outcome_distribution_infinite_comb, heterodyne_information, heterodyne_rate_bound
from Analysis.Theory import gaussian_approximation_divergence, fit_exponential, simulate_dephasing_series
from Analysis.Theory import dephasing_extraction, coherent_vacuum_probability, coherent_vacuum_decay_fit


def test_emitted_overlap_values():
    assert emitted_overlap(0.0, 0.76) == pytest.approx(1.0)
    assert emitted_overlap(math.pi, 0.76) == pytest.approx(1 / (1 - 0.76j))
    assert EmittedStatePair(math.pi, 0.76).magnitude == pytest.approx(0.796, abs=1e-3)
    assert emitted_overlap(1.3, 0.0) == pytest.approx(1.0)


def test_dephasing_bound(paper_params):
    assert dephasing_rate_bound(0.0, paper_params) == pytest.approx(0.0)
    assert dephasing_rate_bound(math.pi, paper_params) == pytest.approx(2.4, abs=0.05)
    thetas = np.linspace(0, math.pi, 21)
    bounds = [dephasing_rate_bound(theta, paper_params) for theta in thetas]
    assert np.all(np.diff(bounds) > 0)


def test_binary_entropy_and_bits():
    assert binary_entropy(0.5) == pytest.approx(math.log(2))
    assert binary_entropy(0.0) == 0.0
    assert to_bits(math.log(2)) == pytest.approx(1.0)


def test_accessible_information_limits():
    assert accessible_information(1.0) == pytest.approx(0.0, abs=1e-15)
    assert accessible_information(0.0) == pytest.approx(math.log(2))
    assert accessible_information(0.796) == pytest.approx(brute_force_accessible_information(0.796), abs=1e-4)


@settings(max_examples=10, deadline=None)
@given(strategies.floats(min_value=0.0, max_value=1.0))
def test_accessible_information_is_optimal(s):
    assert accessible_information(s) == pytest.approx(brute_force_accessible_information(s), abs=1e-4)


def test_accessible_information_rate(paper_params):
    s = abs(emitted_overlap(math.pi, paper_params.chi_tq))
    rate = accessible_information_rate(math.pi, paper_params)
    assert rate == pytest.approx(accessible_information(s) / paper_params.comb_period)


def test_kick_rotation_flips_for_odd_numbers():
    theta = 0.7
    for n in [0, 2]:
        assert np.allclose(kick_rotation(theta, n, 0).data, kick_rotation(theta, n, 1).data)
    back_and_forth = kick_rotation(theta, 1, 1) @ kick_rotation(theta, 1, 0)
    assert np.allclose(back_and_forth.data, np.eye(2))
    excited = kick_rotation(theta, 3, 0).data @ np.array([1, 0])
    assert abs(excited[1]) ** 2 == pytest.approx(math.sin(theta / 2) ** 2)


def test_mode_overlap():
    assert mode_overlap(2, 2, 0.76) == 1.0
    assert abs(mode_overlap(3, 1, 0.5)) ** 2 == pytest.approx(1 / (1 + 4 * 0.25))


@pytest.mark.parametrize("theta, eta, n, k", [(0.5 * math.pi, 1.0, 0, 0), (math.pi, 0.185, 2, 3), (0.3, 0.5, 1, 0)])
def test_outcome_density_is_normalized(theta, eta, n, k):
    axis = np.arange(-7, 7, 0.02)
    x, y = np.meshgrid(axis, axis)
    model = outcome_distribution_infinite_comb(theta, eta, n, k, 0.76)
    assert np.sum(model.density(x + 1j * y)) * 0.02 ** 2 == pytest.approx(1.0, abs=1e-6)


def test_outcome_density_without_information():
    m = np.array([0.3 + 0.1j, -1.2j, 2.0])
    vacuum = np.exp(-np.abs(m) ** 2) / math.pi
    assert np.allclose(OutcomeModel(0.0, 1.0, 3, 3, 0.76).density(m), vacuum)
    blind = [OutcomeModel(1.0, 0.0, n, 0, 0.76).density(m) for n in range(3)]
    assert np.allclose(blind[0], blind[1]) and np.allclose(blind[1], blind[2])


def test_outcome_samples_match_moments():
    model = OutcomeModel(0.5 * math.pi, 1.0, 0, 0, 0.76)
    assert model.mean == pytest.approx(0.5)
    samples = model.sample(trajectory_generator(1, 0), 200000)
    assert np.mean(samples) == pytest.approx(model.mean, abs=0.01)
    empirical = np.cov(np.vstack([samples.real, samples.imag]))
    assert np.allclose(empirical, model.covariance, atol=0.01)


def test_off_resonant_samples_keep_mode_fraction():
    model = OutcomeModel(math.pi / 2, 1.0, 0, 1, 0.76)
    assert model.effective_eta == pytest.approx(1 / (1 + 0.76 ** 2))
    samples = model.sample(trajectory_generator(2, 0), 200000)
    assert np.mean(samples) == pytest.approx(model.mean, abs=0.01)


def test_heterodyne_information():
    assert heterodyne_information(1.0, 0.0, 0.76).value == 0.0
    assert heterodyne_information(0.0, 1.0, 0.76).value == 0.0
    estimate = heterodyne_information(math.pi, 1.0, 0.76, n_samples=40000, seed=3)
    assert estimate.value > 5 * estimate.stderr


def test_heterodyne_information_stays_below_accessible_information():
    theta = 0.5 * math.pi
    estimate = heterodyne_information(theta, 1.0, 0.76, n_samples=40000, seed=4)
    bound = accessible_information(abs(emitted_overlap(theta, 0.76)))
    assert estimate.value <= bound + 3 * estimate.stderr


def test_heterodyne_rate_bound_scales_by_period(paper_params):
    information = heterodyne_information(0.5 * math.pi, 0.185, paper_params.chi_tq, n_samples=5000, seed=5)
    rate = heterodyne_rate_bound(0.5 * math.pi, 0.185, paper_params, n_samples=5000, seed=5)
    assert rate.value == pytest.approx(information.value / paper_params.comb_period)
    assert rate.stderr == pytest.approx(information.stderr / paper_params.comb_period)


def test_gaussian_approximation_divergence():
    exact = gaussian_approximation_divergence(0.0, 1.0, n_samples=2000)
    assert exact.value == pytest.approx(0.0, abs=1e-9)
    divergence = gaussian_approximation_divergence(math.pi, 1.0, n_samples=50000)
    assert divergence.value > -3 * divergence.stderr


def test_fit_exponential_recovers_rate():
    times = np.linspace(1, 10, 12)
    amplitude, rate, r2 = fit_exponential(times, 2.0 * np.exp(-0.3 * times))
    assert amplitude == pytest.approx(2.0, rel=1e-6)
    assert rate == pytest.approx(0.3, rel=1e-6)
    assert r2 == pytest.approx(1.0)
    with pytest.raises(FitError):
        fit_exponential([0.0, 1.0], [1.0, 0.5])


def test_coherent_vacuum_decay_fit():
    times = np.linspace(0, 800, 17)
    p0 = coherent_vacuum_probability(times, 1.5, 200.0)
    n0, T_c, residuals = coherent_vacuum_decay_fit(times, p0)
    assert n0 == pytest.approx(1.5, rel=1e-4)
    assert T_c == pytest.approx(200.0, rel=1e-4)
    assert np.max(np.abs(residuals)) < 1e-6
    with pytest.raises(FitError):
        coherent_vacuum_decay_fit(times[:4], p0[:4])
    with pytest.raises(FitError):
        coherent_vacuum_decay_fit(times, p0 + 1.0)


@pytest.mark.parametrize("use_wigner, tolerance", [(False, 1e-6), (True, 1e-2)])
def test_dephasing_extraction_of_decaying_coherent_states(fast_params, use_wigner, tolerance):
    rate = 0.05
    times = np.linspace(0, 20, 9)
    states = [coherent_state(1.0 * math.exp(-rate * t), 12) for t in times]
    result = dephasing_extraction(times, states, fast_params, theta=0.0, use_wigner=use_wigner)
    assert result.gamma == pytest.approx(rate, rel=tolerance)
    assert result.kappa == pytest.approx(2 * rate, rel=tolerance)
    assert result.gamma_d == pytest.approx(-1 / fast_params.T_c_phi, abs=tolerance * 2 * rate)
    assert not result.flagged
    assert result.to_dict()["theta"] == 0.0


def test_dephasing_series_conserves_photon_decay(fast_params):
    params = fast_params.replace(T_c=0.5)
    spec = CombSpec.from_kick_angle(0.5 * math.pi, params)
    times, states = simulate_dephasing_series(params, spec, 1.0, 2, n_trunc=4, steps_per_period=42)
    assert np.allclose(times, spec.period * np.arange(3))
    photons = np.array([expectation(state, number_op(4)).real for state in states])
    assert np.allclose(photons, photons[0] * np.exp(-times / params.T_c), rtol=1e-6)


def test_measurement_dephases_the_cavity(fast_params):
    undriven = CombSpec.from_kick_angle(0.0, fast_params)
    driven = CombSpec.from_kick_angle(0.5 * math.pi, fast_params)
    a = annihilation_op(4)
    _, quiet = simulate_dephasing_series(fast_params, undriven, 1.0, 2, n_trunc=4, steps_per_period=42)
    _, kicked = simulate_dephasing_series(fast_params, driven, 1.0, 2, n_trunc=4, steps_per_period=42)
    assert abs(expectation(kicked[-1], a)) < abs(expectation(quiet[-1], a))


@pytest.mark.parametrize("theta", [0.5 * math.pi, math.pi])
def test_gaussian_approximation_improves_at_low_efficiency(theta):
    ideal = gaussian_approximation_divergence(theta, 1.0, n_samples=100000, seed=3)
    lossy = gaussian_approximation_divergence(theta, 0.2, n_samples=100000, seed=3)
    assert 10 * (lossy.value + 3 * lossy.stderr) < ideal.value - 3 * ideal.stderr


@settings(max_examples=30, deadline=None)
@given(strategies.floats(min_value=0.1, max_value=10.0))
def test_overlap_magnitude_decreases_with_kick(chiTq):
    magnitudes = np.array([abs(emitted_overlap(theta, chiTq)) for theta in np.linspace(0, math.pi, 201)])
    assert np.all(np.diff(magnitudes) < 0)
