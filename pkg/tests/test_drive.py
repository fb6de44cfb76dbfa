import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies

from Physics.Drive import CombSpec, InvalidCombError, dirichlet_kernel, comb_envelope, kick_angle, comb_teeth
from Physics.Drive import envelope_period, drive_hamiltonian_term, qubit_hamiltonian, if_drive_signal, is_multiple
from Physics.Drive import period_unitary, rotation_angle, effective_kick_angle


def one_period(spec):
    return np.arange(spec.samples_per_period) * spec.sample_dt


@settings(max_examples=50, deadline=None)
@given(strategies.floats(min_value=0.01, max_value=6.2), strategies.integers(min_value=0, max_value=15))
def test_dirichlet_kernel_closed_form(x, K):
    expected = math.sin((2 * K + 1) * x / 2) / math.sin(x / 2)
    assert dirichlet_kernel(x, K) == pytest.approx(expected, abs=1e-9)


def test_dirichlet_kernel_at_zero():
    assert dirichlet_kernel(0.0, 10) == pytest.approx(21.0)


def test_envelope_peak_and_half_period():
    spec = CombSpec(Omega=1.3, delta_omega=2.0)
    assert comb_envelope(spec, 0.0) == pytest.approx(21 * 1.3)
    assert comb_envelope(spec, math.pi / spec.delta_omega) == pytest.approx(1.3)


def test_envelope_period_average_is_one_tooth(paper_params):
    spec = CombSpec.from_kick_angle(0.5 * math.pi, paper_params)
    average = np.mean(comb_envelope(spec, one_period(spec)))
    assert average == pytest.approx(spec.Omega, abs=1e-9)


def test_teeth_satisfy_parseval(paper_params):
    spec = CombSpec.from_kick_angle(0.75 * math.pi, paper_params)
    offsets, amplitudes = comb_teeth(spec)
    assert len(offsets) == spec.n_teeth == 21
    power = np.mean(np.abs(comb_envelope(spec, one_period(spec))) ** 2)
    assert power == pytest.approx(np.sum(amplitudes ** 2), rel=1e-9)


@pytest.mark.parametrize("theta", [0.25 * math.pi, 0.5 * math.pi, 0.75 * math.pi, math.pi])
def test_kick_angle_round_trip(paper_params, theta):
    spec = CombSpec.from_kick_angle(theta, paper_params)
    assert kick_angle(spec) == pytest.approx(theta)
    assert spec.duration == pytest.approx(21 * paper_params.comb_period)
    assert spec.samples_per_period == 42


def test_kick_angle_from_amplitude(paper_params):
    chi = paper_params.chi
    assert kick_angle(CombSpec(Omega=chi / 2, delta_omega=2 * chi)) == pytest.approx(0.5 * math.pi)
    assert kick_angle(CombSpec(Omega=chi, delta_omega=2 * chi)) == pytest.approx(math.pi)


def test_invalid_combs_are_rejected():
    with pytest.raises(InvalidCombError):
        CombSpec(Omega=1.0, delta_omega=0.0)
    with pytest.raises(InvalidCombError):
        CombSpec(Omega=1.0, delta_omega=2 * math.pi, K=-1)
    with pytest.raises(InvalidCombError):
        CombSpec(Omega=1.0, delta_omega=2 * math.pi, duration=1.5)
    with pytest.raises(InvalidCombError):
        CombSpec(Omega=1.0, delta_omega=2 * math.pi, sample_dt=0.3)


def test_is_multiple():
    assert is_multiple(3.0, 1.0)
    assert not is_multiple(2.5, 1.0)
    assert not is_multiple(0.0, 1.0)


def test_envelope_period_with_carrier(paper_params):
    spec = CombSpec.from_kick_angle(0.5 * math.pi, paper_params)
    assert envelope_period(spec) == pytest.approx(spec.period)
    # 66 MHz against a 10.5 MHz comb repeats after seven periods
    assert envelope_period(spec, paper_params.omega_IF) == pytest.approx(7 * spec.period)


def test_zero_amplitude_drive_is_static(paper_params):
    spec = CombSpec.from_kick_angle(0.0, paper_params)
    H = drive_hamiltonian_term(spec)
    assert H.is_static
    assert np.allclose(H.static.data, 0)


def test_drive_hamiltonian_is_hermitian(paper_params):
    spec = CombSpec.from_kick_angle(0.5 * math.pi, paper_params)
    times = one_period(spec)
    for frame in ["rotating", "if"]:
        H = qubit_hamiltonian(paper_params, spec, 3, frame)
        assert H.check_hermitian(times) < 1e-10
    with pytest.raises(InvalidCombError):
        drive_hamiltonian_term(spec, frame="lab")


def test_qubit_hamiltonian_detuning(paper_params):
    spec = CombSpec.from_kick_angle(0.5 * math.pi, paper_params)
    H = qubit_hamiltonian(paper_params, spec, 2, frame="rotating")
    assert H.static.data[1, 1].real == pytest.approx(2 * paper_params.chi)
    H = qubit_hamiltonian(paper_params, spec, 2, frame="if")
    assert H.static.data[1, 1].real == pytest.approx(paper_params.omega_IF + 2 * paper_params.chi)


def test_if_drive_signal_is_real_part(paper_params):
    spec = CombSpec.from_kick_angle(0.5 * math.pi, paper_params)
    t = one_period(spec)
    expected = np.real(np.exp(-1j * paper_params.omega_IF * t) * comb_envelope(spec, t))
    assert np.allclose(if_drive_signal(paper_params, spec, t), expected)


def test_rotation_angle_of_known_unitaries():
    assert rotation_angle(np.eye(2)) == pytest.approx(0.0, abs=1e-7)
    half = np.array([[math.cos(0.3), -1j * math.sin(0.3)], [-1j * math.sin(0.3), math.cos(0.3)]])
    assert rotation_angle(np.exp(0.4j) * half) == pytest.approx(0.6)


def test_period_unitary_is_unitary(paper_params):
    spec = CombSpec.from_kick_angle(0.5 * math.pi, paper_params, K=5)
    U = period_unitary(paper_params, spec, n=0, steps_per_period=500)
    assert np.allclose(U.conj().T @ U, np.eye(2), atol=1e-10)


@pytest.mark.parametrize("K", [2, 5, 10, 20])
def test_whole_periods_add_up_the_kick(paper_params, K):
    spec = CombSpec.from_kick_angle(0.25 * math.pi, paper_params, K=K)
    single = effective_kick_angle(spec, paper_params, n=0, periods=1)
    assert effective_kick_angle(spec, paper_params, n=0, periods=3) == pytest.approx(single, abs=1e-6)


def test_effective_kick_approaches_nominal_kick(paper_params):
    theta = 0.5 * math.pi
    errors = []
    for K in [2, 5, 10, 20]:
        spec = CombSpec.from_kick_angle(theta, paper_params, K=K)
        errors.append(abs(effective_kick_angle(spec, paper_params, n=0) - kick_angle(spec)))
    assert all(later < earlier for earlier, later in zip(errors, errors[1:]))
    assert errors[-1] < 0.05 * theta
