import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies

from Physics.Hilbert import OperatorMatrix, DensityMatrix, InvalidDimensionError, InvalidStateError, DimensionMismatchError
from Physics.Hilbert import annihilation_op, number_op, pauli_ops, tensor_embed, dissipator_apply, expectation
from Physics.Hilbert import fock_state, coherent_state, coherent_ket, joint_state, partial_trace, ket_to_density
from Physics.Hilbert import phase_space_grid, wigner_map, fock_prob_from_wigner, mean_photon_number_from_wigner


def test_annihilation_matrix_elements():
    a = annihilation_op(4)
    assert a.dim == 5
    assert a.data[0, 1] == pytest.approx(1.0)
    assert a.data[2, 3] == pytest.approx(math.sqrt(3))
    assert np.count_nonzero(a.data) == 4


@settings(max_examples=20, deadline=None)
@given(strategies.integers(min_value=1, max_value=15))
def test_number_operator_is_diagonal(n_trunc):
    n = number_op(n_trunc)
    assert n.hermitian
    assert np.allclose(n.data, np.diag(np.arange(n_trunc + 1)))


def test_truncation_must_be_positive():
    with pytest.raises(InvalidDimensionError):
        annihilation_op(0)


def test_pauli_conventions():
    sx, sy, sz, sm = pauli_ops()
    # Ground state is index 0 with sigma_z eigenvalue -1
    assert sz.data[0, 0] == -1
    assert np.allclose(sm.data, [[0, 1], [0, 0]])
    assert np.allclose(sx.commutator(sy).data, 2j * sz.data)


def test_hermitian_flag_is_checked():
    with pytest.raises(InvalidStateError):
        OperatorMatrix([[0, 1], [0, 0]], hermitian=True)


def test_non_square_operator_is_rejected():
    with pytest.raises(InvalidDimensionError):
        OperatorMatrix(np.zeros((2, 3)))


def test_operator_algebra_checks_dimensions():
    with pytest.raises(DimensionMismatchError):
        number_op(2) + number_op(3)


def test_density_matrix_rejects_invalid_states():
    with pytest.raises(InvalidStateError):
        DensityMatrix.from_array(np.diag([0.5, 0.6]))
    with pytest.raises(InvalidStateError):
        DensityMatrix.from_array(np.diag([1.2, -0.2]))


def test_tensor_embed_orders_qubit_first():
    _, _, sz, _ = pauli_ops()
    embedded = tensor_embed(sz, "qubit", 2)
    assert embedded.dim == 6
    assert np.allclose(np.diag(embedded.data).real, [-1, -1, -1, 1, 1, 1])
    with pytest.raises(DimensionMismatchError):
        tensor_embed(number_op(3), "cavity", 2)


def test_partial_trace_recovers_factors():
    qubit = ket_to_density([0.6, 0.8])
    cavity = coherent_state(0.7, 6)
    joint = joint_state(qubit, cavity)
    assert partial_trace(joint, "qubit", 6).trace_distance(qubit) < 1e-12
    assert partial_trace(joint, "cavity", 6).trace_distance(cavity) < 1e-12


def test_dissipator_is_traceless():
    a = annihilation_op(5)
    rho = coherent_state(1.2, 5)
    assert abs(np.trace(dissipator_apply(a, rho).data)) < 1e-12


def test_coherent_state_mean_photon_number():
    rho = coherent_state(1.5, 20)
    assert expectation(rho, number_op(20)).real == pytest.approx(2.25, abs=1e-6)
    assert np.linalg.norm(coherent_ket(1.5, 20)) == pytest.approx(1.0)


def test_vacuum_wigner_origin():
    grid = phase_space_grid(4.0, 0.05)
    W = wigner_map(fock_state(0, 4), grid)
    centre = len(grid.axis) // 2
    assert grid.alpha[centre, centre] == pytest.approx(0)
    assert W.values[centre, centre] == pytest.approx(2 / math.pi)
    assert W.integral() == pytest.approx(1.0, abs=1e-6)
    assert W.warnings == []


def test_fock_one_wigner_is_negative_at_origin():
    grid = phase_space_grid(5.0, 0.05)
    W = wigner_map(fock_state(1, 4), grid)
    centre = len(grid.axis) // 2
    assert W.values[centre, centre] == pytest.approx(-2 / math.pi)


def test_coherent_wigner_peak_and_moments():
    alpha = 1.0 + 0.5j
    grid = phase_space_grid(5.0, 0.05)
    W = wigner_map(coherent_state(alpha, 12), grid)
    assert abs(W.peak() - alpha) < 0.05
    assert mean_photon_number_from_wigner(W, 12) == pytest.approx(abs(alpha) ** 2, abs=1e-2)


def test_fock_probability_from_wigner():
    grid = phase_space_grid(5.0, 0.05)
    W = wigner_map(fock_state(2, 6), grid)
    assert fock_prob_from_wigner(W, 2) == pytest.approx(1.0, abs=1e-3)
    assert fock_prob_from_wigner(W, 1) == pytest.approx(0.0, abs=1e-3)


def test_coarse_wigner_grid_warns():
    W = wigner_map(fock_state(0, 9), phase_space_grid(2.0, 0.2))
    assert len(W.warnings) == 2


def random_density(dim, rank, rng):
    factor = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal((dim, rank))
    rho = factor @ factor.conj().T
    return DensityMatrix.from_array(rho / np.trace(rho).real)


def random_operator(dim, rng):
    return OperatorMatrix((rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(dim))


@settings(max_examples=100, deadline=None)
@given(strategies.integers(min_value=2, max_value=12), strategies.integers(min_value=0, max_value=2 ** 32 - 1))
def test_dissipator_image_is_traceless(dim, seed):
    rng = np.random.default_rng(seed)
    rho = random_density(dim, dim, rng)
    assert abs(np.trace(dissipator_apply(random_operator(dim, rng), rho).data)) < 1e-12


@settings(max_examples=30, deadline=None)
@given(strategies.integers(min_value=1, max_value=8), strategies.integers(min_value=0, max_value=2 ** 32 - 1))
def test_embeddings_on_different_subsystems_commute(n_trunc, seed):
    rng = np.random.default_rng(seed)
    qubit = tensor_embed(random_operator(2, rng), "qubit", n_trunc)
    cavity = tensor_embed(random_operator(n_trunc + 1, rng), "cavity", n_trunc)
    assert np.allclose(qubit.commutator(cavity).data, 0, atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(strategies.integers(min_value=1, max_value=7), strategies.integers(min_value=1, max_value=2),
       strategies.integers(min_value=0, max_value=2 ** 32 - 1))
def test_fock_probabilities_from_wigner_of_low_rank_states(n_trunc, rank, seed):
    rho = random_density(n_trunc + 1, rank, np.random.default_rng(seed))
    W = wigner_map(rho, phase_space_grid(math.sqrt(n_trunc) + 3.0, 0.1))
    for k in range(n_trunc + 1):
        assert fock_prob_from_wigner(W, k) == pytest.approx(rho.data[k, k].real, abs=1e-3)
