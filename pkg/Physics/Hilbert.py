import logging
import math

import numpy as np
from scipy.special import eval_genlaguerre

# Hermiticity tolerance of operators flagged as Hermitian
HERMITIAN_TOL = 1e-12

# Default density matrix tolerance
STATE_TOL = 1e-9

# Minimal grid used to accept a Wigner map without warnings
WIGNER_MAX_STEP = 0.1
WIGNER_EXTENT_MARGIN = 3.0


class InvalidDimensionError(ValueError):
    pass


class DimensionMismatchError(ValueError):
    pass


class InvalidStateError(ValueError):
    pass


class OperatorMatrix(object):
    # Dense complex square matrix on a (sub)space of qubit x cavity
    def __init__(self, data, hermitian=False):

        data = np.array(data, dtype=complex)
        if data.ndim != 2 or data.shape[0] != data.shape[1] or data.shape[0] == 0:
            logging.error("Operator must be a non-empty square matrix! Received shape %s" % (data.shape,))
            raise InvalidDimensionError("Operator must be a non-empty square matrix!")

        # Freeze entries so operators can be shared across workers
        data.setflags(write=False)
        self.__data = data

        # Verify the hermiticity flag
        self.hermitian = hermitian
        if hermitian and not self.is_hermitian():
            logging.error("Operator flagged as Hermitian deviates by %g from its adjoint" % self.hermiticity_error())
            raise InvalidStateError("Operator flagged as Hermitian is not Hermitian!")

    @property
    def data(self):
        return self.__data

    @property
    def dim(self):
        return self.__data.shape[0]

    def dag(self):
        return OperatorMatrix(self.__data.conj().T, hermitian=self.hermitian)

    def hermiticity_error(self):
        return float(np.max(np.abs(self.__data - self.__data.conj().T)))

    def is_hermitian(self, tol=HERMITIAN_TOL):
        return self.hermiticity_error() < tol

    def commutator(self, other):
        return self @ other - other @ self

    def __check_dim(self, other):
        if self.dim != other.dim:
            logging.error("Operator dimensions do not match: %d != %d" % (self.dim, other.dim))
            raise DimensionMismatchError("Operator dimensions do not match!")

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            self.__check_dim(other)
            return OperatorMatrix(self.__data @ other.data)
        return self.__data @ other

    def __add__(self, other):
        self.__check_dim(other)
        return OperatorMatrix(self.__data + other.data, hermitian=self.hermitian and other.hermitian)

    def __sub__(self, other):
        self.__check_dim(other)
        return OperatorMatrix(self.__data - other.data, hermitian=self.hermitian and other.hermitian)

    def __mul__(self, scalar):
        hermitian = self.hermitian and np.isreal(scalar)
        return OperatorMatrix(scalar * self.__data, hermitian=hermitian)

    __rmul__ = __mul__

    def __neg__(self):
        return OperatorMatrix(-self.__data, hermitian=self.hermitian)

    def __repr__(self):
        return "OperatorMatrix(dim=%d, hermitian=%s)" % (self.dim, self.hermitian)


class DensityMatrix(object):
    # Valid quantum state: unit trace, Hermitian, positive semidefinite within tolerance
    def __init__(self, op, tolerance=STATE_TOL):

        if not isinstance(op, OperatorMatrix):
            op = OperatorMatrix(op)
        self.op = op
        self.tolerance = tolerance

        trace = np.trace(op.data)
        if abs(trace - 1) >= tolerance:
            logging.error("Density matrix trace %s differs from 1 by more than %g" % (trace, tolerance))
            raise InvalidStateError("Density matrix must have unit trace!")

        if not op.is_hermitian():
            logging.error("Density matrix is not Hermitian (deviation %g)" % op.hermiticity_error())
            raise InvalidStateError("Density matrix must be Hermitian!")

        min_eig = self.min_eigenvalue()
        if min_eig <= -tolerance:
            logging.error("Density matrix has negative eigenvalue %g" % min_eig)
            raise InvalidStateError("Density matrix must be positive semidefinite!")

    @classmethod
    def from_array(cls, data, tolerance=STATE_TOL):
        # Symmetrize numerical output before wrapping
        data = np.asarray(data, dtype=complex)
        return cls(OperatorMatrix(0.5 * (data + data.conj().T)), tolerance=tolerance)

    @property
    def data(self):
        return self.op.data

    @property
    def dim(self):
        return self.op.dim

    def min_eigenvalue(self):
        herm = 0.5 * (self.op.data + self.op.data.conj().T)
        return float(np.linalg.eigvalsh(herm)[0])

    def purity(self):
        return float(np.real(np.trace(self.data @ self.data)))

    def trace_distance(self, other):
        diff = self.data - other.data
        return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))

    def __repr__(self):
        return "DensityMatrix(dim=%d)" % self.dim


class PhaseSpaceGrid(object):
    # Square lattice of complex amplitudes alpha = x + iy
    def __init__(self, extent, step):
        if extent <= 0 or step <= 0:
            logging.error("Phase space grid needs positive extent and step (got %s, %s)" % (extent, step))
            raise ValueError("Invalid phase space grid!")
        self.extent = float(extent)
        self.step = float(step)
        axis = np.arange(-self.extent, self.extent + 0.5 * self.step, self.step)
        x, y = np.meshgrid(axis, axis, indexing="xy")
        self.axis = axis
        self.alpha = x + 1j * y

    @property
    def area_element(self):
        return self.step ** 2


class WignerMap(object):
    # Wigner function sampled on a phase space grid, W(0) = 2/pi for vacuum
    def __init__(self, grid, values, warnings=None, tolerance=1e-3):
        self.grid = grid
        self.values = values
        self.warnings = list(warnings) if warnings is not None else []
        self.tolerance = tolerance

    def integral(self):
        return float(np.sum(self.values) * self.grid.area_element)

    def peak(self):
        index = np.unravel_index(np.argmax(self.values), self.values.shape)
        return complex(self.grid.alpha[index])


def identity(dim):
    return OperatorMatrix(np.eye(dim), hermitian=True)


def annihilation_op(n_trunc):
    if n_trunc < 1:
        logging.error("Cavity truncation must be at least 1 (got %s)" % n_trunc)
        raise InvalidDimensionError("Cavity truncation must be at least 1!")
    return OperatorMatrix(np.diag(np.sqrt(np.arange(1, n_trunc + 1)), k=1))


def number_op(n_trunc):
    a = annihilation_op(n_trunc)
    return OperatorMatrix((a.dag() @ a).data.real, hermitian=True)


def pauli_ops():
    # Index 0 is the ground state |g>, sigma_z|g> = -|g>
    sx = OperatorMatrix([[0, 1], [1, 0]], hermitian=True)
    sy = OperatorMatrix([[0, 1j], [-1j, 0]], hermitian=True)
    sz = OperatorMatrix([[-1, 0], [0, 1]], hermitian=True)
    sm = OperatorMatrix(0.5 * (sx.data - 1j * sy.data))
    return sx, sy, sz, sm


def excited_projector():
    return OperatorMatrix([[0, 0], [0, 1]], hermitian=True)


def tensor_embed(a, which, n_trunc):
    # Ordering is qubit (slow index) x cavity (fast index)
    cav_dim = n_trunc + 1
    if which == "qubit":
        if a.dim != 2:
            logging.error("Qubit operator must be 2x2, received dimension %d" % a.dim)
            raise DimensionMismatchError("Qubit operator must be 2x2!")
        data = np.kron(a.data, np.eye(cav_dim))
    elif which == "cavity":
        if a.dim != cav_dim:
            logging.error("Cavity operator must have dimension %d, received %d" % (cav_dim, a.dim))
            raise DimensionMismatchError("Cavity operator dimension does not match the truncation!")
        data = np.kron(np.eye(2), a.data)
    else:
        logging.error("Unknown subsystem '%s'. Expected 'qubit' or 'cavity'" % which)
        raise ValueError("Unknown subsystem '%s'!" % which)
    return OperatorMatrix(data, hermitian=a.hermitian)


def dissipator_apply(A, rho):
    rho_data = rho.data if isinstance(rho, (DensityMatrix, OperatorMatrix)) else np.asarray(rho)
    if A.dim != rho_data.shape[0]:
        logging.error("Dissipator of dimension %d cannot act on state of dimension %d" % (A.dim, rho_data.shape[0]))
        raise DimensionMismatchError("Dissipator and state dimensions do not match!")
    a = A.data
    ada = a.conj().T @ a
    return OperatorMatrix(a @ rho_data @ a.conj().T - 0.5 * (ada @ rho_data + rho_data @ ada))


def expectation(rho, A):
    if A.dim != rho.dim:
        logging.error("Cannot take expectation of dimension %d operator in dimension %d state" % (A.dim, rho.dim))
        raise DimensionMismatchError("Operator and state dimensions do not match!")
    return complex(np.trace(rho.data @ A.data))


def fock_ket(n, n_trunc):
    if n < 0 or n > n_trunc:
        logging.error("Fock index %s outside truncation [0, %d]" % (n, n_trunc))
        raise InvalidDimensionError("Fock index outside truncation!")
    psi = np.zeros(n_trunc + 1, dtype=complex)
    psi[n] = 1
    return psi


def coherent_ket(alpha, n_trunc):
    # Truncated Fock expansion, renormalized
    k = np.arange(n_trunc + 1)
    log_norm = np.array([0.5 * math.lgamma(j + 1) for j in k])
    amplitudes = np.exp(-0.5 * abs(alpha) ** 2 - log_norm) * np.power(complex(alpha), k)
    return amplitudes / np.linalg.norm(amplitudes)


def ket_to_density(psi):
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return DensityMatrix.from_array(np.outer(psi, psi.conj()))


def fock_state(n, n_trunc):
    return ket_to_density(fock_ket(n, n_trunc))


def coherent_state(alpha, n_trunc):
    return ket_to_density(coherent_ket(alpha, n_trunc))


def joint_state(rho_qubit, rho_cavity):
    return DensityMatrix.from_array(np.kron(rho_qubit.data, rho_cavity.data))


def partial_trace(rho, keep, n_trunc):
    cav_dim = n_trunc + 1
    if rho.dim != 2 * cav_dim:
        logging.error("Joint state of dimension %d does not match truncation %d" % (rho.dim, n_trunc))
        raise DimensionMismatchError("Joint state dimension does not match the truncation!")
    blocks = rho.data.reshape(2, cav_dim, 2, cav_dim)
    if keep == "cavity":
        reduced = np.einsum("ijik->jk", blocks)
    elif keep == "qubit":
        reduced = np.einsum("ijkj->ik", blocks)
    else:
        logging.error("Unknown subsystem '%s'. Expected 'qubit' or 'cavity'" % keep)
        raise ValueError("Unknown subsystem '%s'!" % keep)
    return DensityMatrix.from_array(reduced, tolerance=rho.tolerance)


def phase_space_grid(extent, step):
    return PhaseSpaceGrid(extent, step)


def wigner_map(rho_cavity, grid):
    rho = rho_cavity.data
    dim = rho.shape[0]
    alpha = grid.alpha
    radius = 4 * np.abs(alpha) ** 2

    # Laguerre expansion of the displaced parity expectation
    values = np.zeros(alpha.shape)
    for m in range(dim):
        if rho[m, m] != 0:
            values += np.real(rho[m, m]) * (-1) ** m * eval_genlaguerre(m, 0, radius)
        for n in range(m + 1, dim):
            if rho[m, n] == 0:
                continue
            coeff = (-1) ** m * math.exp(0.5 * (math.lgamma(m + 1) - math.lgamma(n + 1)))
            values += 2 * np.real(rho[m, n] * coeff * (2 * alpha) ** (n - m)
                                  * eval_genlaguerre(m, n - m, radius))
    values *= (2 / np.pi) * np.exp(-0.5 * radius)

    # Flag grids too small or too coarse for the overlap quadrature
    warnings = []
    min_extent = math.sqrt(dim - 1) + WIGNER_EXTENT_MARGIN
    if grid.extent < min_extent:
        warnings.append("grid extent %.3f below sqrt(N_trunc)+3 = %.3f" % (grid.extent, min_extent))
    if grid.step > WIGNER_MAX_STEP:
        warnings.append("grid step %.3f above %.3f" % (grid.step, WIGNER_MAX_STEP))
    for warning in warnings:
        logging.warning("Wigner map: %s" % warning)

    return WignerMap(grid, values, warnings)


def fock_wigner(k, grid):
    radius = 4 * np.abs(grid.alpha) ** 2
    return (2 / np.pi) * (-1) ** k * eval_genlaguerre(k, 0, radius) * np.exp(-0.5 * radius)


def fock_prob_from_wigner(W, k):
    # Overlap formula P_k = pi * int W_rho W_k d^2 alpha
    overlap = np.sum(W.values * fock_wigner(k, W.grid)) * W.grid.area_element
    return float(np.pi * overlap)


def mean_photon_number_from_wigner(W, k_max):
    return sum(k * fock_prob_from_wigner(W, k) for k in range(1, k_max + 1))
