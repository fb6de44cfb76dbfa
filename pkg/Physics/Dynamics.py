import os
import math
import json
import hashlib
import logging
from collections import OrderedDict

import numpy as np
import scipy.linalg

from Physics.Hilbert import OperatorMatrix, DensityMatrix, DimensionMismatchError, STATE_TOL
from Physics.Hilbert import annihilation_op, number_op, pauli_ops, excited_projector, partial_trace, expectation

# Location of preset files and the run configuration spec
REPO_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
PRESET_DIR = os.path.join(REPO_DIR, "Config", "Presets")
RUN_CONFIG_SPEC = os.path.join(REPO_DIR, "Config", "Specs", "RunConfig.validate")

# Hermiticity tolerance of evolved states and sampled Hamiltonians
EVOLUTION_HERMITIAN_TOL = 1e-10

# Commutator-free fourth order exponential scheme on Gauss-Legendre nodes
GAUSS_OFFSET = math.sqrt(3) / 6
CF4_LONG = 0.25 + math.sqrt(3) / 6
CF4_SHORT = 0.25 - math.sqrt(3) / 6

# Number of step propagators computed per batch
PROPAGATOR_BLOCK = 2048

INTEGRATORS = ["magnus", "kraus", "rk4"]


class InvalidParameterError(ValueError):
    pass


class NonUniqueSteadyStateError(RuntimeError):
    pass


class IntegratorStepError(RuntimeError):
    # Raised when an evolved state leaves the set of density matrices
    def __init__(self, message, suggested_dt=None):
        super(IntegratorStepError, self).__init__(message)
        self.suggested_dt = suggested_dt


class SystemParams(object):
    # Physical constants in rad/us and us
    def __init__(self, chi, T_q, T_c, T_c_phi, chi_cc, eta, omega_IF, N_max, N_trunc=None):

        self.chi        = float(chi)
        self.T_q        = float(T_q)
        self.T_c        = float(T_c)
        self.T_c_phi    = float(T_c_phi)
        self.chi_cc     = float(chi_cc)
        self.eta        = float(eta)
        self.omega_IF   = float(omega_IF)
        self.N_max      = int(N_max)
        self.N_trunc    = int(N_trunc) if N_trunc is not None else self.N_max + 3

        errors = []
        if self.chi <= 0:
            errors.append("chi must be positive (got %s)" % self.chi)
        for name in ["T_q", "T_c", "T_c_phi"]:
            if not getattr(self, name) > 0:
                errors.append("%s must be positive (got %s)" % (name, getattr(self, name)))
        if not 0 <= self.eta <= 1:
            errors.append("eta must lie in [0, 1] (got %s)" % self.eta)
        if self.N_max < 1:
            errors.append("N_max must be at least 1 (got %s)" % self.N_max)
        if self.N_trunc < self.N_max:
            errors.append("N_trunc (%d) must be at least N_max (%d)" % (self.N_trunc, self.N_max))

        if errors:
            for error in errors:
                logging.error("Invalid system parameter: %s" % error)
            raise InvalidParameterError("Invalid system parameters: %s" % "; ".join(errors))

    @property
    def comb_period(self):
        return math.pi / self.chi

    @property
    def chi_tq(self):
        return self.chi * self.T_q

    @property
    def photon_numbers(self):
        return np.arange(self.N_max + 1)

    def replace(self, **changes):
        values = self.to_dict()
        for key, value in changes.items():
            if key not in values:
                logging.error("Unknown system parameter '%s'" % key)
                raise InvalidParameterError("Unknown system parameter '%s'!" % key)
            values[key] = value
        return SystemParams(**values)

    def to_dict(self):
        values = OrderedDict()
        values["chi"]       = self.chi
        values["T_q"]       = self.T_q
        values["T_c"]       = self.T_c
        values["T_c_phi"]   = self.T_c_phi
        values["chi_cc"]    = self.chi_cc
        values["eta"]       = self.eta
        values["omega_IF"]  = self.omega_IF
        values["N_max"]     = self.N_max
        values["N_trunc"]   = self.N_trunc
        return values

    def to_config(self):
        # Laboratory units as written in run configs
        section = OrderedDict()
        section["chi_mhz"]      = self.chi / (2 * math.pi)
        section["t_q_us"]       = self.T_q
        section["t_c_us"]       = self.T_c
        section["t_c_phi_us"]   = self.T_c_phi
        section["chi_cc_khz"]   = 1000 * self.chi_cc / (2 * math.pi)
        section["eta"]          = self.eta
        section["omega_if_mhz"] = self.omega_IF / (2 * math.pi)
        section["n_max"]        = self.N_max
        section["n_trunc"]      = self.N_trunc
        return section

    def params_hash(self):
        payload = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    @classmethod
    def from_config(cls, section):
        return cls(chi=2 * math.pi * float(section["chi_mhz"]),
                   T_q=float(section["t_q_us"]),
                   T_c=float(section["t_c_us"]),
                   T_c_phi=float(section["t_c_phi_us"]),
                   chi_cc=2 * math.pi * float(section["chi_cc_khz"]) / 1000,
                   eta=float(section["eta"]),
                   omega_IF=2 * math.pi * float(section["omega_if_mhz"]),
                   N_max=int(section["n_max"]),
                   N_trunc=int(section["n_trunc"]))

    @classmethod
    def from_preset(cls, name="paper"):
        from Config import ConfigParser

        preset_file = os.path.join(PRESET_DIR, "%s.config" % name)
        if not os.path.isfile(preset_file):
            logging.error("Unknown preset '%s'! Available presets: %s" % (name, ", ".join(available_presets())))
            raise InvalidParameterError("Unknown preset '%s'!" % name)
        config = ConfigParser(preset_file, RUN_CONFIG_SPEC).get_config()
        return cls.from_config(config["params"])

    def __repr__(self):
        return "SystemParams(%s)" % ", ".join("%s=%s" % item for item in self.to_dict().items())


def available_presets():
    return sorted(name[:-len(".config")] for name in os.listdir(PRESET_DIR) if name.endswith(".config"))


class TimeDependentHamiltonian(object):
    # H(t) = static + e(t) B + conj(e(t)) B^dag
    def __init__(self, static, envelope=None, drive_op=None, period=None):

        if not isinstance(static, OperatorMatrix):
            static = OperatorMatrix(static)
        if static.hermiticity_error() >= EVOLUTION_HERMITIAN_TOL:
            logging.error("Static Hamiltonian deviates from hermiticity by %g" % static.hermiticity_error())
            raise InvalidParameterError("Static Hamiltonian must be Hermitian!")

        if envelope is not None and drive_op is None:
            logging.error("A drive envelope was given without a drive operator!")
            raise InvalidParameterError("Drive envelope requires a drive operator!")
        if drive_op is not None and drive_op.dim != static.dim:
            logging.error("Drive operator dimension %d does not match static part %d" % (drive_op.dim, static.dim))
            raise DimensionMismatchError("Drive operator and static Hamiltonian dimensions do not match!")

        self.static     = static
        self.envelope   = envelope
        self.drive_op   = drive_op if envelope is not None else None
        self.period     = period

    @property
    def dim(self):
        return self.static.dim

    @property
    def is_static(self):
        return self.envelope is None

    def envelope_values(self, times):
        times = np.asarray(times, dtype=float)
        return np.broadcast_to(np.asarray(self.envelope(times), dtype=complex), times.shape)

    def at(self, times):
        times = np.asarray(times, dtype=float)
        static = self.static.data
        if self.is_static:
            return np.broadcast_to(static, times.shape + static.shape).copy()
        e = self.envelope_values(times)[..., None, None]
        b = self.drive_op.data
        return static + e * b + np.conj(e) * b.conj().T

    def plus(self, static_op):
        return TimeDependentHamiltonian(self.static + static_op, self.envelope, self.drive_op, self.period)

    def embed(self, which, n_trunc):
        from Physics.Hilbert import tensor_embed
        drive_op = tensor_embed(self.drive_op, which, n_trunc) if self.drive_op is not None else None
        return TimeDependentHamiltonian(tensor_embed(self.static, which, n_trunc), self.envelope, drive_op, self.period)

    def check_hermitian(self, times):
        h = self.at(times)
        deviation = float(np.max(np.abs(h - np.conj(np.swapaxes(h, -1, -2)))))
        if deviation >= EVOLUTION_HERMITIAN_TOL:
            logging.error("Sampled Hamiltonian deviates from hermiticity by %g" % deviation)
            raise InvalidParameterError("Hamiltonian is not Hermitian at the sampled times!")
        return deviation


def _as_array(op):
    return op.data if isinstance(op, OperatorMatrix) else np.asarray(op, dtype=complex)


def _commutator_superop(h):
    # Row-major vectorization: vec(A rho B) = (A kron B^T) vec(rho)
    eye = np.eye(h.shape[-1])
    return -1j * (np.kron(h, eye) - np.kron(eye, h.T))


def _dissipator_superop(a, jump_weight=1.0):
    eye = np.eye(a.shape[-1])
    ada = a.conj().T @ a
    return jump_weight * np.kron(a, a.conj()) - 0.5 * np.kron(ada, eye) - 0.5 * np.kron(eye, ada.T)


def _check_dissipators(dim, dissipators):
    for rate, op in dissipators:
        if rate < 0:
            logging.error("Dissipator rates must be non-negative (got %s)" % rate)
            raise InvalidParameterError("Negative dissipator rate!")
        if op.dim != dim:
            logging.error("Dissipator of dimension %d does not match Hamiltonian dimension %d" % (op.dim, dim))
            raise DimensionMismatchError("Dissipator and Hamiltonian dimensions do not match!")


def liouvillian(H, dissipators, jump_weights=None):
    h = _as_array(H)
    weights = jump_weights if jump_weights is not None else [1.0] * len(dissipators)
    generator = _commutator_superop(h)
    for (rate, op), weight in zip(dissipators, weights):
        if rate > 0:
            generator = generator + rate * _dissipator_superop(_as_array(op), weight)
    return generator


class LindbladGenerator(object):
    # Vectorized generator L(t) of a Lindblad equation with static dissipators
    def __init__(self, H, dissipators, jump_weights=None):
        _check_dissipators(H.dim, dissipators)
        self.hamiltonian    = H
        self.dissipators    = list(dissipators)
        self.jump_weights   = list(jump_weights) if jump_weights is not None else [1.0] * len(self.dissipators)
        self.static         = liouvillian(H.static, self.dissipators, self.jump_weights)
        if not H.is_static:
            self.drive      = _commutator_superop(H.drive_op.data)
            self.drive_dag  = _commutator_superop(H.drive_op.data.conj().T)

    @property
    def dim(self):
        return self.hamiltonian.dim

    def at(self, times):
        times = np.asarray(times, dtype=float)
        if self.hamiltonian.is_static:
            return np.broadcast_to(self.static, times.shape + self.static.shape)
        e = self.hamiltonian.envelope_values(times)[..., None, None]
        return self.static + e * self.drive + np.conj(e) * self.drive_dag

    def kraus_operators(self, dt):
        # Second order Kraus form of the dissipative part over dt
        d = self.dim
        eye = np.eye(d)
        jumps = [math.sqrt(rate) * _as_array(op) for rate, op in self.dissipators if rate > 0]
        weights = [w for (rate, _), w in zip(self.dissipators, self.jump_weights) if rate > 0]
        g = np.zeros((d, d), dtype=complex)
        for jump in jumps:
            g = g - 0.5 * jump.conj().T @ jump
        half = eye + 0.5 * dt * g
        operators = [eye + dt * g + 0.5 * (dt * g) @ (dt * g)]
        for jump, weight in zip(jumps, weights):
            operators.append(math.sqrt(weight * dt) * half @ jump @ half)
        for jump_j, weight_j in zip(jumps, weights):
            for jump_k, weight_k in zip(jumps, weights):
                operators.append(dt * math.sqrt(0.5 * weight_j * weight_k) * jump_j @ jump_k)
        return np.array(operators)


def magnus_propagators(generator, t_start, dt, n_steps):
    # Step superoperators of the commutator-free fourth order exponential scheme;
    # every factor is the exponential of a Lindblad generator, hence completely positive
    steps = t_start + dt * np.arange(n_steps)
    early = generator.at(steps + (0.5 - GAUSS_OFFSET) * dt)
    late = generator.at(steps + (0.5 + GAUSS_OFFSET) * dt)
    first = scipy.linalg.expm(dt * (CF4_LONG * early + CF4_SHORT * late))
    second = scipy.linalg.expm(dt * (CF4_SHORT * early + CF4_LONG * late))
    return np.matmul(second, first)


def half_step_unitaries(hamiltonian, times, dt):
    # exp(-i H(t) dt / 2) through a batched eigendecomposition
    h = hamiltonian.at(times)
    energies, vectors = np.linalg.eigh(h)
    phases = np.exp(-0.5j * dt * energies)
    return np.matmul(vectors * phases[..., None, :], np.conj(np.swapaxes(vectors, -1, -2)))


def _sandwich_superop(ops):
    # vec(A rho A^dag) = (A kron A*) vec(rho), batched over leading axes
    d = ops.shape[-1]
    lead = ops.shape[:-2]
    return np.einsum("...ij,...kl->...ikjl", ops, ops.conj()).reshape(lead + (d * d, d * d))


def kraus_propagators(generator, t_start, dt, n_steps):
    mids = t_start + dt * (np.arange(n_steps) + 0.5)
    unitary = _sandwich_superop(half_step_unitaries(generator.hamiltonian, mids, dt))
    dissipative = np.sum(_sandwich_superop(generator.kraus_operators(dt)), axis=0)
    return np.matmul(unitary, np.matmul(dissipative, unitary))


def rk4_propagators(generator, t_start, dt, n_steps):
    steps = t_start + dt * np.arange(n_steps)
    l0 = generator.at(steps)
    l1 = generator.at(steps + 0.5 * dt)
    l2 = generator.at(steps + dt)
    eye = np.eye(l0.shape[-1])
    k1 = l0
    k2 = np.matmul(l1, eye + 0.5 * dt * k1)
    k3 = np.matmul(l1, eye + 0.5 * dt * k2)
    k4 = np.matmul(l2, eye + dt * k3)
    return eye + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6


PROPAGATOR_BUILDERS = {
    "magnus": magnus_propagators,
    "kraus": kraus_propagators,
    "rk4": rk4_propagators
}


def step_propagators(generator, t_start, dt, n_steps, integrator="magnus"):
    if integrator not in PROPAGATOR_BUILDERS:
        logging.error("Unknown integrator '%s'. Available integrators: %s" % (integrator, ", ".join(INTEGRATORS)))
        raise InvalidParameterError("Unknown integrator '%s'!" % integrator)
    return PROPAGATOR_BUILDERS[integrator](generator, t_start, dt, n_steps)


def _magnus_steps(generator, rho, t_start, dt, n_steps):
    d = generator.dim
    vec = rho.reshape(-1)
    for block_start in range(0, n_steps, PROPAGATOR_BLOCK):
        block = min(PROPAGATOR_BLOCK, n_steps - block_start)
        propagators = magnus_propagators(generator, t_start + block_start * dt, dt, block)
        for step in propagators:
            vec = step @ vec
    return vec.reshape(d, d)


def _kraus_steps(generator, rho, t_start, dt, n_steps):
    # Strang splitting: half unitary, dissipative Kraus map, half unitary
    kraus = generator.kraus_operators(dt)
    kraus_dag = np.conj(np.swapaxes(kraus, -1, -2))
    for block_start in range(0, n_steps, PROPAGATOR_BLOCK):
        block = min(PROPAGATOR_BLOCK, n_steps - block_start)
        mids = t_start + dt * (block_start + np.arange(block) + 0.5)
        unitaries = half_step_unitaries(generator.hamiltonian, mids, dt)
        for u in unitaries:
            rho = u @ rho @ u.conj().T
            rho = np.sum(kraus @ rho @ kraus_dag, axis=0)
            rho = u @ rho @ u.conj().T
            rho = rho / np.trace(rho)
    return rho


def _rk4_steps(generator, rho, t_start, dt, n_steps):
    d = generator.dim
    vec = rho.reshape(-1)
    for step in range(n_steps):
        t = t_start + step * dt
        l0, l1, l2 = generator.at(np.array([t, t + 0.5 * dt, t + dt]))
        k1 = l0 @ vec
        k2 = l1 @ (vec + 0.5 * dt * k1)
        k3 = l1 @ (vec + 0.5 * dt * k2)
        k4 = l2 @ (vec + dt * k3)
        vec = vec + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6
    return vec.reshape(d, d)


STEPPERS = {
    "magnus": _magnus_steps,
    "kraus": _kraus_steps,
    "rk4": _rk4_steps
}


def checked_state(rho, elapsed, dt, tolerance=STATE_TOL):
    # Validate an evolved state; violations ask for a smaller step
    deviation = float(np.max(np.abs(rho - rho.conj().T)))
    trace = complex(np.trace(rho))
    herm = 0.5 * (rho + rho.conj().T)
    min_eig = float(np.linalg.eigvalsh(herm)[0])

    problems = []
    if deviation > EVOLUTION_HERMITIAN_TOL:
        problems.append("hermiticity deviation %g" % deviation)
    if abs(trace - 1) > tolerance * max(1.0, elapsed):
        problems.append("trace %s" % trace)
    if min_eig < -tolerance:
        problems.append("negative eigenvalue %g" % min_eig)
    if problems:
        suggested = 0.5 * dt if dt is not None else None
        logging.error("Evolved state is invalid (%s). Retry with dt <= %s" % (", ".join(problems), suggested))
        raise IntegratorStepError("Integrator step too large: %s" % ", ".join(problems), suggested_dt=suggested)
    return DensityMatrix.from_array(herm / trace.real, tolerance=tolerance)


class LindbladResult(object):
    # States at the requested output times
    def __init__(self, times, states, integrator):
        self.times      = np.asarray(times, dtype=float)
        self.states     = states
        self.integrator = integrator

    def expectation(self, op):
        return np.array([expectation(state, op) for state in self.states])

    def __iter__(self):
        return iter(self.states)

    def __len__(self):
        return len(self.states)

    def __getitem__(self, index):
        return self.states[index]


def evolve_lindblad(rho0, H, dissipators, t_grid, dt, integrator="magnus", tolerance=STATE_TOL):

    if not isinstance(H, TimeDependentHamiltonian):
        H = TimeDependentHamiltonian(H)
    if rho0.dim != H.dim:
        logging.error("Initial state of dimension %d does not match Hamiltonian dimension %d" % (rho0.dim, H.dim))
        raise DimensionMismatchError("Initial state and Hamiltonian dimensions do not match!")
    if integrator not in STEPPERS:
        logging.error("Unknown integrator '%s'. Available integrators: %s" % (integrator, ", ".join(INTEGRATORS)))
        raise InvalidParameterError("Unknown integrator '%s'!" % integrator)

    times = np.asarray(t_grid, dtype=float)
    if times.ndim != 1 or len(times) == 0 or np.any(np.diff(times) < 0):
        logging.error("Output times must be a non-empty non-decreasing list")
        raise InvalidParameterError("Output times must be non-decreasing!")
    if not dt > 0:
        logging.error("Integration step must be positive (got %s)" % dt)
        raise InvalidParameterError("Integration step must be positive!")

    generator = LindbladGenerator(H, dissipators)
    stepper = STEPPERS[integrator]
    used = "exact" if H.is_static else integrator

    rho = np.array(rho0.data, dtype=complex)
    states = [checked_state(rho, 0.0, dt, tolerance)]
    exact_cache = {}

    for t_a, t_b in zip(times[:-1], times[1:]):
        span = t_b - t_a
        if span > 0:
            if H.is_static:
                # Exact propagation of a static generator
                key = round(span, 15)
                if key not in exact_cache:
                    exact_cache[key] = scipy.linalg.expm(generator.static * span)
                rho = (exact_cache[key] @ rho.reshape(-1)).reshape(rho.shape)
            else:
                n_steps = max(1, int(math.ceil(span / dt - 1e-9)))
                rho = stepper(generator, rho, t_a, span / n_steps, n_steps)
        states.append(checked_state(rho, t_b - times[0], dt, tolerance))

    logging.debug("Lindblad evolution over %d output times with the %s integrator" % (len(times), used))
    return LindbladResult(times, states, used)


def steady_state(H, dissipators, rcond=1e-10):

    h = _as_array(H.static if isinstance(H, TimeDependentHamiltonian) else H)
    dim = h.shape[0]
    _check_dissipators(dim, dissipators)

    generator = liouvillian(h, dissipators)
    null = scipy.linalg.null_space(generator, rcond=rcond)
    if null.shape[1] != 1:
        logging.error("Liouvillian null space has dimension %d; steady state is not unique" % null.shape[1])
        raise NonUniqueSteadyStateError("Steady state is not unique!")

    rho = null[:, 0].reshape(dim, dim)
    rho = rho / np.trace(rho)
    rho = 0.5 * (rho + rho.conj().T)

    residual = float(np.linalg.norm(generator @ rho.reshape(-1)))
    scale = max(1.0, float(np.linalg.norm(generator, 2)))
    if residual > 1e-10 * scale:
        logging.warning("Steady state residual %g exceeds tolerance for generator norm %g" % (residual, scale))

    return DensityMatrix.from_array(rho)


def reflection_coefficient(params, omega_drive, Omega, n):
    # omega_drive is measured from the bare qubit frequency
    if not Omega > 0:
        logging.error("Drive amplitude must be positive (got %s)" % Omega)
        raise InvalidParameterError("Drive amplitude must be positive!")

    detuning = omega_drive + n * params.chi
    _, sy, _, sm = pauli_ops()
    hamiltonian = -detuning * excited_projector() - 0.5 * Omega * sy
    rho = steady_state(hamiltonian, [(1 / params.T_q, sm)])

    # Input amplitude producing Rabi frequency Omega through the line
    a_in = 0.5 * Omega * math.sqrt(params.T_q)
    return 1 - expectation(rho, sm) / (math.sqrt(params.T_q) * a_in)


def kerr_hamiltonian(params, n_trunc=None):
    n_trunc = params.N_trunc if n_trunc is None else n_trunc
    n = np.arange(n_trunc + 1)
    return OperatorMatrix(np.diag(-params.chi_cc * n * (n - 1)), hermitian=True)


def cavity_dephasing(params, n_trunc=None):
    n_trunc = params.N_trunc if n_trunc is None else n_trunc
    return (2 / params.T_c_phi, number_op(n_trunc))


def evolve_cavity_kerr(rho0, params, t_grid):
    n_trunc = rho0.dim - 1
    if n_trunc < 1:
        logging.error("Cavity state must have dimension of at least 2 (got %d)" % rho0.dim)
        raise DimensionMismatchError("Cavity state dimension too small!")
    hamiltonian = TimeDependentHamiltonian(kerr_hamiltonian(params, n_trunc))
    times = np.asarray(t_grid, dtype=float)
    span = float(times[-1] - times[0]) if len(times) > 1 else 1.0
    return evolve_lindblad(rho0, hamiltonian, [cavity_dephasing(params, n_trunc)], times, max(span, 1e-12))


def cavity_decay(params, n_trunc=None):
    n_trunc = params.N_trunc if n_trunc is None else n_trunc
    return (1 / params.T_c, annihilation_op(n_trunc))


def qubit_frame_coherence(states, times, n, params, frame="rotating"):
    # <sigma_minus> seen from the frame of a qubit dressed by n photons
    _, _, _, sm = pauli_ops()
    carrier = n * params.chi + (params.omega_IF if frame == "if" else 0.0)
    values = []
    for state, t in zip(states, times):
        if state.dim != 2:
            state = partial_trace(state, "qubit", state.dim // 2 - 1)
        values.append(expectation(state, sm) * np.exp(1j * carrier * t))
    return np.array(values)
