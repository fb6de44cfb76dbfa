import math
import logging
from collections import OrderedDict
from functools import reduce

import numpy as np
import scipy.optimize
import scipy.special

from Physics.Hilbert import OperatorMatrix, DensityMatrix
from Physics.Hilbert import annihilation_op, number_op, pauli_ops, excited_projector, tensor_embed
from Physics.Hilbert import coherent_state, fock_state, joint_state, partial_trace, expectation
from Physics.Hilbert import phase_space_grid, wigner_map, mean_photon_number_from_wigner
from Physics.Dynamics import LindbladGenerator, step_propagators, kerr_hamiltonian
from Physics.Drive import drive_hamiltonian_term
from Physics.Random import trajectory_generator, THEORY_STREAM
from Analysis.Estimation import MonteCarloEstimate, mutual_information_monte_carlo, DEFAULT_MC_SAMPLES

# Coefficient of determination below which an exponential fit is flagged
MIN_FIT_R2 = 0.98

# Integration steps per comb period of the dephasing simulation
DEPHASING_STEPS_PER_PERIOD = 84

# Joint superoperators are large; propagators are built a few steps at a time
PROPAGATOR_CHUNK = 8


class FitError(RuntimeError):
    # Carries the residuals of the failed fit
    def __init__(self, message, residuals=None):
        super(FitError, self).__init__(message)
        self.residuals = residuals


class EmittedStatePair(object):
    def __init__(self, theta, chiTq):
        self.theta      = float(theta)
        self.chiTq      = float(chiTq)
        self.overlap    = emitted_overlap(theta, chiTq)

    @property
    def magnitude(self):
        return abs(self.overlap)


def emitted_overlap(theta, chiTq):
    # Overlap of the field states emitted with n and n+1 photons over one comb period
    return math.cos(theta / 2) ** 2 + math.sin(theta / 2) ** 2 / (1 - 1j * chiTq)


def dephasing_rate_bound(theta, params):
    return -(params.chi / math.pi) * math.log(abs(emitted_overlap(theta, params.chi_tq)))


def binary_entropy(p):
    # Nats
    p = np.asarray(p, dtype=float)
    return -scipy.special.xlogy(p, p) - scipy.special.xlogy(1 - p, 1 - p)


def to_bits(nats):
    return np.asarray(nats) / math.log(2)


def accessible_information(s):
    # Two equiprobable pure states with overlap magnitude s, optimal projective measurement
    s = min(1.0, abs(s))
    return float(math.log(2) - binary_entropy(0.5 * (1 + math.sqrt(1 - s ** 2))))


def accessible_information_rate(theta, params):
    s = abs(emitted_overlap(theta, params.chi_tq))
    return accessible_information(s) / params.comb_period


def _projective_information(phi, s):
    # Two states in the real plane measured in the basis rotated by phi
    states = np.array([[1.0, 0.0], [s, math.sqrt(max(0.0, 1 - s ** 2))]])
    basis = np.array([[math.cos(phi), math.sin(phi)], [-math.sin(phi), math.cos(phi)]])
    conditional = (states @ basis.T) ** 2
    marginal = conditional.mean(axis=0)
    h_y = -np.sum(scipy.special.xlogy(marginal, marginal))
    h_y_given = -np.mean(np.sum(scipy.special.xlogy(conditional, conditional), axis=1))
    return float(h_y - h_y_given)


def brute_force_accessible_information(s, n_grid=2001):
    """Maximize the mutual information over projective measurements in the plane of the two states."""
    s = min(1.0, abs(s))
    grid = np.linspace(0, math.pi, n_grid)
    values = np.array([_projective_information(phi, s) for phi in grid])
    best = int(np.argmax(values))
    step = grid[1] - grid[0]
    result = scipy.optimize.minimize_scalar(lambda phi: -_projective_information(phi, s),
                                            bounds=(grid[best] - step, grid[best] + step), method="bounded",
                                            options={"xatol": 1e-10})
    return max(float(values[best]), -float(result.fun))


def kick_rotation(theta, n, kick_index):
    # Instantaneous kick about +-y; the axis flips every period for odd photon numbers
    sign = (-1) ** (int(n) * int(kick_index))
    _, sy, _, _ = pauli_ops()
    angle = 0.5 * sign * theta
    return OperatorMatrix(math.cos(angle) * np.eye(2) - 1j * math.sin(angle) * sy.data)


def mode_overlap(k, n, chiTq):
    # Projection of the emission mode of n photons onto the demodulation mode of k photons
    return 1.0 / (1.0 + 1j * (k - n) * chiTq)


class OutcomeModel(object):
    """
    Exact heterodyne outcome of one comb period, demodulated at the frequency of k photons
    while n photons are present.

    The qubit is kicked into cos(theta/2)|g> + sin(theta/2)|e> and emits a single-rail
    field state, detected with efficiency eta. Off-resonant demodulation keeps the
    fraction |a|^2 of the emitted field, a the mode overlap.
    """
    def __init__(self, theta, eta, n, k, chiTq):
        self.theta  = float(theta)
        self.eta    = float(eta)
        self.n      = int(n)
        self.k      = int(k)
        self.chiTq  = float(chiTq)

        if not 0 <= self.eta <= 1:
            logging.error("Detection efficiency must lie in [0, 1] (got %s)" % eta)
            raise ValueError("Detection efficiency must lie in [0, 1]!")

        self.cos = math.cos(self.theta / 2)
        self.sin = math.sin(self.theta / 2)
        a = mode_overlap(self.k, self.n, self.chiTq)
        self.effective_eta = self.eta * abs(a) ** 2
        self.phase = float(np.angle(a))

    def density(self, m):
        m = np.asarray(m, dtype=complex)
        eta, c, s = self.effective_eta, self.cos, self.sin
        rotated = np.exp(-1j * self.phase) * m
        return np.exp(-np.abs(m) ** 2) / math.pi * (1 - eta * s ** 2 + eta * s ** 2 * np.abs(m) ** 2
                                                    + 2 * math.sqrt(eta) * c * s * rotated.real)

    def log_density(self, m):
        with np.errstate(divide="ignore"):
            return np.log(self.density(m))

    def density_n(self, m):
        # Resonant demodulation, k = n
        return OutcomeModel(self.theta, self.eta, self.n, self.n, self.chiTq).density(m)

    @property
    def mean(self):
        return math.sqrt(self.effective_eta) * self.cos * self.sin * np.exp(1j * self.phase)

    @property
    def covariance(self):
        # Real 2x2 covariance of (Re m, Im m)
        second = 0.5 * (1 + self.effective_eta * self.sin ** 2)
        mean = np.array([self.mean.real, self.mean.imag])
        return second * np.eye(2) - np.outer(mean, mean)

    def sample(self, rng, size):
        """Draw outcomes by mixing vacuum noise with rejection sampling of the emitted state."""
        eta, c, s = self.effective_eta, self.cos, self.sin
        weight = c ** 2 + eta * s ** 2
        u = c / math.sqrt(weight) if weight > 0 else 1.0
        v = math.sqrt(eta) * s / math.sqrt(weight) if weight > 0 else 0.0

        vacuum = rng.random(size) >= weight
        samples = _complex_normal(rng, size)
        todo = np.nonzero(~vacuum)[0]
        while len(todo):
            proposal = _rejection_proposal(rng, len(todo))
            accept = rng.random(len(todo)) * (1 + np.abs(proposal) ** 2) <= np.abs(u + v * np.conj(proposal)) ** 2
            samples[todo[accept]] = proposal[accept]
            todo = todo[~accept]
        return np.exp(1j * self.phase) * samples


def _complex_normal(rng, size):
    # Circular Gaussian with E|z|^2 = 1
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / math.sqrt(2)


def _rejection_proposal(rng, size):
    # Density (1 + |m|^2) exp(-|m|^2) / (2 pi)
    radial = rng.random(size) < 0.5
    magnitude = np.where(radial, np.sqrt(rng.gamma(2.0, 1.0, size)), 0.0)
    phase = rng.uniform(0, 2 * math.pi, size)
    gaussian = _complex_normal(rng, size)
    return np.where(radial, magnitude * np.exp(1j * phase), gaussian)


def outcome_distribution_infinite_comb(theta, eta, n, k, chiTq):
    return OutcomeModel(theta, eta, n, k, chiTq)


def _pair_model(theta, eta, chiTq, resonant):
    # Joint outcome (m_q, m_q+1) when the photon number sits at column `resonant`
    other = 1 - resonant
    single = OutcomeModel(theta, eta, 0, 0, chiTq)
    a = mode_overlap(other, resonant, chiTq)
    b2 = 1 - abs(a) ** 2

    def sample(rng, size):
        x = np.empty((size, 2), dtype=complex)
        x[:, resonant] = single.sample(rng, size)
        x[:, other] = a * x[:, resonant] + math.sqrt(b2) * _complex_normal(rng, size)
        return x

    def log_density(x):
        x = np.atleast_2d(x)
        residual = x[:, other] - a * x[:, resonant]
        with np.errstate(divide="ignore"):
            return single.log_density(x[:, resonant]) - np.abs(residual) ** 2 / b2 - math.log(math.pi * b2)

    return sample, log_density


def heterodyne_information(theta, eta, chiTq, n_samples=DEFAULT_MC_SAMPLES, seed=0, tolerance=None):
    """Mutual information per comb period between two adjacent photon numbers and the outcome pair."""
    if eta == 0 or math.sin(theta / 2) == 0:
        return MonteCarloEstimate(0.0, 0.0, 0)
    models = [_pair_model(theta, eta, chiTq, resonant) for resonant in [0, 1]]
    rng = trajectory_generator(seed, 0, THEORY_STREAM)
    return mutual_information_monte_carlo([m[0] for m in models], [m[1] for m in models], [0.5, 0.5],
                                          n_samples, rng, tolerance=tolerance)


def heterodyne_rate_bound(theta, eta, params, n_samples=DEFAULT_MC_SAMPLES, seed=0, tolerance=None):
    estimate = heterodyne_information(theta, eta, params.chi_tq, n_samples, seed, tolerance)
    return MonteCarloEstimate(estimate.value / params.comb_period, estimate.stderr / params.comb_period,
                              estimate.n_samples)


def gaussian_approximation_divergence(theta, eta, n_samples=DEFAULT_MC_SAMPLES, rng=None, seed=0, chiTq=0.0):
    """Kullback-Leibler divergence from the exact resonant outcome density to its moment-matched Gaussian."""
    model = OutcomeModel(theta, eta, 0, 0, chiTq)
    rng = trajectory_generator(seed, 1, THEORY_STREAM) if rng is None else rng
    samples = model.sample(rng, n_samples)

    mean = np.array([model.mean.real, model.mean.imag])
    cov = model.covariance
    points = np.column_stack([samples.real, samples.imag]) - mean
    inverse = np.linalg.inv(cov)
    log_gauss = (-0.5 * np.einsum("bi,ij,bj->b", points, inverse, points)
                 - 0.5 * np.linalg.slogdet(2 * math.pi * cov)[1])
    # Densities over the complex plane are per unit area of (Re, Im), as is the Gaussian
    terms = model.log_density(samples) - log_gauss
    return MonteCarloEstimate(terms.mean(), terms.std(ddof=1) / math.sqrt(len(terms)), len(terms))


class DephasingResult(object):
    def __init__(self, theta, gamma, kappa, gamma_d, r2_coherence, r2_photons):
        self.theta          = theta
        self.gamma          = float(gamma)
        self.kappa          = float(kappa)
        self.gamma_d        = float(gamma_d)
        self.r2_coherence   = float(r2_coherence)
        self.r2_photons     = float(r2_photons)

    @property
    def flagged(self):
        return self.r2_coherence < MIN_FIT_R2 or self.r2_photons < MIN_FIT_R2

    def to_dict(self):
        values = OrderedDict()
        values["theta"]         = self.theta
        values["gamma"]         = self.gamma
        values["kappa"]         = self.kappa
        values["gamma_d"]       = self.gamma_d
        values["r2_coherence"]  = self.r2_coherence
        values["r2_photons"]    = self.r2_photons
        values["flagged"]       = self.flagged
        return values


def _r_squared(values, fitted):
    total = np.sum((values - values.mean()) ** 2)
    if total == 0:
        return 1.0 if np.allclose(values, fitted) else 0.0
    return 1 - np.sum((values - fitted) ** 2) / total


def fit_exponential(times, values):
    # values ~ A exp(-rate t); returns (A, rate, r2)
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(times) < 3:
        logging.error("Exponential fit needs at least 3 points (got %d)" % len(times))
        raise FitError("Not enough points for an exponential fit!")

    def model(t, amplitude, rate):
        return amplitude * np.exp(-rate * (t - times[0]))

    positive = values > 0
    slope = -np.polyfit(times[positive] - times[0], np.log(values[positive]), 1)[0] if positive.sum() >= 2 else 0.0
    try:
        (amplitude, rate), _ = scipy.optimize.curve_fit(model, times, values, p0=[values[0], slope], maxfev=10000)
    except RuntimeError as e:
        residuals = values - model(times, values[0], slope)
        logging.error("Exponential fit did not converge: %s" % e)
        raise FitError("Exponential fit did not converge!", residuals)
    return amplitude * math.exp(rate * times[0]), rate, _r_squared(values, model(times, amplitude, rate))


def simulate_dephasing_series(params, spec, alpha0, periods, n_trunc=None, steps_per_period=DEPHASING_STEPS_PER_PERIOD,
                              integrator="magnus"):
    """
    Joint qubit and cavity Lindblad evolution under the comb, in the rotating frame.

    Returns the output times (multiples of the comb period) and the reduced cavity states.
    """
    n_trunc = params.N_trunc if n_trunc is None else n_trunc
    period = spec.period
    dt = period / steps_per_period

    dispersive = params.chi * tensor_embed(excited_projector(), "qubit", n_trunc) @ tensor_embed(number_op(n_trunc), "cavity", n_trunc)
    kerr = tensor_embed(kerr_hamiltonian(params, n_trunc), "cavity", n_trunc)
    hamiltonian = drive_hamiltonian_term(spec, "rotating").embed("qubit", n_trunc).plus(dispersive + kerr)

    _, _, _, sm = pauli_ops()
    dissipators = [(1 / params.T_q, tensor_embed(sm, "qubit", n_trunc)),
                   (1 / params.T_c, tensor_embed(annihilation_op(n_trunc), "cavity", n_trunc)),
                   (2 / params.T_c_phi, tensor_embed(number_op(n_trunc), "cavity", n_trunc))]

    # The rotating frame Hamiltonian repeats every comb period
    generator = LindbladGenerator(hamiltonian, dissipators)
    period_map = np.eye(generator.static.shape[0], dtype=complex)
    for start in range(0, steps_per_period, PROPAGATOR_CHUNK):
        count = min(PROPAGATOR_CHUNK, steps_per_period - start)
        steps = step_propagators(generator, start * dt, dt, count, integrator)
        period_map = reduce(lambda total, step: step @ total, steps, period_map)

    ground = fock_state(0, 1)
    rho = joint_state(ground, coherent_state(alpha0, n_trunc)).data.reshape(-1)
    states = []
    for k in range(periods + 1):
        if k:
            rho = period_map @ rho
        joint = rho.reshape(2 * (n_trunc + 1), 2 * (n_trunc + 1))
        joint = joint / np.trace(joint)
        states.append(partial_trace(DensityMatrix.from_array(joint, tolerance=1e-6), "cavity", n_trunc))
    logging.debug("Dephasing series over %d periods with alpha0 = %s" % (periods, alpha0))
    return period * np.arange(periods + 1), states


def dephasing_extraction(times, cavity_states, params, theta=None, use_wigner=True, grid_step=0.1):
    """
    Measurement induced dephasing rate from a simulated cavity series.

    The coherence |<a>| decays at gamma, the mean photon number at kappa;
    Gamma_d = gamma - kappa / 2 - 1 / T_c_phi.
    """
    times = np.asarray(times, dtype=float)
    n_trunc = cavity_states[0].dim - 1
    a = annihilation_op(n_trunc)
    coherence = np.array([abs(expectation(state, a)) for state in cavity_states])

    if use_wigner:
        extent = math.sqrt(n_trunc) + 3
        grid = phase_space_grid(extent, grid_step)
        photons = np.array([mean_photon_number_from_wigner(wigner_map(state, grid), n_trunc)
                            for state in cavity_states])
    else:
        photons = np.array([expectation(state, number_op(n_trunc)).real for state in cavity_states])

    _, gamma, r2_coherence = fit_exponential(times, coherence)
    _, kappa, r2_photons = fit_exponential(times, photons)
    result = DephasingResult(theta, gamma, kappa, gamma - 0.5 * kappa - 1 / params.T_c_phi, r2_coherence, r2_photons)
    if result.flagged:
        logging.warning("Non-exponential decay at theta = %s (R2 %.4f / %.4f)" % (theta, r2_coherence, r2_photons))
    return result


def coherent_vacuum_probability(t, n0, T_c):
    return np.exp(-n0 * np.exp(-np.asarray(t, dtype=float) / T_c))


def coherent_vacuum_decay_fit(times, p0, T_c_guess=None):
    """Fit P_t(0) = exp(-n0 exp(-t / T_c)); returns (n0, T_c, residuals)."""
    times = np.asarray(times, dtype=float)
    p0 = np.asarray(p0, dtype=float)
    if len(times) < 5:
        logging.error("Vacuum decay fit needs at least 5 points (got %d)" % len(times))
        raise FitError("Not enough points for the vacuum decay fit!")
    if np.any(p0 <= 0) or np.any(p0 > 1):
        logging.error("Vacuum probabilities must lie in (0, 1]")
        raise FitError("Vacuum probabilities outside (0, 1]!")

    # Linearize log(-log P) = log n0 - t / T_c for the starting point
    usable = p0 < 1
    if usable.sum() >= 2:
        slope, intercept = np.polyfit(times[usable], np.log(-np.log(p0[usable])), 1)
        guess = [math.exp(intercept), -1 / slope if slope < 0 else (T_c_guess or np.ptp(times))]
    else:
        guess = [1.0, T_c_guess or np.ptp(times)]

    try:
        (n0, T_c), _ = scipy.optimize.curve_fit(coherent_vacuum_probability, times, p0, p0=guess,
                                                bounds=([0, 1e-12], [np.inf, np.inf]), maxfev=20000)
    except (RuntimeError, ValueError) as e:
        residuals = p0 - coherent_vacuum_probability(times, *guess)
        logging.error("Vacuum decay fit did not converge: %s (max residual %.3g)" % (e, np.max(np.abs(residuals))))
        raise FitError("Vacuum decay fit did not converge!", residuals)
    return n0, T_c, p0 - coherent_vacuum_probability(times, n0, T_c)
