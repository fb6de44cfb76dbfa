import json
import math
import logging
from collections import OrderedDict

import numpy as np
import scipy.special

from Physics.Hilbert import DensityMatrix, InvalidStateError, pauli_ops, tensor_embed
from Physics.Dynamics import InvalidParameterError, LindbladGenerator, TimeDependentHamiltonian, step_propagators
from Physics.Drive import is_multiple, qubit_hamiltonian, if_drive_signal
from Physics.Random import trajectory_generator, chunk_ranges, RECORD_STREAM, JUMP_STREAM
from System.Workers import map_chunks

# Trace below which a conditional state is considered collapsed
NORM_COLLAPSE = 1e-6

# Noise is drawn per trajectory in blocks of this many steps
NOISE_BLOCK = 4096

DEFAULT_SUBSTEPS = 5


class StepSizeError(RuntimeError):
    pass


class VoltageRecord(object):
    # Sampled IF voltage; sample k holds the mean voltage over [t0 + k dt, t0 + (k+1) dt)
    def __init__(self, samples, dt, gain=1.0, n_true=None, seed=None, index=0, frame="if",
                 period=None, params_hash=None, t0=0.0):

        self.samples        = np.asarray(samples, dtype=float)
        self.dt             = float(dt)
        self.gain           = float(gain)
        self.n_true         = n_true
        self.seed           = seed
        self.index          = index
        self.frame          = frame
        self.period         = period
        self.params_hash    = params_hash
        self.t0             = float(t0)

        if self.samples.ndim != 1:
            logging.error("Voltage records are one dimensional (got shape %s)" % (self.samples.shape,))
            raise ValueError("Voltage records must be one dimensional!")
        if period is not None and not is_multiple(self.duration, period):
            logging.error("Record duration %s us does not fill whole comb periods of %s us" % (self.duration, period))
            raise ValueError("Record duration must be a multiple of the comb period!")

    @property
    def duration(self):
        return len(self.samples) * self.dt

    @property
    def times(self):
        return self.t0 + self.dt * np.arange(len(self.samples))

    def __len__(self):
        return len(self.samples)

    def metadata(self):
        meta = OrderedDict()
        meta["dt"]          = self.dt
        meta["n_samples"]   = len(self.samples)
        meta["gain"]        = self.gain
        meta["n_true"]      = self.n_true
        meta["seed"]        = self.seed
        meta["index"]       = self.index
        meta["frame"]       = self.frame
        meta["period"]      = self.period
        meta["params_hash"] = self.params_hash
        meta["t0"]          = self.t0
        return meta

    def save(self, path):
        # Little endian float64 stream plus JSON sidecar
        self.samples.astype("<f8").tofile(path)
        with open(path + ".json", "w") as fh:
            json.dump(self.metadata(), fh, indent=4)
        return path

    @classmethod
    def load(cls, path):
        with open(path + ".json", "r") as fh:
            meta = json.load(fh)
        samples = np.fromfile(path, dtype="<f8")
        if len(samples) != meta["n_samples"]:
            logging.error("Record %s holds %d samples, sidecar declares %d" % (path, len(samples), meta["n_samples"]))
            raise IOError("Record file does not match its sidecar!")
        meta.pop("n_samples")
        return cls(samples, **meta)

    def to_csv(self, path):
        np.savetxt(path, np.column_stack([self.times, self.samples]), delimiter=",",
                   header="t_us,voltage", comments="", fmt="%.12g")
        return path


class RecordSet(object):
    # Equal length records of one prepared photon number, one row per trajectory
    def __init__(self, samples, dt, gain=1.0, n_true=None, master_seed=None, period=None):
        self.samples        = np.atleast_2d(np.asarray(samples, dtype=float))
        self.dt             = float(dt)
        self.gain           = float(gain)
        self.n_true         = n_true
        self.master_seed    = master_seed
        self.period         = period

    def __len__(self):
        return self.samples.shape[0]

    @property
    def n_samples(self):
        return self.samples.shape[1]

    def mean(self):
        return self.samples.mean(axis=0)

    def halves(self):
        # Two disjoint halves, used to keep Gram and covariance estimates unbiased
        half = len(self) // 2
        return self.samples[:half], self.samples[half:2 * half]

    def record(self, index):
        return VoltageRecord(self.samples[index], self.dt, self.gain, self.n_true, self.master_seed, index,
                             period=self.period)


class TrajectoryResult(object):
    def __init__(self, states, record, dW, jumps=None, photon_numbers=None):
        self.states         = states
        self.record         = record
        self.dW             = dW
        self.jumps          = jumps if jumps is not None else []
        self.photon_numbers = photon_numbers


class SMEIntegrator(object):
    # Conditional master equation stepping for a batch of trajectories.
    # Deterministic part: Lindblad propagator with the monitored jump term scaled by (1 - eta).
    # Measurement part: rho -> M rho M^dag / tr with M = 1 + sqrt(eta) L dy.
    def __init__(self, hamiltonians, dissipators, eta, dt, t_start, unraveling="homodyne",
                 lo_frequency=0.0, monitored=0, integrator="magnus", block_steps=NOISE_BLOCK):

        if unraveling not in ["homodyne", "heterodyne"]:
            logging.error("Unknown unraveling '%s'. Expected 'homodyne' or 'heterodyne'" % unraveling)
            raise InvalidParameterError("Unknown unraveling '%s'!" % unraveling)
        if not 0 <= eta <= 1:
            logging.error("Detection efficiency must lie in [0, 1] (got %s)" % eta)
            raise InvalidParameterError("Detection efficiency must lie in [0, 1]!")

        self.hamiltonians   = list(hamiltonians)
        self.eta            = float(eta)
        self.dt             = float(dt)
        self.t_start        = float(t_start)
        self.unraveling     = unraveling
        self.lo_frequency   = float(lo_frequency)
        self.integrator     = integrator

        weights = [1.0] * len(dissipators)
        weights[monitored] = 1.0 - self.eta
        self.generators = [LindbladGenerator(h, dissipators, weights) for h in self.hamiltonians]

        rate, op = dissipators[monitored]
        self.jump = math.sqrt(rate) * op.data
        self.dim = self.jump.shape[0]

        # Step propagators repeat with the Hamiltonian period when the grid is commensurate
        self.block_steps = int(block_steps)
        self.period_steps = None
        self.phase_offset = 0
        period = self.hamiltonians[0].period
        if all(h.is_static for h in self.hamiltonians):
            self.period_steps = 1
        elif period is not None and all(h.period == period for h in self.hamiltonians):
            steps = period / self.dt
            offset = self.t_start / self.dt
            if abs(steps - round(steps)) < 1e-6 and abs(offset - round(offset)) < 1e-6:
                self.period_steps = int(round(steps))
                self.phase_offset = int(round(offset)) % self.period_steps

        self.__cache = {}

    def __propagator_block(self, block):
        # Propagators of every mode, shape (modes, steps, D, D)
        if block not in self.__cache:
            if self.period_steps is not None:
                start, n_steps = 0.0, self.period_steps
            else:
                self.__cache.clear()
                start, n_steps = self.t_start + block * self.block_steps * self.dt, self.block_steps
            self.__cache[block] = np.array([step_propagators(generator, start, self.dt, n_steps, self.integrator)
                                            for generator in self.generators])
        return self.__cache[block]

    def propagators(self, step):
        if self.period_steps is not None:
            return self.__propagator_block(0)[:, (step + self.phase_offset) % self.period_steps]
        return self.__propagator_block(step // self.block_steps)[:, step % self.block_steps]

    def propagator(self, step, mode=0):
        return self.propagators(step)[mode]

    def time(self, step):
        return self.t_start + step * self.dt

    def measurement_operator(self, step):
        return self.jump * np.exp(-1j * self.lo_frequency * self.time(step))

    def step(self, rho, step, dW, modes=None):
        batch = rho.shape[0]
        dim = self.dim
        eye = np.eye(dim)
        jump = self.measurement_operator(step)

        # Record increment from the state at the start of the step
        mean = np.einsum("ij,bji->b", jump, rho)
        root_eta = math.sqrt(self.eta)
        if self.unraveling == "homodyne":
            dy = 2 * root_eta * mean.real * self.dt + dW
            factor = dy
            ito = dy ** 2 - self.dt
        else:
            dy = root_eta * mean * self.dt + dW
            factor = np.conj(dy)
            ito = factor ** 2

        # Deterministic propagation
        if modes is None:
            vec = rho.reshape(batch, dim * dim) @ self.propagator(step).T
        else:
            vec = np.einsum("bij,bj->bi", self.propagators(step)[modes], rho.reshape(batch, dim * dim))
        rho = vec.reshape(batch, dim, dim)

        # Measurement back-action
        if self.eta > 0:
            kraus = (eye + root_eta * jump * factor[:, None, None]
                     + 0.5 * self.eta * (jump @ jump) * ito[:, None, None])
            rho = kraus @ rho @ np.conj(np.swapaxes(kraus, -1, -2))

        traces = np.real(np.einsum("bii->b", rho))
        if np.any(traces < NORM_COLLAPSE):
            logging.error("Conditional state norm collapsed to %g at t = %s us" % (traces.min(), self.time(step)))
            raise StepSizeError("Conditional state norm collapsed; reduce the step size!")
        rho = rho / traces[:, None, None]
        return 0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2))), dy


def _qubit_channel(dim):
    _, _, _, sm = pauli_ops()
    if dim == 2:
        return sm
    return tensor_embed(sm, "qubit", dim // 2 - 1)


def _single_step(rho, H, params, dW, dt, t, unraveling, dissipators):
    if not isinstance(H, TimeDependentHamiltonian):
        H = TimeDependentHamiltonian(H)
    if dissipators is None:
        dissipators = [(1 / params.T_q, _qubit_channel(rho.dim))]
    integrator = SMEIntegrator([H], dissipators, params.eta, dt, t, unraveling, block_steps=1)
    rho_next, dy = integrator.step(np.array(rho.data)[None], 0, np.atleast_1d(dW))
    return DensityMatrix.from_array(rho_next[0], tolerance=rho.tolerance), dy[0]


def sme_step_heterodyne(rho, H, params, dW, dt, t=0.0, dissipators=None):
    rho_next, dy = _single_step(rho, H, params, complex(dW), dt, t, "heterodyne", dissipators)
    return rho_next, complex(dy)


def sme_step_homodyne(rho, H, params, dW, dt, t=0.0, dissipators=None):
    rho_next, dy = _single_step(rho, H, params, float(dW), dt, t, "homodyne", dissipators)
    return rho_next, float(dy)


def ground_states(batch, dim=2):
    rho = np.zeros((batch, dim, dim), dtype=complex)
    rho[:, 0, 0] = 1
    return rho


def _draw_noise(generators, block, dt, unraveling):
    if unraveling == "homodyne":
        return np.array([g.standard_normal(block) for g in generators]) * math.sqrt(dt)
    # Circular complex increments with E|dW|^2 = dt
    real = np.array([g.standard_normal(block) for g in generators])
    imag = np.array([g.standard_normal(block) for g in generators])
    return (real + 1j * imag) * math.sqrt(0.5 * dt)


def comb_reference(params, spec, times, gain=1.0):
    # Reflected comb voltage c(t) = -sqrt(eta G T_q) f(t)
    return -math.sqrt(params.eta * gain * params.T_q) * if_drive_signal(params, spec, times)


def sampled_comb_reference(params, spec, n_samples, substeps=DEFAULT_SUBSTEPS, gain=1.0):
    # Comb reference averaged over the integration substeps of every sample
    dt = spec.sample_dt / substeps
    times = spec.sample_dt * np.arange(n_samples)[:, None] + dt * (np.arange(substeps) + 0.5)[None, :]
    return comb_reference(params, spec, times, gain).mean(axis=1)


def _record_layout(params, spec, duration, substeps):
    duration = spec.duration if duration is None else float(duration)
    period = spec.period
    if not is_multiple(duration, period):
        logging.error("Record duration %s us is not a multiple of the comb period %s us" % (duration, period))
        raise InvalidParameterError("Record duration must be a multiple of the comb period!")
    dt = spec.sample_dt / substeps
    lead_steps = spec.samples_per_period * substeps
    n_samples = int(round(duration / spec.sample_dt))
    return duration, dt, lead_steps, n_samples


def _check_alignment(params, spec):
    # The IF carrier must complete whole cycles per comb period multiple used as window
    cycles = params.omega_IF * spec.duration / (2 * math.pi)
    if abs(cycles - round(cycles)) > 1e-6:
        logging.warning("omega_IF * duration = %.4f x 2pi is not an integer; templates are not window periodic" % cycles)


def _fixed_n_chunk(params, spec, n_true, indices, master_seed, duration, substeps, gain,
                   add_comb, keep_states, integrator, unraveling="homodyne"):

    duration, dt, lead_steps, n_samples = _record_layout(params, spec, duration, substeps)
    _, _, _, sm = pauli_ops()
    hamiltonian = qubit_hamiltonian(params, spec, n_true, frame="if")
    sme = SMEIntegrator([hamiltonian], [(1 / params.T_q, sm)], params.eta, dt, -lead_steps * dt,
                        unraveling=unraveling, integrator=integrator)

    generators = [trajectory_generator(master_seed, index, RECORD_STREAM) for index in indices]
    batch = len(indices)
    rho = ground_states(batch)

    total_steps = lead_steps + n_samples * substeps
    sums = np.zeros((batch, n_samples), dtype=complex if unraveling == "heterodyne" else float)
    noise_kept = []
    states = []

    for block_start in range(0, total_steps, NOISE_BLOCK):
        block = min(NOISE_BLOCK, total_steps - block_start)
        noise = _draw_noise(generators, block, dt, unraveling)
        if keep_states:
            noise_kept.append(noise[0])
        for j in range(block):
            step = block_start + j
            rho, dy = sme.step(rho, step, noise[:, j])
            if step >= lead_steps:
                sample = (step - lead_steps) // substeps
                sums[:, sample] += dy
                if keep_states and (step - lead_steps + 1) % substeps == 0:
                    states.append(DensityMatrix.from_array(rho[0]))

    samples = math.sqrt(gain) * sums / spec.sample_dt
    if add_comb:
        samples = samples + sampled_comb_reference(params, spec, n_samples, substeps, gain)[None, :]

    dW = np.concatenate(noise_kept)[lead_steps:] if keep_states else None
    return samples, states, dW


def simulate_record(params, spec, n_true, duration=None, seed=0, index=0, gain=1.0,
                    substeps=DEFAULT_SUBSTEPS, add_comb=False, integrator="magnus"):

    if not 0 <= n_true <= params.N_max:
        logging.error("Photon number %s outside [0, N_max=%d]" % (n_true, params.N_max))
        raise InvalidParameterError("Photon number outside [0, N_max]!")
    _check_alignment(params, spec)

    samples, states, dW = _fixed_n_chunk(params, spec, n_true, [index], seed, duration, substeps, gain,
                                         add_comb, True, integrator)
    record = VoltageRecord(samples[0], spec.sample_dt, gain, n_true, seed, index,
                           period=spec.period, params_hash=params.params_hash())
    return TrajectoryResult(states, record, dW)


def simulate_ensemble(params, spec, n_true, n_traj, master_seed, workers=1, duration=None, gain=1.0,
                      substeps=DEFAULT_SUBSTEPS, add_comb=False, integrator="magnus", first_index=0):

    if not 0 <= n_true <= params.N_max:
        logging.error("Photon number %s outside [0, N_max=%d]" % (n_true, params.N_max))
        raise InvalidParameterError("Photon number outside [0, N_max]!")
    _check_alignment(params, spec)

    chunks = [list(range(first_index + start, first_index + stop)) for start, stop in chunk_ranges(n_traj)]
    logging.debug("Simulating %d records for n = %d in %d chunks" % (n_traj, n_true, len(chunks)))

    def run_chunk(indices):
        samples, _, _ = _fixed_n_chunk(params, spec, n_true, indices, master_seed, duration, substeps,
                                       gain, add_comb, False, integrator)
        return samples

    results = map_chunks(run_chunk, chunks, workers)
    return RecordSet(np.vstack(results), spec.sample_dt, gain, n_true, master_seed, spec.period)


def heterodyne_ensemble_mean(params, spec, n_true, n_traj, master_seed, workers=1, duration=None,
                             substeps=DEFAULT_SUBSTEPS, integrator="magnus"):
    # Mean of dy/dt per sample over complex-Wiener heterodyne trajectories, with its standard error
    chunks = [list(range(start, stop)) for start, stop in chunk_ranges(n_traj)]

    def run_chunk(indices):
        sums, _, _ = _fixed_n_chunk(params, spec, n_true, indices, master_seed, duration, substeps,
                                    1.0, False, False, integrator, unraveling="heterodyne")
        return sums

    signals = np.vstack(map_chunks(run_chunk, chunks, workers))
    return signals.mean(axis=0), signals.std(axis=0, ddof=1) / math.sqrt(len(signals))


def ensemble_mean_record(params, spec, n, n_traj=None, master_seed=None, workers=1, duration=None,
                         gain=1.0, substeps=DEFAULT_SUBSTEPS, integrator="magnus"):

    if not 0 <= n <= params.N_max:
        logging.error("Photon number %s outside [0, N_max=%d]" % (n, params.N_max))
        raise InvalidParameterError("Photon number outside [0, N_max]!")

    if n_traj is not None:
        ensemble = simulate_ensemble(params, spec, n, n_traj, master_seed, workers, duration, gain,
                                     substeps, integrator=integrator)
        return VoltageRecord(ensemble.mean(), spec.sample_dt, gain, n, master_seed, period=spec.period,
                             params_hash=params.params_hash())

    # Deterministic path: Lindblad solution, sqrt(eta G / T_q) Tr(sigma_x rho) averaged per sample
    duration, dt, lead_steps, n_samples = _record_layout(params, spec, duration, substeps)
    sx, _, _, sm = pauli_ops()
    hamiltonian = qubit_hamiltonian(params, spec, n, frame="if")
    lindblad = SMEIntegrator([hamiltonian], [(1 / params.T_q, sm)], 0.0, dt, -lead_steps * dt,
                             integrator=integrator)

    rho = ground_states(1)
    sums = np.zeros(n_samples)
    zero = np.zeros(1)
    for step in range(lead_steps + n_samples * substeps):
        if step >= lead_steps:
            sums[(step - lead_steps) // substeps] += np.real(np.trace(sx.data @ rho[0]))
        rho, _ = lindblad.step(rho, step, zero)

    samples = math.sqrt(params.eta * gain / params.T_q) * sums / substeps
    return VoltageRecord(samples, spec.sample_dt, gain, n, None, period=spec.period,
                         params_hash=params.params_hash())


def poisson_populations(mean, n_max):
    # Poisson law truncated to [0, n_max] and renormalized
    if mean < 0:
        logging.error("Mean photon number must be non-negative (got %s)" % mean)
        raise InvalidParameterError("Mean photon number must be non-negative!")
    populations = np.zeros(n_max + 1)
    if mean == 0:
        populations[0] = 1
        return populations
    k = np.arange(n_max + 1)
    log_p = k * math.log(mean) - scipy.special.gammaln(k + 1)
    populations = np.exp(log_p - log_p.max())
    return populations / populations.sum()


def _initial_populations(initial_state, n_limit):
    if isinstance(initial_state, DensityMatrix):
        data = initial_state.data
        off_diagonal = data - np.diag(np.diag(data))
        if np.max(np.abs(off_diagonal)) > 1e-9:
            logging.error("Jump simulations need a cavity state diagonal in the Fock basis")
            raise InvalidStateError("Initial cavity state must be diagonal!")
        populations = np.real(np.diag(data))
    else:
        populations = np.asarray(initial_state, dtype=float)
    if len(populations) > n_limit + 1 or np.any(populations < -1e-12) or abs(populations.sum() - 1) > 1e-9:
        logging.error("Initial photon populations must be a distribution over [0, %d]" % n_limit)
        raise InvalidStateError("Invalid initial photon populations!")
    return np.clip(populations, 0, None) / np.clip(populations, 0, None).sum()


def sample_jumps(rng, populations, duration, T_c, dissipation=True):
    # Initial Fock number and the staircase of single photon losses at rate n / T_c
    n = int(rng.choice(len(populations), p=populations))
    initial = n
    jumps = []
    t = 0.0
    while dissipation and n > 0 and math.isfinite(T_c):
        t += rng.exponential(T_c / n)
        if t >= duration:
            break
        n -= 1
        jumps.append((t, n))
    return initial, jumps


def _jump_chunk(params, spec, populations, indices, master_seed, duration, substeps, gain, dissipation,
                keep_states, integrator):

    duration, dt, lead_steps, n_samples = _record_layout(params, spec, duration, substeps)
    _, _, _, sm = pauli_ops()

    # Rotating frame, one Hamiltonian per photon number; the local oscillator turns at omega_IF
    hamiltonians = [qubit_hamiltonian(params, spec, n, frame="rotating") for n in range(len(populations))]
    sme = SMEIntegrator(hamiltonians, [(1 / params.T_q, sm)], params.eta, dt, -lead_steps * dt,
                        lo_frequency=params.omega_IF, integrator=integrator)

    generators = [trajectory_generator(master_seed, index, JUMP_STREAM) for index in indices]
    staircases = [sample_jumps(g, populations, duration, params.T_c, dissipation) for g in generators]
    batch = len(indices)

    # Photon number of each trajectory at every step start
    total_steps = lead_steps + n_samples * substeps
    step_times = (np.arange(total_steps) - lead_steps) * dt
    modes = np.empty((batch, total_steps), dtype=int)
    for b, (initial, jumps) in enumerate(staircases):
        modes[b] = initial
        for t_jump, n_after in jumps:
            modes[b, step_times >= t_jump] = n_after

    rho = ground_states(batch)
    sums = np.zeros((batch, n_samples))
    states = []
    noise_kept = []
    for block_start in range(0, total_steps, NOISE_BLOCK):
        block = min(NOISE_BLOCK, total_steps - block_start)
        noise = _draw_noise(generators, block, dt, "homodyne")
        if keep_states:
            noise_kept.append(noise[0])
        for j in range(block):
            step = block_start + j
            rho, dy = sme.step(rho, step, noise[:, j], modes[:, step])
            if step >= lead_steps:
                sums[:, (step - lead_steps) // substeps] += dy
                if keep_states and (step - lead_steps + 1) % substeps == 0:
                    states.append(DensityMatrix.from_array(rho[0]))

    samples = math.sqrt(gain) * sums / spec.sample_dt
    # Photon number at each sample midpoint
    sample_modes = modes[:, lead_steps + substeps // 2::substeps][:, :n_samples]
    dW = np.concatenate(noise_kept)[lead_steps:] if keep_states else None
    return samples, staircases, sample_modes, states, dW


def simulate_jump_record(params, spec, initial_state, duration, seed, index=0, gain=1.0,
                         substeps=DEFAULT_SUBSTEPS, dissipation=True, integrator="magnus"):

    populations = _initial_populations(initial_state, params.N_trunc)
    _check_alignment(params, spec)
    samples, staircases, sample_modes, states, dW = _jump_chunk(params, spec, populations, [index], seed,
                                                                duration, substeps, gain, dissipation,
                                                                True, integrator)
    record = VoltageRecord(samples[0], spec.sample_dt, gain, "full", seed, index,
                           period=spec.period, params_hash=params.params_hash())
    return TrajectoryResult(states, record, dW, jumps=staircases[0][1], photon_numbers=sample_modes[0])


class JumpEnsemble(object):
    def __init__(self, records, initial_numbers, jumps, photon_numbers):
        self.records            = records
        self.initial_numbers    = initial_numbers
        self.jumps              = jumps
        self.photon_numbers     = photon_numbers

    def __len__(self):
        return len(self.records)


def simulate_jump_ensemble(params, spec, populations, duration, n_traj, master_seed, workers=1, gain=1.0,
                           substeps=DEFAULT_SUBSTEPS, dissipation=True, integrator="magnus"):

    populations = _initial_populations(populations, params.N_trunc)
    _check_alignment(params, spec)
    chunks = [list(range(start, stop)) for start, stop in chunk_ranges(n_traj)]
    logging.debug("Simulating %d jump records in %d chunks" % (n_traj, len(chunks)))

    def run_chunk(indices):
        samples, staircases, sample_modes, _, _ = _jump_chunk(params, spec, populations, indices, master_seed,
                                                              duration, substeps, gain, dissipation, False,
                                                              integrator)
        return samples, staircases, sample_modes

    records, initial, jumps, numbers = [], [], [], []
    for (samples, staircases, sample_modes), indices in zip(map_chunks(run_chunk, chunks, workers), chunks):
        for row, index in enumerate(indices):
            records.append(VoltageRecord(samples[row], spec.sample_dt, gain, "full", master_seed, index,
                                         period=spec.period, params_hash=params.params_hash()))
            initial.append(staircases[row][0])
            jumps.append(staircases[row][1])
            numbers.append(sample_modes[row])
    return JumpEnsemble(records, np.array(initial), jumps, np.array(numbers))
