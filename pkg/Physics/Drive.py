import math
import logging

import numpy as np
import scipy.linalg

from Physics.Hilbert import OperatorMatrix, pauli_ops
from Physics.Dynamics import TimeDependentHamiltonian, GAUSS_OFFSET, CF4_LONG, CF4_SHORT

# Relative tolerance when checking that durations fill whole comb periods
PERIOD_TOL = 1e-9

# Longest search for a common period of the IF carrier and the comb
MAX_PERIOD_MULTIPLE = 1000


class InvalidCombError(ValueError):
    pass


def is_multiple(value, unit, tol=PERIOD_TOL):
    ratio = value / unit
    return round(ratio) >= 1 and abs(ratio - round(ratio)) < tol * max(1.0, ratio)


class CombSpec(object):
    # Frequency comb of 2K+1 equal teeth spaced by delta_omega around center_offset
    def __init__(self, Omega, delta_omega, K=10, center_offset=0.0, duration=None, sample_dt=None):

        self.Omega          = float(Omega)
        self.delta_omega    = float(delta_omega)
        self.K              = int(K)
        self.center_offset  = float(center_offset)

        errors = []
        if self.K < 0:
            errors.append("K must be non-negative (got %s)" % self.K)
        if not self.delta_omega > 0:
            errors.append("delta_omega must be positive (got %s)" % self.delta_omega)
        if errors:
            for error in errors:
                logging.error("Invalid comb: %s" % error)
            raise InvalidCombError("Invalid comb: %s" % "; ".join(errors))

        self.duration   = float(duration) if duration is not None else self.period
        self.sample_dt  = float(sample_dt) if sample_dt is not None else self.period / 42

        if not is_multiple(self.duration, self.period):
            logging.error("Comb duration %s us is not a positive multiple of the comb period %s us" % (self.duration, self.period))
            raise InvalidCombError("Comb duration must be a multiple of the comb period!")
        if not is_multiple(self.period, self.sample_dt):
            logging.error("Sample step %s us does not divide the comb period %s us" % (self.sample_dt, self.period))
            raise InvalidCombError("Sample step must divide the comb period!")

    @property
    def period(self):
        return 2 * math.pi / self.delta_omega

    @property
    def n_teeth(self):
        return 2 * self.K + 1

    @property
    def n_periods(self):
        return int(round(self.duration / self.period))

    @property
    def samples_per_period(self):
        return int(round(self.period / self.sample_dt))

    def with_amplitude(self, Omega):
        return CombSpec(Omega, self.delta_omega, self.K, self.center_offset, self.duration, self.sample_dt)

    def to_dict(self):
        return {"Omega": self.Omega,
                "delta_omega": self.delta_omega,
                "K": self.K,
                "center_offset": self.center_offset,
                "duration": self.duration,
                "sample_dt": self.sample_dt}

    @classmethod
    def from_kick_angle(cls, theta, params, K=10, spacing=2.0, center=-4.0, n_periods=21, samples_per_period=42):
        # Spacing and center are given in units of chi
        delta_omega = spacing * params.chi
        period = 2 * math.pi / delta_omega
        return cls(Omega=theta * delta_omega / (2 * math.pi),
                   delta_omega=delta_omega,
                   K=K,
                   center_offset=center * params.chi,
                   duration=n_periods * period,
                   sample_dt=period / samples_per_period)

    @classmethod
    def from_config(cls, section, params):
        return cls.from_kick_angle(math.pi * float(section["theta_pi"]), params,
                                   K=int(section["teeth_k"]),
                                   spacing=float(section["spacing_chi"]),
                                   center=float(section["center_chi"]),
                                   n_periods=int(section["n_periods"]),
                                   samples_per_period=int(section["samples_per_period"]))

    def __repr__(self):
        return "CombSpec(theta=%.4f, K=%d, periods=%d)" % (kick_angle(self), self.K, self.n_periods)


def dirichlet_kernel(x, K):
    # sum_{k=-K..K} exp(-ikx) written without the removable singularity at x = 0
    x = np.asarray(x, dtype=float)
    total = np.ones_like(x)
    for k in range(1, K + 1):
        total = total + 2 * np.cos(k * x)
    return total


def comb_envelope(spec, t):
    t = np.asarray(t, dtype=float)
    return spec.Omega * np.exp(1j * spec.center_offset * t) * dirichlet_kernel(spec.delta_omega * t, spec.K)


def kick_angle(spec):
    return 2 * math.pi * spec.Omega / spec.delta_omega


def comb_teeth(spec):
    # Tooth k contributes Omega exp(i (center_offset - k delta_omega) t)
    k = np.arange(-spec.K, spec.K + 1)
    return spec.center_offset - k * spec.delta_omega, np.full(len(k), spec.Omega)


def envelope_period(spec, omega_IF=0.0):
    # Smallest multiple of the comb period over which the (carrier shifted) envelope repeats
    for multiple in range(1, MAX_PERIOD_MULTIPLE + 1):
        span = multiple * spec.period
        phase = (spec.center_offset - omega_IF) * span
        if abs(math.remainder(phase, 2 * math.pi)) < 1e-9 * max(1.0, abs(phase)):
            return span
    return None


def drive_hamiltonian_term(spec, frame="rotating", omega_IF=0.0):
    # Rotating frame: (i/2)(E sigma_+ - E* sigma_-); the IF frame adds the exp(-i omega_IF t) carrier
    _, _, _, sm = pauli_ops()
    sigma_plus = sm.dag()
    drive_op = OperatorMatrix(0.5j * sigma_plus.data)
    zero = OperatorMatrix(np.zeros((2, 2)), hermitian=True)

    if frame == "rotating":
        carrier = 0.0
    elif frame == "if":
        carrier = omega_IF
    else:
        logging.error("Unknown drive frame '%s'. Expected 'rotating' or 'if'" % frame)
        raise InvalidCombError("Unknown drive frame '%s'!" % frame)

    if spec.Omega == 0:
        return TimeDependentHamiltonian(zero)

    def envelope(t):
        return np.exp(-1j * carrier * t) * comb_envelope(spec, t)

    return TimeDependentHamiltonian(zero, envelope, drive_op, period=envelope_period(spec, carrier))


def qubit_hamiltonian(params, spec, n, frame="if"):
    # Fixed photon number qubit Hamiltonian: (omega_IF + n chi)|e><e| plus the comb drive
    from Physics.Hilbert import excited_projector
    detuning = n * params.chi + (params.omega_IF if frame == "if" else 0.0)
    drive = drive_hamiltonian_term(spec, frame, params.omega_IF)
    return drive.plus(detuning * excited_projector())


def if_drive_signal(params, spec, t):
    # Real IF drive f(t) = Re[exp(-i omega_IF t) E(t)]
    return np.real(np.exp(-1j * params.omega_IF * np.asarray(t, dtype=float)) * comb_envelope(spec, t))


def period_unitary(params, spec, n=0, periods=1, steps_per_period=2000):
    # Closed qubit propagator over whole comb periods in the rotating frame
    hamiltonian = qubit_hamiltonian(params, spec, n, frame="rotating")
    dt = spec.period / steps_per_period
    steps = dt * np.arange(steps_per_period * periods)
    early = hamiltonian.at(steps + (0.5 - GAUSS_OFFSET) * dt)
    late = hamiltonian.at(steps + (0.5 + GAUSS_OFFSET) * dt)
    first = scipy.linalg.expm(-1j * dt * (CF4_LONG * early + CF4_SHORT * late))
    second = scipy.linalg.expm(-1j * dt * (CF4_SHORT * early + CF4_LONG * late))

    unitary = np.eye(2, dtype=complex)
    for step in np.matmul(second, first):
        unitary = step @ unitary
    return unitary


def rotation_angle(unitary):
    # Bloch rotation angle of a 2x2 unitary, up to its global phase
    return 2.0 * math.acos(min(1.0, abs(np.trace(unitary)) / 2.0))


def effective_kick_angle(spec, params, n=0, periods=1, steps_per_period=2000):
    """
    Bloch rotation per period of the undamped qubit driven by the comb at photon number n.

    Averaged over the given number of whole periods. Tends to kick_angle(spec) as K grows.
    """
    theta_eff = rotation_angle(period_unitary(params, spec, n, periods, steps_per_period)) / periods
    logging.debug("Effective kick %.6f rad for K=%d, n=%d" % (theta_eff, spec.K, n))
    return theta_eff
