import json
import math
import logging
from collections import OrderedDict

import numpy as np
import scipy.stats

from Physics.Drive import is_multiple
from Physics.Trajectories import RecordSet, VoltageRecord

# Condition number above which the Gram matrix is inverted through the pseudo-inverse
GRAM_CONDITION_LIMIT = 1e10

# Records per photon number below which covariance estimates are flagged
MIN_COVARIANCE_RECORDS = 100

BANK_FORMAT_VERSION = 1

# Gram norm, in units of its split-half noise floor, below which inversion is refused
GRAM_NOISE_SIGMAS = 3.0


class AliasingError(ValueError):
    pass


class AlignmentError(ValueError):
    pass


class SingularGramError(RuntimeError):
    pass


class OutcomeVector(object):
    # Matched filter outputs m_n of one window ending at t
    def __init__(self, m, t, tau):
        self.m      = np.asarray(m, dtype=float)
        self.t      = float(t)
        self.tau    = float(tau)

        if not np.all(np.isfinite(self.m)):
            logging.error("Outcome vector at t = %s us holds non-finite entries" % self.t)
            raise ValueError("Outcome vector entries must be finite!")

    def __len__(self):
        return len(self.m)

    def __getitem__(self, n):
        return self.m[n]


class TemplateBank(object):
    """
    Matched filter templates and their second order statistics.

    templates[n] is the mean record of n photons over one window of length tau,
    gram[n, m] the scalar product of templates n and m, and covariances[n] the
    covariance of the outcome vector when n photons are present.
    """
    def __init__(self, templates, gram, covariances, tau, sample_dt, split_half=True, n_records=None,
                 period=None, params_hash=None, analytic=False, noise_floor=0.0):

        self.templates      = np.atleast_2d(np.asarray(templates, dtype=float))
        self.gram           = np.asarray(gram, dtype=float)
        self.covariances    = np.asarray(covariances, dtype=float)
        self.tau            = float(tau)
        self.sample_dt      = float(sample_dt)
        self.split_half     = bool(split_half)
        self.n_records      = list(n_records) if n_records is not None else []
        self.period         = period
        self.params_hash    = params_hash
        self.analytic       = bool(analytic)
        self.noise_floor    = float(noise_floor)

        size = self.templates.shape[0]
        if self.gram.shape != (size, size):
            logging.error("Gram matrix of shape %s does not match %d templates" % (self.gram.shape, size))
            raise ValueError("Gram matrix does not match the templates!")
        if self.covariances.shape != (size, size, size):
            logging.error("Covariances of shape %s do not match %d templates" % (self.covariances.shape, size))
            raise ValueError("Covariance matrices do not match the templates!")
        if period is not None and not is_multiple(self.tau, period):
            logging.error("Window length %s us is not a multiple of the comb period %s us" % (self.tau, period))
            raise AlignmentError("Window length must be a multiple of the comb period!")

        self.__inverse = None

    @property
    def n_values(self):
        return np.arange(self.templates.shape[0])

    @property
    def window_samples(self):
        return self.templates.shape[1]

    @property
    def wide_uncertainty(self):
        return bool(self.n_records) and min(self.n_records) < MIN_COVARIANCE_RECORDS

    def gram_inverse(self):
        if self.__inverse is None:
            self.__inverse = invert_gram(self.gram, self.noise_floor)
        return self.__inverse

    def scaled(self, gram_factor):
        # Same templates with the Gram matrix and covariances divided by a common factor
        return TemplateBank(self.templates, self.gram / gram_factor, self.covariances / gram_factor, self.tau,
                            self.sample_dt, self.split_half, self.n_records, None, self.params_hash, self.analytic,
                            self.noise_floor / gram_factor)

    def header(self):
        header = OrderedDict()
        header["version"]           = BANK_FORMAT_VERSION
        header["tau"]               = self.tau
        header["sample_dt"]         = self.sample_dt
        header["split_half"]        = self.split_half
        header["n_records"]         = self.n_records
        header["period"]            = self.period
        header["params_hash"]       = self.params_hash
        header["analytic"]          = self.analytic
        header["noise_floor"]       = self.noise_floor
        header["wide_uncertainty"]  = self.wide_uncertainty
        return header

    def save(self, prefix):
        np.savez(prefix + ".npz", templates=self.templates, gram=self.gram, covariances=self.covariances)
        with open(prefix + ".json", "w") as fh:
            json.dump(self.header(), fh, indent=4)
        return [prefix + ".npz", prefix + ".json"]

    @classmethod
    def load(cls, prefix):
        with open(prefix + ".json", "r") as fh:
            header = json.load(fh)
        if header.get("version") != BANK_FORMAT_VERSION:
            logging.error("Template bank %s has format version %s, expected %s" % (prefix, header.get("version"), BANK_FORMAT_VERSION))
            raise IOError("Unsupported template bank version!")
        with np.load(prefix + ".npz") as arrays:
            return cls(arrays["templates"], arrays["gram"], arrays["covariances"], header["tau"],
                       header["sample_dt"], header["split_half"], header["n_records"], header["period"],
                       header["params_hash"], header["analytic"], header.get("noise_floor", 0.0))

    def to_csv(self, path):
        # Long format: matrix, row, column, value
        rows = []
        size = len(self.n_values)
        for i in range(size):
            for j in range(size):
                rows.append(("gram", i, j, self.gram[i, j]))
        for n in range(size):
            for i in range(size):
                for j in range(size):
                    rows.append(("cov_%d" % n, i, j, self.covariances[n, i, j]))
        with open(path, "w") as fh:
            fh.write("matrix,row,col,value\n")
            for name, i, j, value in rows:
                fh.write("%s,%d,%d,%.12g\n" % (name, i, j, value))
        return path


def invert_gram(gram, noise_floor=0.0):
    """
    Inverse of the Gram matrix, or its pseudo-inverse when ill conditioned.

    Refused when G vanishes or its norm does not rise above GRAM_NOISE_SIGMAS times
    the noise floor, i.e. when the templates are indistinguishable from noise.
    """
    gram = np.asarray(gram, dtype=float)
    if not np.any(gram != 0):
        logging.error("Gram matrix vanishes; the templates carry no signal")
        raise SingularGramError("Gram matrix is zero; inversion refused!")
    norm = np.linalg.norm(gram)
    if norm <= GRAM_NOISE_SIGMAS * noise_floor:
        logging.error("Gram matrix norm %.3g is within %g times its noise floor %.3g" % (norm, GRAM_NOISE_SIGMAS, noise_floor))
        raise SingularGramError("Gram matrix is at the noise floor; inversion refused!")
    condition = np.linalg.cond(gram)
    if not np.isfinite(condition) or condition > GRAM_CONDITION_LIMIT:
        logging.warning("Gram matrix condition number %.3g; using the pseudo-inverse" % condition)
        return np.linalg.pinv(gram)
    return np.linalg.inv(gram)


def analytic_signal(x):
    """Return x + i H[x] by zeroing negative frequencies and doubling the positive band."""
    x = np.asarray(x, dtype=float)
    size = x.shape[-1]
    if size < 4:
        logging.error("Analytic signal needs at least 4 samples (got %d)" % size)
        raise ValueError("Signal too short for an analytic signal!")

    spectrum = np.fft.fft(x, axis=-1)
    weights = np.zeros(size)
    weights[0] = 1
    if size % 2 == 0:
        weights[size // 2] = 1
        weights[1:size // 2] = 2
    else:
        weights[1:(size + 1) // 2] = 2
    return np.fft.ifft(spectrum * weights, axis=-1)


def _as_samples(v):
    if isinstance(v, VoltageRecord):
        return v.samples, v.dt, v.t0
    return np.asarray(v, dtype=float), None, 0.0


def check_sampling(params, dt):
    # Highest qubit frequency in the IF frame must stay below Nyquist
    highest = params.omega_IF + params.N_max * params.chi
    if not math.pi / dt > highest:
        logging.error("Sample step %s us aliases the qubit line at %.3f rad/us (Nyquist %.3f rad/us)" % (dt, highest, math.pi / dt))
        raise AliasingError("Record sample rate too low for the qubit frequencies!")


def demodulated_coherence(v, n, params, dt=None, t0=0.0, reference=None):
    # Complex quadrature I - iQ with zero phase
    samples, record_dt, record_t0 = _as_samples(v)
    dt = record_dt if dt is None else dt
    t0 = record_t0 if isinstance(v, VoltageRecord) else t0
    check_sampling(params, dt)
    if reference is not None:
        samples = samples - np.asarray(reference, dtype=float)
    times = t0 + dt * np.arange(len(samples))
    carrier = params.omega_IF + n * params.chi
    return np.exp(-1j * carrier * times) * analytic_signal(samples)


def demodulation_phase(coherence, samples_per_period):
    # Phase maximizing the energy of I over the first comb period
    head = np.asarray(coherence)[:samples_per_period]
    return -0.5 * float(np.angle(np.sum(head ** 2)))


def demodulate_quadratures(v, n, params, phase=None, dt=None, t0=0.0, reference=None, samples_per_period=None):
    """
    Demodulate a record at the frequency of a qubit dressed by n photons.

    Returns I and Q with I - iQ = exp(-i (omega_IF + n chi) t + i phase) z(t), z the
    analytic signal. When no phase is given, the phase putting the most energy into I
    over the first comb period is used.
    """
    coherence = demodulated_coherence(v, n, params, dt, t0, reference)
    if phase is None:
        if samples_per_period is None:
            record_dt = v.dt if isinstance(v, VoltageRecord) else dt
            samples_per_period = int(round(params.comb_period / record_dt))
        phase = demodulation_phase(coherence, samples_per_period)
    rotated = np.exp(1j * phase) * coherence
    return rotated.real, -rotated.imag


def matched_filter_outcomes(v, bank, t_end=None):
    samples, _, t0 = _as_samples(v)
    if len(samples) != bank.window_samples:
        logging.error("Window of %d samples does not match templates of %d samples" % (len(samples), bank.window_samples))
        raise AlignmentError("Window length does not match the template bank!")
    if isinstance(v, VoltageRecord) and abs(v.dt - bank.sample_dt) > 1e-12 * bank.sample_dt:
        logging.error("Record step %s us differs from template step %s us" % (v.dt, bank.sample_dt))
        raise AlignmentError("Record and template sample steps differ!")
    t_end = t0 + bank.tau if t_end is None else t_end
    return OutcomeVector(bank.sample_dt * bank.templates @ samples, t_end, bank.tau)


def outcome_stream(record, bank, stride=None):
    """
    Matched filter outcomes of successive windows of a long record.

    Returns the outcome matrix (windows x photon numbers) and the window end times.
    Windows start every `stride` samples, by default one window length.
    """
    samples, dt, t0 = _as_samples(record)
    dt = bank.sample_dt if dt is None else dt
    window = bank.window_samples
    stride = window if stride is None else int(stride)

    if bank.period is not None:
        per_period = bank.period / dt
        if abs(stride / per_period - round(stride / per_period)) > 1e-9 or stride < per_period - 1e-9:
            logging.error("Stride of %d samples is not a multiple of the comb period (%.3f samples)" % (stride, per_period))
            raise AlignmentError("Window stride must be a multiple of the comb period!")
    if len(samples) < window:
        logging.error("Record of %d samples is shorter than one window of %d samples" % (len(samples), window))
        raise AlignmentError("Record shorter than one window!")

    windows = np.lib.stride_tricks.sliding_window_view(samples, window)[::stride]
    outcomes = dt * windows @ bank.templates.T
    ends = t0 + dt * (np.arange(len(windows)) * stride + window)
    return outcomes, ends


def normalized_outcomes(m, bank):
    values = m.m if isinstance(m, OutcomeVector) else np.asarray(m, dtype=float)
    return values @ bank.gram_inverse().T


def _record_arrays(record_sets):
    # Accept RecordSets, arrays or a mapping keyed by photon number
    if isinstance(record_sets, dict):
        record_sets = [record_sets[n] for n in sorted(record_sets)]
    arrays = []
    for records in record_sets:
        arrays.append(records.samples if isinstance(records, RecordSet) else np.atleast_2d(np.asarray(records, dtype=float)))
    lengths = set(array.shape[1] for array in arrays)
    if len(lengths) != 1:
        logging.error("Record sets have different lengths: %s" % sorted(lengths))
        raise AlignmentError("All record sets must have the same length!")
    return arrays


def _halves(records):
    half = records.shape[0] // 2
    return records[:half], records[half:2 * half]


def gram_matrix(record_sets, dt, split_half=True):
    """
    Gram matrix of the mean records.

    With split_half, the two factors of every scalar product come from disjoint halves
    of the records so that noise does not bias the diagonal.
    """
    arrays = _record_arrays(record_sets)
    if not split_half:
        means = np.array([records.mean(axis=0) for records in arrays])
        return dt * means @ means.T

    for n, records in enumerate(arrays):
        if records.shape[0] < 2:
            logging.error("Split-half Gram matrix needs at least 2 records per photon number (n = %d has %d)" % (n, records.shape[0]))
            raise ValueError("Not enough records for a split-half Gram matrix!")
    first = np.array([_halves(records)[0].mean(axis=0) for records in arrays])
    second = np.array([_halves(records)[1].mean(axis=0) for records in arrays])
    cross = dt * first @ second.T
    return 0.5 * (cross + cross.T)


def gram_noise_floor(record_sets, dt):
    # Standard deviation of the split-half Gram matrix under noise alone, as a Frobenius norm
    arrays = _record_arrays(record_sets)
    half_variances = []
    for records in arrays:
        half = records.shape[0] // 2
        half_variances.append(np.var(records[:2 * half], axis=0, ddof=1) / half)
    half_variances = np.array(half_variances)
    return float(dt * math.sqrt(np.sum(half_variances @ half_variances.T)))


def covariance_matrices(record_sets, bank, split_half=None):
    """Covariance of the outcome vector for every prepared photon number."""
    arrays = _record_arrays(record_sets)
    split_half = bank.split_half if split_half is None else split_half
    dt = bank.sample_dt

    counts = [records.shape[0] for records in arrays]
    if min(counts) < MIN_COVARIANCE_RECORDS:
        logging.warning("Only %d records for some photon number; covariance estimates are wide" % min(counts))

    if not split_half or bank.analytic:
        return np.array([np.atleast_2d(np.cov(dt * records @ bank.templates.T, rowvar=False)) for records in arrays])

    # Outcomes of one half against the templates of the other half
    first = np.array([_halves(records)[0].mean(axis=0) for records in arrays])
    second = np.array([_halves(records)[1].mean(axis=0) for records in arrays])
    covariances = []
    for records in arrays:
        half_a, half_b = _halves(records)
        cov_b = np.cov(dt * half_b @ first.T, rowvar=False)
        cov_a = np.cov(dt * half_a @ second.T, rowvar=False)
        covariances.append(np.atleast_2d(0.5 * (cov_a + cov_b)))
    return np.array(covariances)


def build_template_bank(record_sets, dt, tau=None, split_half=True, templates=None, period=None, params_hash=None):
    """
    Estimate templates, Gram matrix and covariances from records of known photon numbers.

    When templates are supplied (for instance exact mean records), the Gram matrix is
    computed from them directly and only the covariances come from the records.
    """
    arrays = _record_arrays(record_sets)
    n_samples = arrays[0].shape[1]
    tau = n_samples * dt if tau is None else float(tau)
    if abs(tau - n_samples * dt) > 1e-9 * tau:
        logging.error("Window length %s us does not match %d samples of %s us" % (tau, n_samples, dt))
        raise AlignmentError("Window length does not match the records!")

    counts = [records.shape[0] for records in arrays]
    if templates is not None:
        templates = np.atleast_2d(np.asarray(templates, dtype=float))
        gram = dt * templates @ templates.T
        bank = TemplateBank(templates, gram, np.zeros((len(templates),) * 3), tau, dt, False, counts, period,
                            params_hash, analytic=True)
    else:
        means = np.array([records.mean(axis=0) for records in arrays])
        gram = gram_matrix(arrays, dt, split_half)
        noise_floor = gram_noise_floor(arrays, dt) if split_half else 0.0
        bank = TemplateBank(means, gram, np.zeros((len(means),) * 3), tau, dt, split_half, counts, period,
                            params_hash, noise_floor=noise_floor)

    bank.covariances = covariance_matrices(arrays, bank)
    logging.debug("Template bank over %d photon numbers, %d samples per window" % (len(arrays), n_samples))
    return bank


def exponential_templates(params, n_values, times):
    # Qubit coherence weights restarted at every comb period, in the IF frame
    times = np.asarray(times, dtype=float)
    since_kick = np.mod(times, params.comb_period)
    return np.array([np.exp(-1j * (params.omega_IF + n * params.chi) * times - since_kick / (2 * params.T_q))
                     for n in n_values])


def _gaussian_classifier(train_features, test_features):
    # Fit one Gaussian per class and return the accuracy of the maximum likelihood decision

    models = []
    for features in train_features:
        mean = features.mean(axis=0)
        cov = np.atleast_2d(np.cov(features, rowvar=False))
        ridge = 1e-9 * np.trace(cov) / len(cov)
        models.append(scipy.stats.multivariate_normal(mean, cov + ridge * np.eye(len(cov)), allow_singular=True))

    correct, total = 0, 0
    for label, features in enumerate(test_features):
        scores = np.array([model.logpdf(features) for model in models]).reshape(len(models), -1)
        correct += int(np.sum(np.argmax(scores, axis=0) == label))
        total += features.shape[0]
    return correct / float(total)


def demodulation_relevance(record_sets, bank, params):
    """
    Compare decoding accuracy of mean-record weights with exponential coherence weights.

    Each record set is split in two: the first half trains one Gaussian per photon
    number, the second half is classified. Returns both accuracies.
    """
    arrays = _record_arrays(record_sets)
    dt = bank.sample_dt
    times = dt * (np.arange(arrays[0].shape[1]) + 0.5)
    weights = exponential_templates(params, bank.n_values, times)

    template_train, template_test, exp_train, exp_test = [], [], [], []
    for records in arrays:
        train, test = _halves(records)
        template_train.append(dt * train @ bank.templates.T)
        template_test.append(dt * test @ bank.templates.T)
        complex_train = dt * train @ weights.T
        complex_test = dt * test @ weights.T
        exp_train.append(np.hstack([complex_train.real, complex_train.imag]))
        exp_test.append(np.hstack([complex_test.real, complex_test.imag]))

    result = OrderedDict()
    result["template_accuracy"] = _gaussian_classifier(template_train, template_test)
    result["exponential_accuracy"] = _gaussian_classifier(exp_train, exp_test)
    result["difference"] = result["template_accuracy"] - result["exponential_accuracy"]
    return result


def r_distribution(record_sets, bank, k, bins=60):
    # Histograms of the normalized outcome r_k for every prepared photon number, on shared edges
    arrays = _record_arrays(record_sets)
    values = [normalized_outcomes(bank.sample_dt * records @ bank.templates.T, bank)[:, k] for records in arrays]
    edges = np.histogram_bin_edges(np.concatenate(values), bins=bins)
    return edges, np.array([np.histogram(v, bins=edges, density=True)[0] for v in values])
