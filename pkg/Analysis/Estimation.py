import math
import logging
from collections import OrderedDict
from functools import lru_cache

import numpy as np
import scipy.linalg
import scipy.special
import scipy.stats

from Physics.Random import trajectory_generator, ESTIMATION_STREAM
from Analysis.Signal import OutcomeVector, outcome_stream

# Relative ridge added to covariances that are not positive definite
RIDGE_SCALE = 1e-6

# Default confidence levels of first-passage statistics
CONFIDENCE_LEVELS = [0.7, 0.8, 0.9, 0.95]

DEFAULT_MC_SAMPLES = 20000
MAX_MC_SAMPLES = 1280000


class TrackingError(RuntimeError):
    pass


class MonteCarloToleranceError(RuntimeError):
    pass


class MonteCarloEstimate(object):
    def __init__(self, value, stderr, n_samples):
        self.value      = float(value)
        self.stderr     = float(stderr)
        self.n_samples  = int(n_samples)

    def __repr__(self):
        return "%.6g +/- %.2g (%d samples)" % (self.value, self.stderr, self.n_samples)


class PosteriorTrajectory(object):
    # Photon number distribution after every window
    def __init__(self, times, P):
        self.times  = np.asarray(times, dtype=float)
        self.P      = np.asarray(P, dtype=float)

        if self.P.ndim != 2 or len(self.times) != self.P.shape[0]:
            logging.error("Posterior of shape %s does not match %d times" % (self.P.shape, len(self.times)))
            raise TrackingError("Posterior does not match its time axis!")
        if np.any(self.P < 0) or np.any(np.abs(self.P.sum(axis=1) - 1) > 1e-9):
            logging.error("Posterior rows must be distributions")
            raise TrackingError("Posterior rows must be non-negative and sum to one!")

    @property
    def map_path(self):
        return np.argmax(self.P, axis=1)

    @property
    def confidence(self):
        return np.max(self.P, axis=1)

    def __len__(self):
        return len(self.times)

    def to_csv(self, path, record_index=None):
        columns = ["t_us"] + ["P%d" % n for n in range(self.P.shape[1])] + ["map"]
        if record_index is not None:
            columns = ["record"] + columns
        with open(path, "w") as fh:
            fh.write(",".join(columns) + "\n")
            for t, row, best in zip(self.times, self.P, self.map_path):
                values = ["%.12g" % t] + ["%.12g" % p for p in row] + ["%d" % best]
                if record_index is not None:
                    values = ["%d" % record_index] + values
                fh.write(",".join(values) + "\n")
        return path


class RateEstimate(object):
    def __init__(self, theta, gamma_m, bias, stderr, n_samples, flagged=False):
        self.theta      = float(theta)
        self.gamma_m    = float(gamma_m)
        self.bias       = float(bias)
        self.stderr     = float(stderr)
        self.n_samples  = int(n_samples)
        self.flagged    = bool(flagged)

    def to_dict(self):
        values = OrderedDict()
        values["theta"]     = self.theta
        values["gamma_m"]   = self.gamma_m
        values["bias"]      = self.bias
        values["stderr"]    = self.stderr
        values["n_samples"] = self.n_samples
        values["flagged"]   = self.flagged
        return values


def regularized_covariance(cov):
    cov = np.atleast_2d(np.asarray(cov, dtype=float))
    cov = 0.5 * (cov + cov.T)
    try:
        np.linalg.cholesky(cov)
        return cov
    except np.linalg.LinAlgError:
        ridge = RIDGE_SCALE * np.trace(cov) / len(cov)
        if not ridge > 0:
            ridge = RIDGE_SCALE
        logging.warning("Covariance is not positive definite; adding ridge %.3g" % ridge)
        return cov + ridge * np.eye(len(cov))


def _outcome_values(m):
    return m.m if isinstance(m, OutcomeVector) else np.asarray(m, dtype=float)


def log_likelihoods(m, bank):
    # log N(m; G[:, n], Sigma_n) for every n; m may hold one outcome vector per row
    values = _outcome_values(m)
    columns = []
    for n in bank.n_values:
        model = scipy.stats.multivariate_normal(bank.gram[:, n], regularized_covariance(bank.covariances[n]))
        columns.append(np.atleast_1d(model.logpdf(values)))
    result = np.stack(columns, axis=-1)
    return result[0] if values.ndim == 1 else result


def gaussian_likelihood(m, n, bank):
    return float(np.exp(log_likelihoods(m, bank)[n]))


@lru_cache(maxsize=64)
def _decay_propagator(size, dt, T_c):
    generator = birth_death_generator(size - 1, T_c)
    return scipy.linalg.expm(dt * generator)


def birth_death_generator(n_max, T_c):
    # Photon loss at rate n / T_c on the diagonal of the cavity state
    n = np.arange(n_max + 1, dtype=float)
    generator = np.diag(-n / T_c)
    generator[np.arange(n_max), np.arange(1, n_max + 1)] = n[1:] / T_c
    return generator


def checked_distribution(P):
    P = np.asarray(P, dtype=float)
    if np.any(P < -1e-15) or abs(P.sum() - 1) > 1e-9:
        logging.error("Prior must be a probability distribution (sum %s)" % P.sum())
        raise ValueError("Prior must be a probability distribution!")
    return np.clip(P, 0, None)


def decay_prior_step(P, dt, T_c):
    P = checked_distribution(P)
    if not math.isfinite(T_c) or dt == 0:
        return P.copy()
    result = _decay_propagator(len(P), float(dt), float(T_c)) @ P
    return np.clip(result, 0, None) / np.clip(result, 0, None).sum()


def _track(outcomes, times, bank, T_c, P0, step, dissipation):
    size = len(bank.n_values)
    P = np.full(size, 1.0 / size) if P0 is None else np.asarray(P0, dtype=float)
    if len(P) != size:
        logging.error("Prior over %d photon numbers does not match a bank over %d" % (len(P), size))
        raise TrackingError("Prior and template bank sizes differ!")
    P = checked_distribution(P)

    logl = log_likelihoods(np.atleast_2d(outcomes), bank)
    posterior = np.empty((len(times), size))
    for j in range(len(times)):
        if dissipation:
            P = decay_prior_step(P, step, T_c)
        with np.errstate(divide="ignore"):
            log_post = np.log(P) + logl[j]
        norm = scipy.special.logsumexp(log_post)
        if not np.isfinite(norm):
            logging.error("Posterior normalization failed at t = %s us" % times[j])
            raise TrackingError("Posterior normalization failed!")
        P = np.exp(log_post - norm)
        P = P / P.sum()
        posterior[j] = P
    return PosteriorTrajectory(times, posterior)


def bayes_track(record, bank, params, P0=None, stride=None, dissipation=True):
    """
    Track the photon number through successive windows of a record.

    Before every likelihood update the prior relaxes under photon loss over one
    stride; the update itself is done in the log domain.
    """
    outcomes, times = outcome_stream(record, bank, stride)
    step = (times[1] - times[0]) if len(times) > 1 else bank.tau
    return _track(outcomes, times, bank, params.T_c, P0, step, dissipation)


def track_outcomes(outcomes, times, bank, T_c=math.inf, P0=None, step=None, dissipation=True):
    times = np.asarray(times, dtype=float)
    step = bank.tau if step is None else step
    return _track(outcomes, times, bank, T_c, P0, step, dissipation)


def _default_rng(rng, seed):
    if rng is not None:
        return rng
    return trajectory_generator(seed, 0, ESTIMATION_STREAM)


def mutual_information_monte_carlo(samplers, log_densities, prior, n_samples=DEFAULT_MC_SAMPLES, rng=None,
                                   seed=0, tolerance=None, max_samples=MAX_MC_SAMPLES):
    """
    Mutual information in nats between a label and its outcome, E[log p(x|n) - log p(x)].

    samplers[n](rng, size) draws outcomes given n and log_densities[n](x) evaluates
    log p(x|n). With a tolerance, the sample count doubles until the standard error
    falls below it.
    """
    prior = np.asarray(prior, dtype=float)
    if len(samplers) < 2 or len(samplers) != len(prior) or len(log_densities) != len(prior):
        logging.error("Mutual information needs at least two labelled components with matching prior")
        raise ValueError("Mutual information needs at least two components!")
    rng = _default_rng(rng, seed)

    while True:
        counts = rng.multinomial(n_samples, prior / prior.sum())
        terms = []
        for label, count in enumerate(counts):
            if count == 0:
                continue
            x = samplers[label](rng, count)
            logs = np.array([np.atleast_1d(log_density(x)) for log_density in log_densities])
            with np.errstate(divide="ignore"):
                mixture = scipy.special.logsumexp(logs + np.log(prior)[:, None], axis=0)
            terms.append(logs[label] - mixture)
        terms = np.concatenate(terms)
        estimate = MonteCarloEstimate(terms.mean(), terms.std(ddof=1) / math.sqrt(len(terms)), len(terms))

        if tolerance is None or estimate.stderr <= tolerance:
            return estimate
        if 2 * n_samples > max_samples:
            logging.error("Monte Carlo standard error %.3g above tolerance %.3g at %d samples" % (estimate.stderr, tolerance, n_samples))
            raise MonteCarloToleranceError("Mutual information did not reach the requested tolerance!")
        logging.warning("Monte Carlo standard error %.3g above tolerance %.3g; doubling to %d samples" % (estimate.stderr, tolerance, 2 * n_samples))
        n_samples *= 2


def gaussian_entropy(cov):
    cov = np.atleast_2d(cov)
    _, logdet = np.linalg.slogdet(2 * math.pi * math.e * cov)
    return 0.5 * logdet


def mutual_information_gaussian_mixture(means, covariances, prior, n_samples=DEFAULT_MC_SAMPLES, rng=None,
                                        seed=0, tolerance=None, max_samples=MAX_MC_SAMPLES):
    # H(mixture) by Monte Carlo minus the closed form conditional entropies
    prior = np.asarray(prior, dtype=float) / np.sum(prior)
    models = [scipy.stats.multivariate_normal(np.atleast_1d(mean), regularized_covariance(cov))
              for mean, cov in zip(means, covariances)]
    if len(models) < 2:
        logging.error("Gaussian mixture needs at least two components (got %d)" % len(models))
        raise ValueError("Gaussian mixture needs at least two components!")
    rng = _default_rng(rng, seed)
    conditional = sum(p * gaussian_entropy(model.cov) for p, model in zip(prior, models))

    while True:
        counts = rng.multinomial(n_samples, prior)
        samples = [np.atleast_2d(model.rvs(size=count, random_state=rng)).reshape(count, -1)
                   for model, count in zip(models, counts) if count > 0]
        x = np.vstack(samples)
        logs = np.array([np.atleast_1d(model.logpdf(x)) for model in models])
        with np.errstate(divide="ignore"):
            surprisal = -scipy.special.logsumexp(logs + np.log(prior)[:, None], axis=0)
        estimate = MonteCarloEstimate(surprisal.mean() - conditional,
                                      surprisal.std(ddof=1) / math.sqrt(len(surprisal)), len(surprisal))

        if tolerance is None or estimate.stderr <= tolerance:
            return estimate
        if 2 * n_samples > max_samples:
            logging.error("Mixture entropy standard error %.3g above tolerance %.3g" % (estimate.stderr, tolerance))
            raise MonteCarloToleranceError("Mixture entropy did not reach the requested tolerance!")
        logging.warning("Mixture entropy standard error %.3g above tolerance %.3g; doubling to %d samples" % (estimate.stderr, tolerance, 2 * n_samples))
        n_samples *= 2


def _pair_information(bank, n_periods, n_samples, rng, pairs):
    # Per-period models: means shrink by sqrt(n_periods), covariances are kept
    scale = 1.0 / math.sqrt(n_periods)
    values, errors = [], []
    for q in pairs:
        means = [scale * bank.gram[:, q], scale * bank.gram[:, q + 1]]
        covs = [bank.covariances[q], bank.covariances[q + 1]]
        estimate = mutual_information_gaussian_mixture(means, covs, [0.5, 0.5], n_samples, rng)
        values.append(estimate.value)
        errors.append(estimate.stderr)
    return float(np.mean(values)), math.sqrt(float(np.sum(np.square(errors)))) / len(errors)


def empirical_measurement_rate(bank, zero_bank, params, theta, n_periods=None, n_samples=DEFAULT_MC_SAMPLES,
                               seed=0, pairs=None):
    """
    Measurement rate from Gaussian outcome models of two adjacent photon numbers.

    The information per comb period is averaged over the pairs (q, q+1); the
    information seen with the drive off, scaled by the ratio of record counts,
    is subtracted as estimation bias.
    """
    period = params.comb_period
    n_periods = int(round(bank.tau / period)) if n_periods is None else int(n_periods)
    pairs = list(range(len(bank.n_values) - 1)) if pairs is None else list(pairs)
    rng = trajectory_generator(seed, 0, ESTIMATION_STREAM)

    raw, raw_err = _pair_information(bank, n_periods, n_samples, rng, pairs)
    zero, zero_err = _pair_information(zero_bank, n_periods, n_samples, rng, pairs)

    records = float(np.mean(bank.n_records)) if bank.n_records else 1.0
    zero_records = float(np.mean(zero_bank.n_records)) if zero_bank.n_records else records
    bias = zero * zero_records / records

    gamma_m = (raw - bias) / period
    stderr = math.sqrt(raw_err ** 2 + (zero_err * zero_records / records) ** 2) / period
    flagged = gamma_m < -stderr
    if flagged:
        logging.warning("Measurement rate %.4g 1/us at theta = %.4f is negative beyond its error %.2g" % (gamma_m, theta, stderr))
    return RateEstimate(theta, gamma_m, bias / period, stderr, int(records), flagged)


def first_passage(posterior, level):
    # Time at which the largest posterior probability first reaches the level, or None
    reached = np.nonzero(posterior.confidence >= level)[0]
    return float(posterior.times[reached[0]]) if len(reached) else None


def confidence_time(outcome_groups, bank, levels=None, stride=None):
    """
    Average time to reach given confidence levels, per group of records.

    outcome_groups maps a group label (for instance the initial mean photon number)
    to a list of (outcomes, times) pairs. Tracking runs without photon loss.
    Records that never reach a level are counted as censored.
    """
    levels = CONFIDENCE_LEVELS if levels is None else list(levels)
    for level in levels:
        if not 0.5 < level < 1:
            logging.error("Confidence levels must lie in (0.5, 1) (got %s)" % level)
            raise ValueError("Confidence level outside (0.5, 1)!")

    rows = []
    for group in sorted(outcome_groups):
        posteriors = [track_outcomes(outcomes, times, bank, dissipation=False)
                      for outcomes, times in outcome_groups[group]]
        for level in levels:
            passages = [first_passage(posterior, level) for posterior in posteriors]
            reached = np.array([p for p in passages if p is not None])
            censored = len(passages) - len(reached)
            if censored:
                logging.warning("%d of %d records in group %s never reach confidence %.2f" % (censored, len(passages), group, level))
            row = OrderedDict()
            row["group"]    = group
            row["level"]    = level
            row["mean"]     = float(reached.mean()) if len(reached) else float("nan")
            row["stderr"]   = float(reached.std(ddof=1) / math.sqrt(len(reached))) if len(reached) > 1 else float("nan")
            row["reached"]  = int(len(reached))
            row["censored"] = int(censored)
            rows.append(row)
    return rows


def staircase_accuracy(posterior, truth, skip=0):
    # Fraction of windows after the first `skip` whose MAP value equals the true photon number
    truth = np.asarray(truth)
    if len(truth) != len(posterior):
        logging.error("Ground truth of %d windows does not match a posterior of %d windows" % (len(truth), len(posterior)))
        raise TrackingError("Ground truth and posterior lengths differ!")
    if skip >= len(truth):
        return float("nan")
    return float(np.mean(posterior.map_path[skip:] == truth[skip:]))


def detected_jumps(map_path, times):
    # Downward steps of the MAP path, placed between the two windows
    steps = []
    for i in range(1, len(map_path)):
        if map_path[i] < map_path[i - 1]:
            steps.append((0.5 * (times[i - 1] + times[i]), int(map_path[i - 1]), int(map_path[i])))
    return steps


def jump_localization(map_path, truth_jumps, times, tolerance):
    """
    Fraction of true photon losses matched by a MAP step within the tolerance.

    A true jump to n_after is matched by a detected step from a to b with
    b <= n_after < a whose time lies within the tolerance.
    """
    detections = detected_jumps(np.asarray(map_path), np.asarray(times, dtype=float))
    if not truth_jumps:
        return 1.0, []
    matched = []
    for t_jump, n_after in truth_jumps:
        hit = any(abs(t_step - t_jump) <= tolerance and after <= n_after < before
                  for t_step, before, after in detections)
        matched.append(hit)
    return float(np.mean(matched)), matched


def fock_preselection(r_values, n, threshold=0.5):
    # Keep records whose normalized outcomes point at n with r_n above the threshold
    r_values = np.atleast_2d(np.asarray(r_values, dtype=float))
    return (np.argmax(r_values, axis=1) == n) & (r_values[:, n] > threshold)
