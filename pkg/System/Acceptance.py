import json
import math
import time
import hashlib
import logging
from collections import OrderedDict

import numpy as np
import scipy.integrate
import scipy.stats

from Modules.Experiment import Experiment
from Modules.Experiments import Rates, Dephasing, JumpTrack, ConfidenceTime
from Physics.Hilbert import pauli_ops
from Physics.Dynamics import LindbladGenerator, step_propagators
from Physics.Drive import qubit_hamiltonian
from Physics.Random import trajectory_generator, THEORY_STREAM
from Physics.Trajectories import ground_states, heterodyne_ensemble_mean, simulate_ensemble
from Physics.Trajectories import simulate_jump_ensemble, poisson_populations
from Analysis.Signal import demodulate_quadratures
from Analysis.Estimation import decay_prior_step, mutual_information_monte_carlo
from Analysis.Theory import accessible_information, brute_force_accessible_information
from System.Datastore import csv_text

ACCEPTANCE_COLUMNS = ["criterion", "passed", "value", "threshold", "detail"]

# Comb driven qubit evolution checked by the sanity suite
SANITY_DURATION = 2.0
SANITY_RUNTIME = 10.0
SANITY_TRACE_RATE = 1e-9
SANITY_HERMITIAN = 1e-10
SANITY_POSITIVITY = -1e-9

# Heterodyne mean against the master equation
SME_SIGMAS = 3.0
SME_COVERED = 0.99
SME_RUNTIME = 300.0

# Sign alternation of the post-kick extrema of the demodulated traces
ALTERNATING = 0.8
STEADY = 0.2
DECAY_TOL = 0.3

DEPHASING_TOL = 0.15
RATE_TOL = 0.2
RATE_T_C = 10.0
RATE_ORDER_SIGMAS = 3.0
INFORMATION_RATIO = 2.0

TRACKING_ACCURACY = 0.9
CONFIDENCE_LEVEL = 0.95
CONFIDENCE_RANGE = (10.0, 40.0)
CONFIDENCE_CORRELATION = 0.9

# Oracle tolerances
ACCESSIBLE_TOL = 1e-4
ENTROPY_TOL = 1e-3
DECAY_PRIOR_TOL = 1e-10
COVARIANCE_TOL = 0.02
NOISE_CHUNK = 4096


class Acceptance(Experiment):
    """
    Acceptance criteria of the whole reproduction.

    Each selected criterion runs at the sizes of the [acceptance] section and
    yields one row: id, pass flag, the value compared, its threshold and a short
    detail. Criteria built on full experiments run those experiments into the
    same output directory, so their tables are kept as evidence.
    """

    def define_input(self):
        self.add_argument("criteria", is_required=True)
        self.add_argument("sme_trajectories", is_required=True)
        self.add_argument("sme_thetas_pi", is_required=True)
        self.add_argument("rate_records_per_n", is_required=True)
        self.add_argument("jump_records", is_required=True)
        self.add_argument("confidence_records", is_required=True)
        self.add_argument("oracle_samples", is_required=True)
        self.add_argument("noise_windows", is_required=True)
        self.add_argument("determinism_trajectories", is_required=True)
        self.add_argument("determinism_workers", is_required=True)

    def define_output(self):
        self.add_output("acceptance", "acceptance.csv")
        self.add_output("acceptance_json", "acceptance.json")

    def execute(self):
        checks = {
            1: self.physics_sanity,
            2: self.sme_consistency,
            3: self.fluorescence_shape,
            4: self.dephasing_bound,
            5: self.measurement_rate,
            6: self.information_ordering,
            7: self.jump_tracking,
            8: self.confidence_time,
            9: self.oracles,
            10: self.determinism
        }
        self.__rates = None

        rows = []
        for criterion in sorted(set(int(c) for c in self.get_argument("criteria"))):
            if criterion not in checks:
                logging.error("Unknown acceptance criterion %d" % criterion)
                raise ValueError("Unknown acceptance criterion %d!" % criterion)
            passed, value, threshold, detail = self.stage("criterion_%d" % criterion, checks[criterion])
            if passed:
                logging.info("Acceptance criterion %d passed: %s" % (criterion, detail))
            else:
                logging.error("Acceptance criterion %d failed: %s" % (criterion, detail))
            rows.append([criterion, bool(passed), float(value), float(threshold), detail])
        self.table = rows

        self.output_store.write_csv(self.experiment_id, "acceptance", self.get_output("acceptance"),
                                    ACCEPTANCE_COLUMNS, rows)
        output_file = self.output_store.declare(self.experiment_id, "acceptance_json", self.get_output("acceptance_json"))
        with open(output_file.get_path(), "w") as fh:
            json.dump([OrderedDict(zip(ACCEPTANCE_COLUMNS, row)) for row in rows], fh, indent=4)
            fh.write("\n")

        self.summary["passed"] = [row[0] for row in rows if row[1]]
        self.summary["failed"] = [row[0] for row in rows if not row[1]]

    def all_passed(self):
        return all(row[1] for row in self.table)

    ############### Experiments reused by several criteria
    def sub_experiment(self, experiment_class, experiment_id, section, **overrides):
        experiment = experiment_class(experiment_id, self.run_config, self.output_store)
        experiment.load_arguments(self.run_config.section(section))
        for key, value in overrides.items():
            experiment.set_argument(key, value)
        experiment.run()
        self.timings.extend(experiment.get_timings())
        return experiment

    def rates(self):
        if self.__rates is None:
            records = int(self.get_argument("rate_records_per_n"))
            self.__rates = self.sub_experiment(Rates, "rates", "rates", records_per_n=records,
                                               zero_records_per_n=records)
        return self.__rates

    ############### Criteria
    def physics_sanity(self):
        params = self.params
        spec = self.comb
        _, _, _, sm = pauli_ops()
        dt = spec.sample_dt / self.substeps
        n_steps = int(math.ceil(SANITY_DURATION / dt))

        start = time.time()
        trace_rate, hermitian, lowest = 0.0, 0.0, math.inf
        for n in sorted(set([0, 1, params.N_max])):
            generator = LindbladGenerator(qubit_hamiltonian(params, spec, n, frame="if"), [(1 / params.T_q, sm)])
            propagators = step_propagators(generator, 0.0, dt, n_steps, self.integrator)
            rho = ground_states(1)[0]
            for step, propagator in enumerate(propagators):
                rho = (propagator @ rho.reshape(-1)).reshape(rho.shape)
                elapsed = (step + 1) * dt
                trace_rate = max(trace_rate, abs(np.trace(rho) - 1) / elapsed)
                hermitian = max(hermitian, float(np.max(np.abs(rho - rho.conj().T))))
                lowest = min(lowest, float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]))
        runtime = time.time() - start

        passed = (trace_rate < SANITY_TRACE_RATE and hermitian < SANITY_HERMITIAN and lowest >= SANITY_POSITIVITY
                  and runtime < SANITY_RUNTIME)
        detail = "trace drift %.3g/us, hermiticity %.3g, min eigenvalue %.3g, %.1f s" % (trace_rate, hermitian, lowest, runtime)
        return passed, trace_rate, SANITY_TRACE_RATE, detail

    def sme_consistency(self):
        n_traj = int(self.get_argument("sme_trajectories"))
        start = time.time()
        covered = []
        for theta_pi in [float(t) for t in self.get_argument("sme_thetas_pi")]:
            spec = self.comb_at(math.pi * theta_pi)
            for n in [0, 1]:
                mean, stderr = heterodyne_ensemble_mean(self.params, spec, n, n_traj, self.master_seed, self.workers,
                                                        substeps=self.substeps, integrator=self.integrator)
                exact = self.mean_records(spec, [n])[0].samples
                # Twice the real part estimates sqrt(eta/T_q)<sigma_x>; its error is sqrt(2) times the complex one
                deviation = np.abs(2 * mean.real - exact)
                covered.append(np.mean(deviation <= SME_SIGMAS * math.sqrt(2) * stderr))
                logging.debug("theta = %.3f pi, n = %d: %.4f of samples within %g standard errors" % (theta_pi, n, covered[-1], SME_SIGMAS))
        runtime = time.time() - start
        value = float(min(covered))
        detail = "worst coverage %.4f over %d angles, %d trajectories, %.0f s" % (value, len(covered) // 2, n_traj, runtime)
        return value >= SME_COVERED and runtime < SME_RUNTIME, value, SME_COVERED, detail

    def fluorescence_shape(self):
        params = self.params
        spec = self.comb
        per_period = spec.samples_per_period
        photon_numbers = list(range(min(4, params.N_max) + 1))
        records = self.mean_records(spec, photon_numbers)

        problems = []
        rates = []
        for n, record in zip(photon_numbers, records):
            I, _ = demodulate_quadratures(record, n, params, samples_per_period=per_period)
            periods = I[:len(I) // per_period * per_period].reshape(-1, per_period)
            peaks = np.argmax(np.abs(periods), axis=1)
            signs = np.sign(periods[np.arange(len(periods)), peaks])
            flips = float(np.mean(signs[1:] != signs[:-1]))
            if n % 2 == 1 and flips < ALTERNATING:
                problems.append("n=%d alternates in %.2f of periods" % (n, flips))
            if n % 2 == 0 and flips > STEADY:
                problems.append("n=%d flips in %.2f of periods" % (n, flips))
            rates.extend(self.__decay_rates(periods, peaks, spec.sample_dt))

        ratio = float(np.median(rates)) * 2 * params.T_q if rates else float("nan")
        if not abs(ratio - 1) <= DECAY_TOL:
            problems.append("decay rate is %.3f x 1/(2T_q)" % ratio)
        detail = "; ".join(problems) if problems else "decay rate %.3f x 1/(2T_q)" % ratio
        return not problems, ratio, 1.0, detail

    def __decay_rates(self, periods, peaks, dt):
        # Exponential decay of |I| after each kick, from two samples past the peak
        rates = []
        for values, peak in zip(periods, peaks):
            tail = np.abs(values[peak + 2:])
            keep = tail > 0.05 * abs(values[peak])
            if keep.sum() < 4 or not keep[:4].all():
                continue
            stop = int(np.argmin(keep)) if not keep.all() else len(keep)
            times = dt * np.arange(stop)
            slope = np.polyfit(times, np.log(tail[:stop]), 1)[0]
            rates.append(-slope)
        return rates

    def dephasing_bound(self):
        experiment = self.sub_experiment(Dephasing, "dephasing", "dephasing")
        rows = [row for row in experiment.get_table() if math.isfinite(row[3])]
        if not rows:
            return False, float("nan"), DEPHASING_TOL, "no dephasing fit succeeded"
        errors = [abs(row[3] - row[4]) / row[4] for row in rows if row[0] <= 0.5 and row[4] > 0]
        worst = max(errors) if errors else float("nan")
        peak = max(rows, key=lambda row: row[3])[0]
        thetas = sorted(row[0] for row in experiment.get_table())
        near_pi = peak >= thetas[-2] if len(thetas) > 1 else True
        detail = "worst deviation %.3f for theta <= pi/2, maximum at %.3f pi" % (worst, peak)
        return bool(errors) and worst <= DEPHASING_TOL and near_pi, worst, DEPHASING_TOL, detail

    def measurement_rate(self):
        rows = self.rates().get_table()
        peak = max(rows, key=lambda row: row[1])
        errors = [abs(row[1] - row[5]) / row[5] for row in rows if row[0] <= 0.5 and row[5] > 0]
        worst = max(errors) if errors else float("nan")
        gamma_T_c = peak[1] * self.params.T_c
        problems = []
        if not 0.375 <= peak[0] <= 0.625:
            problems.append("peak at %.3f pi" % peak[0])
        if not worst <= RATE_TOL:
            problems.append("deviation from the heterodyne bound %.3f" % worst)
        if gamma_T_c < RATE_T_C:
            problems.append("Gamma_m T_c = %.2f" % gamma_T_c)
        detail = "; ".join(problems) if problems else "peak %.3f pi, Gamma_m T_c = %.2f, deviation %.3f" % (peak[0], gamma_T_c, worst)
        return not problems, worst, RATE_TOL, detail

    def information_ordering(self):
        rows = self.rates().get_table()
        violations = []
        ratios = []
        for row in rows:
            theta_pi, het, het_err, ideal, ideal_err, bound, i_acc = row[0], row[5], row[6], row[7], row[8], row[9], row[10]
            if i_acc < ideal - RATE_ORDER_SIGMAS * ideal_err:
                violations.append("I_acc < het(1) at %.3f pi" % theta_pi)
            if ideal < het - RATE_ORDER_SIGMAS * math.hypot(het_err, ideal_err):
                violations.append("het(1) < het(eta) at %.3f pi" % theta_pi)
            if bound < ideal - RATE_ORDER_SIGMAS * ideal_err:
                violations.append("Gamma_d bound < het(1) at %.3f pi" % theta_pi)
            if ideal > 0:
                ratios.append(i_acc / ideal)
        worst_ratio = max(ratios) if ratios else float("nan")
        if not worst_ratio >= INFORMATION_RATIO:
            violations.append("largest I_acc / het(1) ratio %.3f" % worst_ratio)
        detail = "; ".join(violations) if violations else "ordering holds, largest I_acc / het(1) ratio %.3f" % worst_ratio
        return not violations, worst_ratio, INFORMATION_RATIO, detail

    def jump_tracking(self):
        experiment = self.sub_experiment(JumpTrack, "jump-track", "jump_track",
                                         n_records=int(self.get_argument("jump_records")))
        summary = experiment.get_summary()
        accuracy = summary["staircase_accuracy"]
        localization = summary["jump_localization"] if summary["jump_localization"] is not None else 1.0
        passed = accuracy is not None and accuracy >= TRACKING_ACCURACY and localization >= TRACKING_ACCURACY
        detail = "staircase accuracy %s, jumps localized %.3f of %d" % (accuracy, localization, summary["true_jumps"])
        return passed, accuracy if accuracy is not None else float("nan"), TRACKING_ACCURACY, detail

    def confidence_time(self):
        section = self.run_config.section("confidence_time")
        levels = sorted(set([float(level) for level in section["levels"]] + [CONFIDENCE_LEVEL]))
        experiment = self.sub_experiment(ConfidenceTime, "confidence-time", "confidence_time",
                                         n_records=int(self.get_argument("confidence_records")), levels=levels)
        rows = [row for row in experiment.get_table() if row["level"] == CONFIDENCE_LEVEL]
        means = np.array([row["group"] for row in rows])
        times = np.array([row["mean"] for row in rows])
        median = times[len(times) // 2]
        correlation = scipy.stats.spearmanr(means, times)[0] if len(rows) > 2 else float("nan")
        passed = (CONFIDENCE_RANGE[0] <= median <= CONFIDENCE_RANGE[1] and correlation > CONFIDENCE_CORRELATION)
        detail = "tau(%.2f) = %.2f us for initial mean %.3g, rank correlation %.3f" % (CONFIDENCE_LEVEL, median, means[len(means) // 2], correlation)
        return passed, median, CONFIDENCE_RANGE[1], detail

    def oracles(self):
        errors = OrderedDict()

        overlaps = np.linspace(0.05, 0.95, 10)
        errors["accessible"] = (max(abs(accessible_information(s) - brute_force_accessible_information(s))
                                    for s in overlaps), ACCESSIBLE_TOL)
        errors["mixture_entropy"] = (self.__entropy_oracle(), ENTROPY_TOL)
        errors["decay_prior"] = (self.__decay_oracle(), DECAY_PRIOR_TOL)
        errors["noise_covariance"] = (self.__covariance_oracle(), COVARIANCE_TOL)

        worst = max(error / tol for error, tol in errors.values())
        detail = ", ".join("%s %.3g (< %g)" % (name, error, tol) for name, (error, tol) in errors.items())
        return worst < 1.0, worst, 1.0, detail

    def __entropy_oracle(self):
        # Two unit variance Gaussians at -1/2 and 1/2 against one dimensional quadrature
        centers = [-0.5, 0.5]
        models = [scipy.stats.norm(center, 1.0) for center in centers]
        samplers = [lambda rng, size, c=center: rng.normal(c, 1.0, size) for center in centers]
        rng = trajectory_generator(self.master_seed, 0, THEORY_STREAM)
        estimate = mutual_information_monte_carlo(samplers, [model.logpdf for model in models], [0.5, 0.5],
                                                  n_samples=int(self.get_argument("oracle_samples")), rng=rng)

        def mixture_entropy_density(x):
            p = 0.5 * (models[0].pdf(x) + models[1].pdf(x))
            return -p * math.log(p) if p > 0 else 0.0

        mixture_entropy = scipy.integrate.quad(mixture_entropy_density, -15, 15, epsabs=1e-12, limit=200)[0]
        exact = mixture_entropy - 0.5 * math.log(2 * math.pi * math.e)
        logging.debug("Mixture mutual information: Monte Carlo %r, quadrature %.8f" % (estimate, exact))
        return abs(estimate.value - exact)

    def __decay_oracle(self):
        # Binomial thinning of every photon number with survival exp(-dt/T_c)
        P = poisson_populations(3.0, self.params.N_max)
        n = np.arange(len(P))
        worst = 0.0
        for dt in [self.comb.duration, 10.0, 100.0]:
            survival = math.exp(-dt / self.params.T_c)
            oracle = np.array([np.sum(P * scipy.stats.binom.pmf(k, n, survival)) for k in n])
            worst = max(worst, float(np.max(np.abs(decay_prior_step(P, dt, self.params.T_c) - oracle))))
        return worst

    def __covariance_oracle(self):
        # Matched filter outcomes of white noise have covariance G
        spec = self.comb
        templates = np.array([record.samples for record in self.mean_records(spec, list(self.params.photon_numbers))])
        gram = spec.sample_dt * templates @ templates.T
        rng = trajectory_generator(self.master_seed, 1, THEORY_STREAM)
        windows = int(self.get_argument("noise_windows"))
        scatter = np.zeros_like(gram)
        for start in range(0, windows, NOISE_CHUNK):
            size = min(NOISE_CHUNK, windows - start)
            m = math.sqrt(spec.sample_dt) * rng.standard_normal((size, templates.shape[1])) @ templates.T
            scatter += m.T @ m
        covariance = scatter / windows
        return float(np.linalg.norm(covariance - gram) / np.linalg.norm(gram))

    def determinism(self):
        digests = OrderedDict()
        n_traj = int(self.get_argument("determinism_trajectories"))
        populations = poisson_populations(2.0, self.params.N_max)
        for workers in [int(w) for w in self.get_argument("determinism_workers")]:
            records = simulate_ensemble(self.params, self.comb, 1, n_traj, self.master_seed, workers,
                                        substeps=self.substeps, integrator=self.integrator)
            jumps = simulate_jump_ensemble(self.params, self.comb, populations, self.comb.duration, n_traj,
                                           self.master_seed, workers, substeps=self.substeps,
                                           integrator=self.integrator)
            rows = [[index, j, value] for index, samples in enumerate(records.samples) for j, value in enumerate(samples)]
            rows += [[index, j, value] for index, record in enumerate(jumps.records) for j, value in enumerate(record.samples)]
            text = csv_text(["record", "sample", "value"], rows)
            digests[workers] = hashlib.sha256(text.encode("utf-8")).hexdigest()
            logging.debug("%d workers: outputs hash to %s" % (workers, digests[workers]))
        distinct = len(set(digests.values()))
        detail = "workers %s give %d distinct output hashes" % (",".join(str(w) for w in digests), distinct)
        return distinct == 1, distinct, 1, detail
