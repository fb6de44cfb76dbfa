import os
import logging

import numpy as np

from Modules.Experiment import Experiment
from Physics.Trajectories import poisson_populations, simulate_jump_ensemble
from Analysis.Signal import outcome_stream, normalized_outcomes
from Analysis.Estimation import bayes_track, staircase_accuracy, jump_localization, detected_jumps


def window_truth(photon_numbers, times, t0, dt):
    # Simulated photon number in the last sample of every window
    ends = np.rint((np.asarray(times) - t0) / dt).astype(int) - 1
    return np.asarray(photon_numbers)[ends]


class JumpTrack(Experiment):
    # Bayesian tracking of photon loss on long synthetic records

    def define_input(self):
        self.add_argument("initial_mean", is_required=True)
        self.add_argument("duration_us", is_required=True)
        self.add_argument("n_records", is_required=True)
        self.add_argument("bank_records_per_n", is_required=True)
        self.add_argument("track_stride_periods", default_value=21)
        self.add_argument("dissipation", default_value=True)

    def define_output(self):
        self.add_output("jump_records", "jump_records.csv")
        self.add_output("posterior", "posterior.csv")
        self.add_output("jumps", "jumps.csv")
        self.add_output("template_bank", "template_bank")

    def execute(self):
        spec = self.comb
        populations = poisson_populations(float(self.get_argument("initial_mean")), self.params.N_max)
        dissipation = bool(self.get_argument("dissipation"))

        bank = self.stage("template_bank", self.analytic_bank, spec, int(self.get_argument("bank_records_per_n")))
        ensemble = self.stage("simulate_jumps", simulate_jump_ensemble, self.params, spec, populations,
                              float(self.get_argument("duration_us")), int(self.get_argument("n_records")),
                              self.master_seed, self.workers, substeps=self.substeps, dissipation=dissipation,
                              integrator=self.integrator)

        stride = self.stride_samples(spec, self.get_argument("track_stride_periods"))
        tracked = self.stage("track", self.track, ensemble, bank, populations, stride, dissipation)
        self.write_outputs(ensemble, tracked, bank)

    def track(self, ensemble, bank, populations, stride, dissipation):
        skip = self.window_skip(bank, stride)
        results = []
        for index, record in enumerate(ensemble.records):
            outcomes, times = outcome_stream(record, bank, stride)
            posterior = bayes_track(record, bank, self.params, P0=populations, stride=stride, dissipation=dissipation)
            truth = window_truth(ensemble.photon_numbers[index], times, record.t0, record.dt)
            accuracy = staircase_accuracy(posterior, truth, skip)
            localized, matched = jump_localization(posterior.map_path, ensemble.jumps[index], times, 2 * bank.tau)
            logging.debug("Record %d: staircase accuracy %.3f, jumps localized %.3f" % (index, accuracy, localized))
            results.append((normalized_outcomes(outcomes, bank), posterior, truth, accuracy, matched))
        return results

    def write_outputs(self, ensemble, tracked, bank):
        size = len(bank.n_values)
        r_rows, posterior_rows, jump_rows = [], [], []
        for index, (r_values, posterior, truth, _, _) in enumerate(tracked):
            for j, t in enumerate(posterior.times):
                r_rows.append([index, float(t)] + [float(v) for v in r_values[j]])
                posterior_rows.append([index, float(t)] + [float(p) for p in posterior.P[j]] +
                                      [int(posterior.map_path[j]), int(truth[j])])
            for t_jump, n_after in ensemble.jumps[index]:
                jump_rows.append([index, "true", float(t_jump), n_after + 1, n_after])
            for t_step, before, after in detected_jumps(posterior.map_path, posterior.times):
                jump_rows.append([index, "detected", float(t_step), before, after])

        store = self.output_store
        store.write_csv(self.experiment_id, "jump_records", self.get_output("jump_records"),
                        ["record", "t_us"] + ["r%d" % n for n in range(size)], r_rows)
        store.write_csv(self.experiment_id, "posterior", self.get_output("posterior"),
                        ["record", "t_us"] + ["P%d" % n for n in range(size)] + ["map", "truth"], posterior_rows)
        store.write_csv(self.experiment_id, "jumps", self.get_output("jumps"),
                        ["record", "kind", "t_us", "n_before", "n_after"], jump_rows)

        prefix = self.get_output("template_bank")
        store.declare(self.experiment_id, "template_bank", prefix + ".npz")
        store.declare(self.experiment_id, "template_bank_header", prefix + ".json")
        bank.save(os.path.join(store.output_dir, prefix))

        accuracies = [item[3] for item in tracked]
        matched = [hit for item in tracked for hit in item[4]]
        self.summary["staircase_accuracy"] = float(np.nanmean(accuracies)) if accuracies else None
        self.summary["jump_localization"] = float(np.mean(matched)) if matched else None
        self.summary["true_jumps"] = int(sum(len(jumps) for jumps in ensemble.jumps))
        self.summary["wide_uncertainty"] = bank.wide_uncertainty
