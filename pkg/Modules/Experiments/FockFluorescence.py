import os
import logging

import numpy as np

from Modules.Experiment import Experiment
from Physics.Trajectories import sampled_comb_reference
from Analysis.Signal import build_template_bank, demodulate_quadratures, demodulated_coherence, demodulation_phase
from Analysis.Signal import normalized_outcomes, demodulation_relevance, r_distribution
from Analysis.Estimation import fock_preselection


class FockFluorescence(Experiment):
    """
    Fluorescence of the qubit for cavities prepared in Fock states.

    Every prepared photon number gets an ensemble of records; the mean record is
    demodulated at the frequency of the qubit dressed by that photon number. In
    heralded mode only records whose normalized outcome points at the prepared
    number enter the mean.
    """

    def define_input(self):
        self.add_argument("photon_numbers", is_required=True)
        self.add_argument("records_per_n", is_required=True)
        self.add_argument("heralded", default_value=False)
        self.add_argument("herald_threshold", default_value=0.5)
        self.add_argument("histogram_bins", default_value=60)

    def define_output(self):
        self.add_output("fluorescence", "fock_fluorescence.csv")
        self.add_output("r_distribution", "r_distribution.csv")
        self.add_output("template_bank", "template_bank")

    def execute(self):
        photon_numbers = [int(n) for n in self.get_argument("photon_numbers")]
        records_per_n = int(self.get_argument("records_per_n"))
        spec = self.comb

        sets = self.stage("simulate_records", self.record_sets, spec, photon_numbers, records_per_n,
                          0, self.run_config.add_comb)
        theory = self.stage("mean_records", self.mean_records, spec, photon_numbers)
        bank = self.stage("template_bank", build_template_bank, sets, spec.sample_dt, spec.duration, True,
                          None, spec.period, self.params.params_hash())

        kept = [np.ones(len(records), dtype=bool) for records in sets]
        if self.get_argument("heralded"):
            threshold = float(self.get_argument("herald_threshold"))
            for position, records in enumerate(sets):
                r_values = normalized_outcomes(spec.sample_dt * records.samples @ bank.templates.T, bank)
                kept[position] = fock_preselection(r_values, position, threshold)
                logging.info("Heralding keeps %d of %d records for n = %d" % (kept[position].sum(), len(records), photon_numbers[position]))

        rows = self.stage("demodulate", self.__fluorescence_rows, photon_numbers, sets, theory, kept)
        self.output_store.write_csv(self.experiment_id, "fluorescence", self.get_output("fluorescence"),
                                    ["n", "t_us", "mean_voltage", "I", "Q", "I_theory", "records_used"], rows)

        k = len(photon_numbers) - 1
        edges, densities = r_distribution(sets, bank, k, int(self.get_argument("histogram_bins")))
        histogram = []
        for position, n in enumerate(photon_numbers):
            for left, right, density in zip(edges[:-1], edges[1:], densities[position]):
                histogram.append([n, photon_numbers[k], float(left), float(right), float(density)])
        self.output_store.write_csv(self.experiment_id, "r_distribution", self.get_output("r_distribution"),
                                    ["n", "k", "bin_left", "bin_right", "density"], histogram)

        prefix = self.get_output("template_bank")
        self.output_store.declare(self.experiment_id, "template_bank", prefix + ".npz")
        self.output_store.declare(self.experiment_id, "template_bank_header", prefix + ".json")
        bank.save(os.path.join(self.output_store.output_dir, prefix))

        self.summary["demodulation_relevance"] = demodulation_relevance(sets, bank, self.params)
        self.summary["records_used"] = dict((str(n), int(mask.sum())) for n, mask in zip(photon_numbers, kept))

    def __fluorescence_rows(self, photon_numbers, sets, theory, kept):
        spec = self.comb
        reference = None
        if self.run_config.add_comb:
            reference = sampled_comb_reference(self.params, spec, sets[0].n_samples, self.substeps)

        rows = []
        for n, records, mean_record, mask in zip(photon_numbers, sets, theory, kept):
            if not mask.any():
                logging.warning("No record left for n = %d after heralding" % n)
                continue
            mean = records.samples[mask].mean(axis=0)
            # One phase per photon number, fixed by the exact mean record
            phase = demodulation_phase(demodulated_coherence(mean_record, n, self.params), spec.samples_per_period)
            I, Q = demodulate_quadratures(mean, n, self.params, phase, spec.sample_dt, reference=reference)
            I_theory, _ = demodulate_quadratures(mean_record, n, self.params, phase)
            times = spec.sample_dt * np.arange(len(mean))
            for j in range(len(mean)):
                rows.append([n, float(times[j]), float(mean[j]), float(I[j]), float(Q[j]), float(I_theory[j]), int(mask.sum())])
        return rows
