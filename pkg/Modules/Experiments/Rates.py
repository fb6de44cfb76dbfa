import math
import logging

import numpy as np

from Modules.Experiment import Experiment
from Analysis.Signal import build_template_bank
from Analysis.Estimation import empirical_measurement_rate
from Analysis.Theory import heterodyne_rate_bound, dephasing_rate_bound, accessible_information_rate

RATE_COLUMNS = ["theta_pi", "gamma_m", "gamma_m_stderr", "bias", "flagged", "gamma_het", "gamma_het_stderr",
                "gamma_het_eta1", "gamma_het_eta1_stderr", "gamma_d_bound", "i_acc_rate"]


class Rates(Experiment):
    """
    Measurement rate versus kick angle.

    For every angle, records of all photon numbers give a template bank whose
    Gaussian outcome models yield the empirical rate; records taken with the drive
    off calibrate the estimation bias. Theoretical rates are computed alongside.
    """

    def define_input(self):
        self.add_argument("thetas_pi", is_required=True)
        self.add_argument("records_per_n", is_required=True)
        self.add_argument("zero_records_per_n", is_required=True)
        self.add_argument("theory_samples", default_value=20000)

    def define_output(self):
        self.add_output("rates", "rates.csv")

    def execute(self):
        rows = self.stage("rate_sweep", self.sweep, [float(t) for t in self.get_argument("thetas_pi")])
        self.table = rows
        self.output_store.write_csv(self.experiment_id, "rates", self.get_output("rates"), RATE_COLUMNS, rows)

        gamma_m = np.array([row[1] for row in rows])
        peak = int(np.argmax(gamma_m))
        self.summary["peak_theta_pi"] = rows[peak][0]
        self.summary["peak_gamma_m"] = rows[peak][1]
        self.summary["peak_gamma_m_T_c"] = rows[peak][1] * self.params.T_c

    def sweep(self, thetas_pi):
        records = int(self.get_argument("records_per_n"))
        zero_records = int(self.get_argument("zero_records_per_n"))
        photon_numbers = list(self.params.photon_numbers)
        offset = len(photon_numbers) * records

        # The drive-off bank does not depend on the angle
        zero_spec = self.comb_at(0.0)
        zero_sets = self.record_sets(zero_spec, photon_numbers, zero_records, first_index=offset)
        zero_bank = build_template_bank(zero_sets, zero_spec.sample_dt, zero_spec.duration, True, None,
                                        zero_spec.period, self.params.params_hash())

        rows = []
        for theta_pi in thetas_pi:
            rows.append(self.rate_row(theta_pi, records, zero_bank))
        return rows

    def rate_row(self, theta_pi, records, zero_bank):
        theta = math.pi * theta_pi
        samples = int(self.get_argument("theory_samples"))
        spec = self.comb_at(theta)
        logging.info("Measurement rate at theta = %.4f pi" % theta_pi)

        sets = self.record_sets(spec, list(self.params.photon_numbers), records)
        bank = build_template_bank(sets, spec.sample_dt, spec.duration, True, None, spec.period,
                                   self.params.params_hash())
        estimate = empirical_measurement_rate(bank, zero_bank, self.params, theta, spec.n_periods, samples,
                                              self.master_seed)
        heterodyne = heterodyne_rate_bound(theta, self.params.eta, self.params, samples, self.master_seed)
        ideal = heterodyne_rate_bound(theta, 1.0, self.params, samples, self.master_seed)
        return [theta_pi, estimate.gamma_m, estimate.stderr, estimate.bias, estimate.flagged,
                heterodyne.value, heterodyne.stderr, ideal.value, ideal.stderr,
                dephasing_rate_bound(theta, self.params), accessible_information_rate(theta, self.params)]
