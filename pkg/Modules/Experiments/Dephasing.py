import math
import logging

from Modules.Experiment import Experiment
from Analysis.Theory import simulate_dephasing_series, dephasing_extraction, dephasing_rate_bound, FitError

DEPHASING_COLUMNS = ["theta_pi", "gamma", "kappa", "gamma_d", "gamma_d_bound", "r2_coherence", "r2_photons", "flagged"]


class Dephasing(Experiment):
    # Measurement induced dephasing of a coherent cavity state under the comb

    def define_input(self):
        self.add_argument("thetas_pi", is_required=True)
        self.add_argument("alpha0", is_required=True)
        self.add_argument("periods", is_required=True)
        self.add_argument("use_wigner", default_value=True)
        self.add_argument("wigner_step", default_value=0.1)
        self.add_argument("steps_per_period", default_value=84)

    def define_output(self):
        self.add_output("dephasing", "dephasing.csv")

    def execute(self):
        rows = []
        for theta_pi in [float(t) for t in self.get_argument("thetas_pi")]:
            rows.append(self.stage("dephasing_%.4g" % theta_pi, self.dephasing_row, theta_pi))
        self.table = rows
        self.output_store.write_csv(self.experiment_id, "dephasing", self.get_output("dephasing"),
                                    DEPHASING_COLUMNS, rows)
        self.summary["flagged"] = [row[0] for row in rows if row[-1]]

    def dephasing_row(self, theta_pi):
        theta = math.pi * theta_pi
        spec = self.comb_at(theta)
        bound = dephasing_rate_bound(theta, self.params)
        times, states = simulate_dephasing_series(self.params, spec, float(self.get_argument("alpha0")),
                                                  int(self.get_argument("periods")),
                                                  steps_per_period=int(self.get_argument("steps_per_period")),
                                                  integrator=self.integrator)
        try:
            result = dephasing_extraction(times, states, self.params, theta, bool(self.get_argument("use_wigner")),
                                          float(self.get_argument("wigner_step")))
        except FitError as e:
            logging.warning("Dephasing fit failed at theta = %.4f pi: %s" % (theta_pi, e))
            nan = float("nan")
            return [theta_pi, nan, nan, nan, bound, nan, nan, True]
        return [theta_pi, result.gamma, result.kappa, result.gamma_d, bound, result.r2_coherence,
                result.r2_photons, result.flagged]
