import logging
from collections import OrderedDict

from Modules.Experiment import Experiment
from Physics.Trajectories import poisson_populations, simulate_jump_ensemble
from Analysis.Signal import outcome_stream
from Analysis.Estimation import confidence_time

CONFIDENCE_COLUMNS = ["initial_mean", "level", "mean_us", "stderr_us", "reached", "censored"]


class ConfidenceTime(Experiment):
    # Time for the photon number posterior to reach given confidence levels, per initial mean photon number

    def define_input(self):
        self.add_argument("initial_means", is_required=True)
        self.add_argument("levels", is_required=True)
        self.add_argument("duration_us", is_required=True)
        self.add_argument("n_records", is_required=True)
        self.add_argument("bank_records_per_n", is_required=True)
        self.add_argument("track_stride_periods", default_value=21)

    def define_output(self):
        self.add_output("confidence_time", "confidence_time.csv")

    def execute(self):
        spec = self.comb
        bank = self.stage("template_bank", self.analytic_bank, spec, int(self.get_argument("bank_records_per_n")))
        groups = self.stage("simulate_groups", self.outcome_groups, bank)
        rows = self.stage("first_passage", confidence_time, groups, bank, [float(x) for x in self.get_argument("levels")])
        self.table = rows

        self.output_store.write_csv(self.experiment_id, "confidence_time", self.get_output("confidence_time"),
                                    CONFIDENCE_COLUMNS,
                                    [[row["group"], row["level"], row["mean"], row["stderr"], row["reached"],
                                      row["censored"]] for row in rows])
        self.summary["censored"] = int(sum(row["censored"] for row in rows))

    def outcome_groups(self, bank):
        # Outcome streams of every record, grouped by initial mean photon number
        spec = self.comb
        stride = self.stride_samples(spec, self.get_argument("track_stride_periods"))
        groups = OrderedDict()
        for mean in [float(m) for m in self.get_argument("initial_means")]:
            logging.info("Simulating %s records with initial mean photon number %.3g" % (self.get_argument("n_records"), mean))
            ensemble = simulate_jump_ensemble(self.params, spec, poisson_populations(mean, self.params.N_max),
                                              float(self.get_argument("duration_us")),
                                              int(self.get_argument("n_records")), self.master_seed, self.workers,
                                              substeps=self.substeps, integrator=self.integrator)
            groups[mean] = [outcome_stream(record, bank, stride) for record in ensemble.records]
        return groups
