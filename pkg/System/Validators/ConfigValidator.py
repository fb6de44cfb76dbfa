import os
import math

from .Validator import Validator
from Physics.Drive import is_multiple
from Analysis.Signal import check_sampling, AliasingError

# Integration steps per kick width below which the comb kicks are under-resolved
MIN_STEPS_PER_KICK = 10

# Experiments that cut long records into windows
WINDOWED_SECTIONS = {"jump-track": "jump_track", "confidence-time": "confidence_time"}


class ConfigValidator(Validator):
    # Checks a validated run config against the numerics it will drive

    def __init__(self, run_config, output_store, acceptance=False):
        super(ConfigValidator, self).__init__()
        self.run_config     = run_config
        self.output_store   = output_store
        self.acceptance     = acceptance

    def run_checks(self):
        self.__check_output_dir()
        self.__check_sampling()
        self.__check_comb()
        if self.run_config.experiment in WINDOWED_SECTIONS and not self.acceptance:
            self.__check_windows(self.run_config.section(WINDOWED_SECTIONS[self.run_config.experiment]))
        cpus = os.cpu_count() or 1
        if self.run_config.workers > cpus:
            self.report_warning("%d workers requested on %d cpus" % (self.run_config.workers, cpus))

    def __check_output_dir(self):
        try:
            self.output_store.prepare()
        except IOError as e:
            self.report_error("Output directory %s is unusable: %s" % (self.output_store.output_dir, e))

    def __check_sampling(self):
        try:
            check_sampling(self.run_config.params, self.run_config.comb.sample_dt)
        except AliasingError:
            self.report_error("samples_per_period = %d aliases the qubit line of n = N_max"
                              % self.run_config.comb.samples_per_period)

    def __check_comb(self):
        params = self.run_config.params
        comb = self.run_config.comb
        spacing = self.run_config.section("comb")["spacing_chi"]
        if abs(spacing - 2.0) > 1e-12:
            self.report_warning("Comb spacing of %s chi: kick signs no longer alternate with photon number parity" % spacing)

        kick_width = comb.period / comb.n_teeth
        dt = comb.sample_dt / self.run_config.substeps
        if dt > kick_width / MIN_STEPS_PER_KICK:
            self.report_warning("Integration step %.3g us resolves the %.3g us kicks with fewer than %d steps"
                                % (dt, kick_width, MIN_STEPS_PER_KICK))

        cycles = params.omega_IF * comb.duration / (2 * math.pi)
        if abs(cycles - round(cycles)) > 1e-6:
            self.report_warning("The IF carrier completes %.4f cycles per window; templates are not window periodic" % cycles)

    def __check_windows(self, section):
        params = self.run_config.params
        comb = self.run_config.comb
        duration = float(section["duration_us"])
        if not is_multiple(duration, comb.period):
            self.report_error("duration_us = %s is not a whole number of comb periods (%.6g us)" % (duration, comb.period))
        if duration < comb.duration:
            self.report_error("duration_us = %s is shorter than one window of %.6g us" % (duration, comb.duration))

        stride = int(section["track_stride_periods"]) * comb.period
        cycles = params.omega_IF * stride / (2 * math.pi)
        if abs(cycles - round(cycles)) > 1e-6:
            self.report_warning("Windows every %d periods start at different IF phases; templates will not match"
                                % int(section["track_stride_periods"]))
