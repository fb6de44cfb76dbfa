import abc
import math
import time
import logging
from collections import OrderedDict

import numpy as np

from Physics.Drive import CombSpec
from Physics.Trajectories import simulate_ensemble, ensemble_mean_record
from Analysis.Signal import build_template_bank


class Experiment(object, metaclass=abc.ABCMeta):
    def __init__(self, experiment_id, run_config, output_store):

        # Initialize the experiment ID (the experiment name of the run config)
        self.experiment_id = experiment_id

        # Validated run configuration and the physics it describes
        self.run_config     = run_config
        self.params         = run_config.params
        self.comb           = run_config.comb
        self.master_seed    = run_config.master_seed
        self.workers        = run_config.workers
        self.integrator     = run_config.integrator
        self.substeps       = run_config.substeps

        # Directory where outputs are declared and written
        self.output_store = output_store

        # Initialize the input arguments
        self.arguments = OrderedDict()
        self.define_input()

        # Initialize the output files
        self.output = OrderedDict()

        # Per-stage timings and scalar results for the manifest
        self.timings = []
        self.summary = OrderedDict()

        # Rows of the main output table
        self.table = []

    @abc.abstractmethod
    def define_input(self):
        pass

    @abc.abstractmethod
    def define_output(self):
        pass

    @abc.abstractmethod
    def execute(self):
        pass

    def add_argument(self, key, is_required=False, default_value=None):

        # Check if the argument key is present or not
        if key in self.arguments:
            logging.warning("In experiment %s, the input argument '%s' is already defined! "
                            "We will overwrite its information with the new information." % (self.experiment_id, key))
            old_value = self.arguments[key].get_value()
            self.arguments[key] = Argument(key, is_required=is_required, default_value=default_value)
            self.arguments[key].set(old_value)
        else:
            self.arguments[key] = Argument(key, is_required=is_required, default_value=default_value)

    def load_arguments(self, section):
        # Set every declared argument present in a config section
        for key in self.arguments:
            if key in section:
                self.arguments[key].set(section[key])

    def add_output(self, key, filename):
        if key in self.output:
            logging.error("In experiment %s, the output key '%s' is defined multiple time!" % (self.experiment_id, key))
            raise RuntimeError("Output key '%s' has been defined multiple times!" % key)
        self.output[key] = filename

    def run(self):

        # Check that all required inputs are set
        err = False
        for arg_type, arg in self.arguments.items():

            # Set argument to default value if it hasn't been set
            if not arg.is_set():
                arg.set(arg.get_default_value())

            # Throw error if mandatory argument hasn't been set at runtime
            if not arg.is_set() and arg.is_mandatory():
                logging.error("Experiment of type %s with id %s missing required input type: %s" % (self.__class__.__name__, self.experiment_id, arg_type))
                err = True
        if err:
            raise RuntimeError("Experiment could not run! Required inputs missing at runtime!")

        # Define the names of output files
        self.define_output()

        # Run the stages
        self.execute()
        return self.summary

    def stage(self, name, function, *args, **kwargs):
        # Run one stage and record its runtime
        logging.info("Experiment %s: starting stage '%s'" % (self.experiment_id, name))
        start = time.time()
        result = function(*args, **kwargs)
        runtime = time.time() - start
        self.timings.append({"stage": name, "start_time": start, "runtime(sec)": runtime})
        logging.info("Experiment %s: stage '%s' finished in %.1f s" % (self.experiment_id, name, runtime))
        return result

    ############### Shared simulation steps
    def comb_at(self, theta):
        # Comb of the run config with another kick angle
        section = self.run_config.section("comb")
        return CombSpec.from_kick_angle(theta, self.params,
                                        K=int(section["teeth_k"]),
                                        spacing=float(section["spacing_chi"]),
                                        center=float(section["center_chi"]),
                                        n_periods=int(section["n_periods"]),
                                        samples_per_period=int(section["samples_per_period"]))

    def record_sets(self, spec, photon_numbers, records_per_n, first_index=0, add_comb=False):
        # Disjoint trajectory indices per photon number keep the noise of different sets independent
        sets = []
        for position, n in enumerate(photon_numbers):
            logging.info("Simulating %d records with n = %d" % (records_per_n, n))
            sets.append(simulate_ensemble(self.params, spec, n, records_per_n, self.master_seed, self.workers,
                                          substeps=self.substeps, add_comb=add_comb, integrator=self.integrator,
                                          first_index=first_index + position * records_per_n))
        return sets

    def mean_records(self, spec, photon_numbers):
        return [ensemble_mean_record(self.params, spec, n, substeps=self.substeps, integrator=self.integrator)
                for n in photon_numbers]

    def analytic_bank(self, spec, records_per_n, first_index=0):
        # Exact mean records as templates, covariances from simulated records
        photon_numbers = list(self.params.photon_numbers)
        templates = np.array([record.samples for record in self.mean_records(spec, photon_numbers)])
        sets = self.record_sets(spec, photon_numbers, records_per_n, first_index)
        return build_template_bank(sets, spec.sample_dt, spec.duration, True, templates, spec.period,
                                   self.params.params_hash())

    def stride_samples(self, spec, stride_periods):
        return int(stride_periods) * spec.samples_per_period

    def window_skip(self, bank, stride_samples, windows=3):
        # Number of stride steps covering the given number of windows
        return int(math.ceil(windows * bank.window_samples / float(stride_samples)))

    ############### Getters and setters
    def get_ID(self):
        return self.experiment_id

    def set_argument(self, key, value):
        if key not in self.arguments:
            logging.error("Attempt to set undeclared input '%s' for experiment with id '%s' of type %s!" % (key,
                                                                                                            self.experiment_id,
                                                                                                            self.__class__.__name__))
            raise RuntimeError("Attempt to set undeclared input type for experiment!")
        self.arguments[key].set(value)

    def get_argument(self, key):
        if key not in self.arguments:
            logging.error("Attempt to get undeclared input '%s' for experiment with id '%s' of type %s!" % (key,
                                                                                                            self.experiment_id,
                                                                                                            self.__class__.__name__))
            raise RuntimeError("Attempt to get undeclared input type for experiment!")
        return self.arguments[key].get_value()

    def get_output(self, key=None):
        if key is None:
            return self.output
        return self.output[key]

    def get_timings(self):
        return self.timings

    def get_summary(self):
        return self.summary

    def get_table(self):
        return self.table


class Argument(object):
    # Class for holding data and metadata for experiment input arguments
    def __init__(self, name, is_required=False, default_value=None):

        self.__name = name

        self.__is_required = is_required

        self.__default_value = default_value

        self.__value = None

    def set(self, value):
        self.__value = value

    def get_name(self):
        return self.__name

    def get_default_value(self):
        return self.__default_value

    def get_value(self):
        return self.__value

    def is_set(self):
        return self.__value is not None

    def is_mandatory(self):
        return self.__is_required
