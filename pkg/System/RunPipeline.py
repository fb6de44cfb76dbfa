import os
import time
import logging
import importlib

from System.RunConfig import load_run_config, EXPERIMENT_SECTIONS
from System.RunManifest import RunManifest, run_id_for, MANIFEST_FILE
from System.Datastore import OutputStore
from System.Validators import ConfigValidator

# Output of the resolved config, written before any experiment stage
RESOLVED_CONFIG = "config.config"

ACCEPTANCE = "acceptance"


def experiment_class(name):
    # Experiment classes live in Modules.Experiments under their CamelCase name
    if name == ACCEPTANCE:
        module = importlib.import_module("System.Acceptance")
        return module.__dict__["Acceptance"]
    if name not in EXPERIMENT_SECTIONS:
        logging.error("Unknown experiment '%s'. Available experiments: %s" % (name, ", ".join(sorted(EXPERIMENT_SECTIONS))))
        raise ValueError("Unknown experiment '%s'!" % name)
    class_name = "".join(part.capitalize() for part in name.split("-"))
    module = importlib.import_module("Modules.Experiments.%s" % class_name)
    return module.__dict__[class_name]


class RunPipeline(object):

    def __init__(self, config_file=None, preset=None, seed=None, workers=None, acceptance=False, environ=None):

        # Config layers given on the command line
        self.__config_file  = config_file
        self.__preset       = preset
        self.__seed         = seed
        self.__workers      = workers
        self.__environ      = environ

        # Run the acceptance criteria instead of the configured experiment
        self.acceptance     = acceptance

        self.run_config     = None
        self.output_store   = None
        self.experiment     = None
        self.run_id         = None

        self.start_time     = None
        self.end_time       = None

    @property
    def experiment_name(self):
        if self.acceptance:
            return ACCEPTANCE
        return self.run_config.experiment if self.run_config is not None else None

    def load(self):
        # Load and validate every config layer; raises ConfigValidationError
        self.run_config = load_run_config(self.__config_file, self.__preset, self.__seed, self.__workers,
                                          self.__environ)
        self.run_id = run_id_for(self.experiment_name, self.run_config.config_hash())
        self.output_store = OutputStore(self.run_config.output_dir)

    def validate(self):

        # Check the numerics and the output directory before any compute
        has_errors = ConfigValidator(self.run_config, self.output_store, self.acceptance).validate()
        if has_errors:
            raise SystemError("One or more errors have been encountered during validation. "
                              "See the above logs for more information")

        # A manifest from an earlier run would otherwise describe files this run replaces
        stale = os.path.join(self.output_store.output_dir, MANIFEST_FILE)
        if os.path.exists(stale):
            logging.warning("Removing manifest of an earlier run: %s" % stale)
            os.remove(stale)

        logging.info("CombConductor run %s validated! Beginning %s." % (self.run_id, self.experiment_name))

    def run(self):
        self.start_time = time.time()

        # Fully resolved config next to the outputs
        resolved = self.output_store.declare("config", "config", RESOLVED_CONFIG)
        self.run_config.write(resolved.get_path())

        section = ACCEPTANCE if self.acceptance else EXPERIMENT_SECTIONS[self.run_config.experiment]
        self.experiment = experiment_class(self.experiment_name)(self.experiment_name, self.run_config, self.output_store)
        self.experiment.load_arguments(self.run_config.section(section))
        self.experiment.run()

        # Every declared output must exist; this records sizes and checksums
        self.output_store.finalize()
        self.end_time = time.time()

    def passed(self):
        # Only acceptance runs can complete and still fail
        if self.acceptance and self.experiment is not None:
            return self.experiment.all_passed()
        return True

    def publish_report(self, err=False, err_msg=None, git_version=None):
        # Manifest on success, failure report otherwise; written last
        try:
            manifest = self.__make_run_manifest(err, err_msg, git_version)
            if manifest is not None:
                return manifest.write(self.output_store.output_dir)
        except BaseException as e:
            logging.error("Unable to publish run manifest!")
            if str(e) != "":
                logging.error("Received the following message:\n%s" % e)
            raise

    def clean_up(self):
        # Remove temporary manifest files left by an interrupted write
        if self.output_store is None or not os.path.isdir(self.output_store.output_dir):
            return
        for filename in os.listdir(self.output_store.output_dir):
            if filename.startswith(".%s." % MANIFEST_FILE):
                logging.debug("Removing partial manifest %s" % filename)
                os.remove(os.path.join(self.output_store.output_dir, filename))

    def __make_run_manifest(self, err, err_msg, git_version):

        # Nothing can be reported before the config and its output directory are known
        if self.run_config is None or self.output_store is None:
            return None
        if err and not os.path.isdir(self.output_store.output_dir):
            return None

        manifest = RunManifest(self.run_id, self.run_config.config_hash(), self.run_config.master_seed,
                               self.experiment_name, self.run_config.integrator, err, err_msg, git_version)

        if self.start_time is not None:
            manifest.set_start_time(self.start_time)
            end_time = self.end_time if self.end_time is not None else time.time()
            manifest.set_total_runtime(end_time - self.start_time)

        if self.experiment is not None:
            for timing in self.experiment.get_timings():
                manifest.register_stage(timing["stage"], timing["start_time"], timing["runtime(sec)"])
            manifest.set_summary(self.experiment.get_summary())

        # Output files are only listed once they are checksummed
        for output_file in self.output_store.get_files():
            if output_file.get_checksum() is None:
                continue
            manifest.register_output_file(output_file.stage, output_file.get_type(),
                                          self.output_store.relative_path(output_file),
                                          output_file.get_size(), output_file.get_checksum())
        return manifest
