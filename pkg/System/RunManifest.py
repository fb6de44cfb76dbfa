import os
import json
import logging
import tempfile
from collections import OrderedDict

MANIFEST_FILE = "manifest.json"
FAILURE_FILE = "failure_report.json"


class RunManifest(object):
    # Object for holding metadata related to one CombConductor run
    def __init__(self, run_id, config_hash, master_seed, experiment, integrator, err=False, err_msg=None, code_version=None):

        # Id of the run being reported
        self.run_id = run_id

        # sha256 of the fully resolved config
        self.config_hash = config_hash

        # Seed and experiment that fully determine the outputs
        self.master_seed    = master_seed
        self.experiment     = experiment
        self.integrator     = integrator

        # Whether the run was halted due to error
        self.err = err

        # Error msg that halted the run
        self.err_msg = err_msg

        # Git commit version
        self.code_version = code_version

        # Total runtime
        self.total_runtime = 0

        # Time of run start
        self.start_time = None

        # Output files with checksums
        self.output_files = []

        # Stage timings
        self.timings = []

        # Scalar results reported by the experiment
        self.summary = OrderedDict()

    @property
    def total_processing_time(self):
        return sum(float(timing["runtime(sec)"]) for timing in self.timings)

    @property
    def total_output_size(self):
        return sum(int(output_file["size"]) for output_file in self.output_files)

    def set_fail(self, err_msg=None):
        self.err = True
        self.err_msg = err_msg

    def set_success(self):
        self.err = False
        self.err_msg = None

    def set_start_time(self, start_time):
        self.start_time = start_time

    def set_total_runtime(self, total_runtime):
        self.total_runtime = total_runtime

    def set_summary(self, summary):
        self.summary = OrderedDict(summary)

    def register_stage(self, stage, start_time, run_time):
        # Start times are stored relative to the start of the run
        if self.start_time is not None and start_time is not None:
            start_time = start_time - self.start_time
        logging.debug("Run manifest(%s). Stage: %s, Start: %s, Runtime: %s" % (self.run_id, stage, start_time, run_time))
        self.timings.append(OrderedDict([("stage", stage), ("start_time", start_time), ("runtime(sec)", run_time)]))

    def register_output_file(self, stage, file_type, path, size, sha256):
        logging.debug("Run manifest(%s). file_type: %s, path: %s, size: %s" % (self.run_id, file_type, path, size))
        self.output_files.append(OrderedDict([("stage", stage),
                                              ("file_type", file_type),
                                              ("path", path),
                                              ("size", int(size)),
                                              ("sha256", sha256)]))

    def to_dict(self):
        manifest = OrderedDict()
        manifest["run_id"] = self.run_id
        manifest["status"] = "Complete" if not self.err else "Failed"
        manifest["error"] = "" if self.err_msg is None else self.err_msg
        manifest["config_hash"] = self.config_hash
        manifest["code_version"] = self.code_version
        manifest["integrator"] = self.integrator
        manifest["master_seed"] = self.master_seed
        manifest["experiment"] = self.experiment
        manifest["total_runtime"] = self.total_runtime
        manifest["total_proc_time"] = self.total_processing_time
        manifest["total_output_size"] = self.total_output_size
        manifest["timings"] = self.timings
        manifest["files"] = self.output_files
        manifest["summary"] = self.summary
        return manifest

    def write(self, output_dir):
        # Atomic write: the file appears complete or not at all
        filename = MANIFEST_FILE if not self.err else FAILURE_FILE
        path = os.path.join(output_dir, filename)
        fd, tmp_path = tempfile.mkstemp(prefix=".%s." % filename, dir=output_dir)
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(str(self))
                fh.write("\n")
            os.replace(tmp_path, path)
        except BaseException:
            if os.path.exists(tmp_path):
                os.remove(tmp_path)
            raise
        logging.info("Wrote %s" % path)
        return path

    def __str__(self):
        return json.dumps(self.to_dict(), indent=4)


def run_id_for(experiment, config_hash):
    # Reruns of the same config share their id
    return "%s-%s" % (experiment, config_hash[:12])

