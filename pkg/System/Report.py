import os
import csv
import json
import logging
from collections import OrderedDict

from System.RunManifest import MANIFEST_FILE
from System.Datastore import OutputStore, IntegrityError
from System.Validators import ManifestValidator

REPORT_FILE = "report.json"
RATES_SUMMARY = "rates_summary.csv"
ACCEPTANCE_SUMMARY = "acceptance_summary.csv"

RATES_SUMMARY_COLUMNS = ["run_id", "theta_pi", "gamma_m", "gamma_m_stderr", "gamma_het", "gamma_d_bound"]
ACCEPTANCE_SUMMARY_COLUMNS = ["run_id", "criterion", "passed", "value", "threshold"]


def manifest_path(location):
    # A run directory stands for the manifest inside it
    if os.path.isdir(location):
        return os.path.join(location, MANIFEST_FILE)
    return location


def read_table(path):
    with open(path, "r", newline="") as fh:
        return list(csv.DictReader(fh))


class RunReport(object):
    """
    Summary tables over a set of finished runs.

    Every manifest is checked against its schema and every output it lists
    against its checksum. Runs without a valid complete manifest are listed as
    incomplete; a checksum mismatch raises IntegrityError once all runs are checked.
    """

    def __init__(self, locations, report_dir):
        self.locations      = list(locations)
        self.report_dir     = report_dir

        self.complete       = OrderedDict()
        self.incomplete     = OrderedDict()
        self.integrity_failures = []

        self.rates          = []
        self.acceptance     = []

    def load(self):
        for location in self.locations:
            path = manifest_path(location)
            if not os.path.isfile(path):
                logging.error("No manifest found for %s; the run is incomplete" % location)
                self.incomplete[location] = "manifest missing"
                continue
            validator = ManifestValidator(path)
            if validator.validate():
                self.integrity_failures.extend(validator.integrity_failures)
                self.incomplete[location] = "; ".join(validator.get_errors())
                continue
            self.complete[path] = validator.get_manifest()

        if self.integrity_failures:
            raise IntegrityError("%d outputs do not match their recorded checksums!" % len(self.integrity_failures))
        logging.info("%d complete and %d incomplete runs" % (len(self.complete), len(self.incomplete)))

    def aggregate(self):
        for path, manifest in self.complete.items():
            base_dir = os.path.dirname(os.path.abspath(path))
            for entry in manifest["files"]:
                table_path = os.path.join(base_dir, entry["path"])
                if entry["file_type"] == "rates":
                    for row in read_table(table_path):
                        self.rates.append([manifest["run_id"]] + [float(row[key]) for key in RATES_SUMMARY_COLUMNS[1:]])
                elif entry["file_type"] == "acceptance":
                    for row in read_table(table_path):
                        self.acceptance.append([manifest["run_id"], int(row["criterion"]), row["passed"] == "true",
                                                float(row["value"]), float(row["threshold"])])

    def write(self):
        store = OutputStore(self.report_dir)
        store.prepare()
        store.write_csv("report", "rates_summary", RATES_SUMMARY, RATES_SUMMARY_COLUMNS, self.rates)
        store.write_csv("report", "acceptance_summary", ACCEPTANCE_SUMMARY, ACCEPTANCE_SUMMARY_COLUMNS,
                        self.acceptance)
        output_file = store.declare("report", "report", REPORT_FILE)
        with open(output_file.get_path(), "w") as fh:
            fh.write(json.dumps(self.to_dict(), indent=4))
            fh.write("\n")
        store.finalize()
        return store.get_files()

    def is_complete(self):
        return len(self.complete) > 0 and not self.incomplete

    def to_dict(self):
        report = OrderedDict()
        report["runs"] = [OrderedDict([("run_id", manifest["run_id"]),
                                       ("experiment", manifest["experiment"]),
                                       ("config_hash", manifest["config_hash"]),
                                       ("master_seed", manifest["master_seed"]),
                                       ("manifest", path)]) for path, manifest in self.complete.items()]
        report["incomplete"] = [OrderedDict([("location", location), ("reason", reason)])
                                for location, reason in self.incomplete.items()]
        report["rates"] = [OrderedDict(zip(RATES_SUMMARY_COLUMNS, row)) for row in self.rates]
        report["acceptance"] = [OrderedDict(zip(ACCEPTANCE_SUMMARY_COLUMNS, row)) for row in self.acceptance]
        return report
