import os
import json
import logging

from .Validator import Validator
from Config.Parsers import schema_errors
from System.Datastore import file_checksum

REPO_DIR = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
MANIFEST_SPEC = os.path.join(REPO_DIR, "Config", "Specs", "RunManifest.json")


class ManifestValidator(Validator):
    # Checks a run manifest against its schema and every output against its checksum

    def __init__(self, manifest_path, spec_path=MANIFEST_SPEC):
        super(ManifestValidator, self).__init__()
        self.manifest_path  = manifest_path
        self.spec_path      = spec_path
        self.manifest       = None

        # Files whose checksum no longer matches
        self.integrity_failures = []

    def run_checks(self):
        try:
            with open(self.manifest_path, "r") as fh:
                self.manifest = json.load(fh)
        except (IOError, ValueError) as e:
            self.report_error("Manifest %s cannot be read: %s" % (self.manifest_path, e))
            return

        with open(self.spec_path, "r") as fh:
            schema = json.load(fh)
        for error in schema_errors(self.manifest, schema):
            self.report_error("%s: %s" % (self.manifest_path, error))
        if self.has_errors():
            return

        if self.manifest["status"] != "Complete":
            self.report_error("Run %s did not complete: %s" % (self.manifest["run_id"], self.manifest.get("error", "")))

        base_dir = os.path.dirname(os.path.abspath(self.manifest_path))
        for entry in self.manifest["files"]:
            path = os.path.join(base_dir, entry["path"])
            if not os.path.isfile(path):
                self.integrity_failures.append(path)
                self.report_error("Output listed in the manifest is missing: %s" % path)
            elif file_checksum(path) != entry["sha256"]:
                self.integrity_failures.append(path)
                self.report_error("Checksum mismatch: %s" % path)
        logging.debug("Checked %d outputs of %s" % (len(self.manifest["files"]), self.manifest_path))

    def get_manifest(self):
        return self.manifest

    def is_complete(self):
        return self.manifest is not None and not self.has_errors()
