import json
import logging

from jsonschema import Draft4Validator

from Config.Parsers import BaseParser


def schema_errors(instance, schema):
    # Every violation, ordered by location, as "[section, key] message"
    errors = []
    for error in sorted(Draft4Validator(schema).iter_errors(instance), key=lambda e: [str(p) for p in e.path]):
        location = ", ".join(str(p) for p in error.path)
        errors.append("[%s] %s" % (location, error.message) if location else error.message)
    return errors


class JsonParser(BaseParser):
    # JSON run configs, checked against a JSON schema
    def read_config(self):
        return self.config_file if self.in_memory else self.load_json(self.config_file)

    def validate_config(self):
        self.errors.extend(schema_errors(self.config, self.load_json(self.config_spec_file)))

    @staticmethod
    def load_json(path):
        with open(path, "r") as fh:
            try:
                return json.load(fh)
            except ValueError as e:
                logging.error("Not valid JSON: %s (%s)" % (path, e))
                raise IOError("Config file is not valid JSON!")
