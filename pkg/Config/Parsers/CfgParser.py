import logging

from configobj import ConfigObj, ConfigObjError, flatten_errors, get_extra_values
from validate import Validator

from Config.Parsers import BaseParser


class CfgParser(BaseParser):
    # Class for parsing information from a ConfigObj config file
    # Base files are merged beneath the config, overlays (dicts) on top of it
    def __init__(self, config_file, config_spec_file, base_files=None, overlays=None, raise_errors=True):
        self.base_files = list(base_files) if base_files is not None else []
        self.overlays = list(overlays) if overlays is not None else []
        super(CfgParser, self).__init__(config_file, config_spec_file, raise_errors=raise_errors)

    def read_config(self):
        # Parse and return config data using ConfigObj
        try:
            config = ConfigObj(configspec=self.config_spec_file)
            for layer in self.base_files + [self.config_file]:
                config.merge(ConfigObj(layer, file_error=True) if isinstance(layer, str) else ConfigObj(layer))
            for overlay in self.overlays:
                config.merge(overlay)
            return config
        except (ConfigObjError, SyntaxError) as e:
            logging.error("Config parsing error! Config file is not valid INI: %s" % self.config_file)
            if str(e) != "":
                logging.error("Received the following error message:\n%s" % e)
            raise IOError("Config file is not valid INI!")

    def validate_config(self):
        # Validating schema
        validator = Validator()
        results = self.config.validate(validator, preserve_errors=True, copy=True)

        # Reporting every failed or missing key
        if results is not True:
            for (section_list, key, error) in flatten_errors(self.config, results):
                where = "[%s] " % ", ".join(section_list) if section_list else ""
                if key is None:
                    self.errors.append("%smissing section" % where)
                elif error is False:
                    self.errors.append("%s%s: missing required value" % (where, key))
                else:
                    self.errors.append("%s%s: %s" % (where, key, error))

        # Unknown keys and sections are errors
        for section_list, name in get_extra_values(self.config):
            where = "[%s] " % ", ".join(section_list) if section_list else ""
            self.errors.append("%s%s: unknown key" % (where, name))
