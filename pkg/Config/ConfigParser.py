import logging

from Config.Parsers import JsonParser
from Config.Parsers import CfgParser

# Parser for each accepted run config extension
PARSER_TYPES = {
    ".cfg"      : CfgParser,
    ".config"   : CfgParser,
    ".json"     : JsonParser,
    ".jsn"      : JsonParser
}


def parser_type(name):
    for extension, parser_class in PARSER_TYPES.items():
        if name.lower().endswith(extension):
            return parser_class
    logging.error("Unrecognized config format for '%s'! Accepted extensions: %s" % (name, ", ".join(PARSER_TYPES)))
    raise IOError("Could not detect the config file format!")


class ConfigParser(object):
    """
    Picks the parser for a run config by extension and exposes its result.

    In-memory layers have no extension, so config_format ("config" or "json") must name it.
    Extra keyword arguments go to the parser, e.g. base_files and overlays for CfgParser.
    """
    def __init__(self, config_file, config_spec_file, config_format=None, raise_errors=True, **kwargs):
        if config_format is not None:
            name = "layer.%s" % config_format.lstrip(".")
        elif isinstance(config_file, str):
            name = config_file
        else:
            logging.error("In-memory config given without a format!")
            raise IOError("Could not detect the config file format!")

        self.config_parser = parser_type(name)(config_file, config_spec_file, raise_errors=raise_errors, **kwargs)

    def get_config(self):
        return self.config_parser.get_config()

    def get_errors(self):
        return self.config_parser.get_errors()
