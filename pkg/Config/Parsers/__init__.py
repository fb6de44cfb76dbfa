from .BaseParser import BaseParser, ConfigValidationError
from .CfgParser import CfgParser
from .JsonParser import JsonParser, schema_errors
