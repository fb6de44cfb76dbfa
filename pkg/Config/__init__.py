from .Parsers import ConfigValidationError
from .ConfigParser import ConfigParser