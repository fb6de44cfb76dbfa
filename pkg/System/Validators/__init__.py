from .Validator import Validator
from .ConfigValidator import ConfigValidator
from .ManifestValidator import ManifestValidator
