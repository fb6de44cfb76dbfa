from .FockFluorescence import FockFluorescence
from .JumpTrack import JumpTrack
from .Rates import Rates
from .Dephasing import Dephasing
from .ConfidenceTime import ConfidenceTime
