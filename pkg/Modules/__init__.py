from .Experiment import Experiment, Argument