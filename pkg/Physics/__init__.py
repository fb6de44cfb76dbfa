from .Hilbert import OperatorMatrix, DensityMatrix, PhaseSpaceGrid, WignerMap
from .Hilbert import InvalidDimensionError, DimensionMismatchError, InvalidStateError
from .Dynamics import SystemParams, TimeDependentHamiltonian, LindbladGenerator, LindbladResult
from .Dynamics import InvalidParameterError, IntegratorStepError, NonUniqueSteadyStateError
from .Dynamics import evolve_lindblad, steady_state, reflection_coefficient, available_presets
from .Drive import CombSpec, InvalidCombError, effective_kick_angle
from .Trajectories import VoltageRecord, RecordSet, TrajectoryResult, JumpEnsemble, SMEIntegrator, StepSizeError
