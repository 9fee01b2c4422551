from cavity_swap.common import SimulationError, InvalidConfiguration, DimensionMismatch, InvalidState, \
    NumericalFailure, OutputError
from cavity_swap.harness import ProtocolExperimentService, SweepSpec, load_sweep_spec
