import math
from enum import Enum

# Reference operating point (frequencies are f = omega / 2pi)
DEFAULT_DELTA_1_GHZ = 1.0
DEFAULT_DELTA_2_GHZ = 0.5
DEFAULT_DELTA_1 = 2.0 * math.pi * DEFAULT_DELTA_1_GHZ * 1e9
DEFAULT_DELTA_2 = 2.0 * math.pi * DEFAULT_DELTA_2_GHZ * 1e9
DEFAULT_B = 21.0

# Decoherence times (seconds)
DEFAULT_DEPHASING_TIME = 5e-6
DEFAULT_RELAXATION_TIME = 50e-6
DEFAULT_CAVITY_LIFETIME = 20e-6

# Hilbert space
DEFAULT_N_PAIRS = 2
DEFAULT_FOCK_CUTOFF = 3
MAX_DIMENSION = 10_000

# State invariants
PURE_NORM_TOL = 1e-10
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-8
POSITIVITY_TOL = 1e-8

# Integration guards
NORM_DRIFT_ABORT = 1e-6
POSITIVITY_ABORT = 1e-6
DT_DELTA_FACTOR = 0.002
DT_SWAP_DIVISOR = 2000
SCHRODINGER_DT_DELTA_FACTOR = 0.01
DEFAULT_RECORD_SAMPLES = 100
LIOUVILLIAN_MAX_SIZE = 4096

# Fidelity
EIGENVALUE_CLIP = 1e-12
FIDELITY_PSD_TOL = 1e-6
FIDELITY_OVERSHOOT = 1e-9

# Large-detuning / cross-pair thresholds
VALIDITY_PASS_RATIO = 50.0
VALIDITY_WARN_RATIO = 10.0

# Standard protocol
LAMBDA_REL_TOL = 1e-12

# Sweep
DEFAULT_B_VALUES = tuple(float(b) for b in range(11, 32, 2))
DEFAULT_MAX_WORKERS = 4
CSV_COLUMNS = ['b', 'scenario', 'fidelity', 't_swap_ns', 'trace_error', 'min_eig', 'qubit_e_pop_max', 'wall_time_s']
CSV_FLOAT_FORMAT = '%.12e'

# Unit scales
FREQUENCY_UNITS = {'Hz': 1.0, 'kHz': 1e3, 'MHz': 1e6, 'GHz': 1e9}
TIME_UNITS = {'s': 1.0, 'ms': 1e-3, 'us': 1e-6, 'ns': 1e-9, 'ps': 1e-12}


class QubitLevel(str, Enum):
    G = "g"
    E = "e"


class Frame(str, Enum):
    LAB_ROTATING = "lab-rotating"
    INTERACTION = "interaction"


class SzConvention(str, Enum):
    UNHALVED = "unhalved"
    HALVED = "halved"


class IntegratorMethod(str, Enum):
    FIXED_RK4 = "fixed-rk4"
    ADAPTIVE = "adaptive"


class EvolutionModel(str, Enum):
    # FULL: rotating-frame form of the qubit-cavity Hamiltonian
    # EFFECTIVE: dispersive H0 + HI, already in the interaction picture
    FULL = "full"
    EFFECTIVE = "effective"


class Scenario(str, Enum):
    I = "i"
    II = "ii"
    III = "iii"
    IV = "iv"
    EPR_INPUT = "epr-input"
    GHZ = "ghz"
    W = "w"
    CUSTOM = "custom"


SWAP_SCENARIOS = (Scenario.I, Scenario.II, Scenario.III, Scenario.IV)
SCENARIO_ORDER = {scenario: index for index, scenario in enumerate(Scenario)}


class Verdict(str, Enum):
    PASS = "pass"
    WARN = "warn"
    FAIL = "fail"


VERDICT_SEVERITY = {Verdict.PASS: 0, Verdict.WARN: 1, Verdict.FAIL: 2}


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class ExitCode(int, Enum):
    SUCCESS = 0
    INVALID_CONFIG = 1
    NUMERICAL_FAILURE = 2
