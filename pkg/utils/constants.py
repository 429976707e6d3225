"""
Constants and configuration settings for the microgrid ILC toolkit
"""
import os
from typing import Dict, Tuple
from dotenv import load_dotenv

load_dotenv()

_REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

# Runtime Configuration
LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
LOG_TO_FILE = os.getenv("LOG_TO_FILE", "true").lower() == "true"
DEFAULT_OUT_DIR = os.getenv("ILC_OUT_DIR", "results")
MAX_WORKERS = int(os.getenv("ILC_MAX_WORKERS", 4))
PROFILE_DIR = os.getenv("ILC_PROFILE_DIR", os.path.join(_REPO_ROOT, "data", "profiles"))

PACKAGE_VERSION = "0.3.0"

# Network parameters of the four-node benchmark grid (fully connected)
BENCHMARK_N_NODES = 4
BENCHMARK_INERTIA: Tuple[float, ...] = (5.0, 4.8, 4.1, 4.8)       # M_j [W s^2]
BENCHMARK_KP: Tuple[float, ...] = (400.0, 110.0, 100.0, 200.0)     # k_P,j [W s]
BENCHMARK_KI: Tuple[float, ...] = (0.05, 0.004, 0.05, 0.001)       # k_I,j [1/(W s)]
BENCHMARK_T: Tuple[float, ...] = (0.04, 0.045, 0.047, 0.043)       # T_j [s]
BENCHMARK_COUPLING = 6.0                                           # K_jk [W/W]

# Cycle structure
HOURS_PER_CYCLE = 24
SECONDS_PER_HOUR = 3600.0
SECONDS_PER_DAY = HOURS_PER_CYCLE * SECONDS_PER_HOUR
MINUTES_PER_DAY = 1440

# Hourly output y = ENERGY_SIGN * integral of u_LI, in W h.
# Positive y means the low level absorbed surplus ILC power.
ENERGY_SIGN = -1.0

# Lifted model and learning
SAMPLES_PER_HOUR = 435
Q_CUTOFF = 1.0 / 6.0
Q_ORDER = 2
Q_ZERO_TOL = 1e-12
DEFAULT_KAPPA = 1.0
KAPPA_GRID = (0.0, 2.0, 401)
KAPPA_STUDY_SET: Tuple[float, ...] = (0.0, 0.5, 1.0, 2.0)
AS_MARGIN = 1e-9
SINGULAR_COND_LIMIT = 1e14

# Integrator
SOLVER_METHOD = "Radau"
SOLVER_RTOL = 1e-6
SOLVER_ATOL = 1e-8
# interpolant samples per integration segment for the peak frequency, dense near the segment start
PEAK_SAMPLES = 200

# Demand model
SYNTHETIC_FLUCTUATION = 0.2
KAPPA_STUDY_PEAK_RANGE = (0.6, 0.9)
KAPPA_STUDY_FLUCTUATION_RANGES = ((0.0, 0.4), (0.0, 0.1))
PROFILE_NAMES: Tuple[str, ...] = ("H0", "G1", "G4")
PROFILE_MIXED = "mixed"
DAY_TYPES: Tuple[str, ...] = ("weekday", "saturday", "sunday")
PROFILE_NORM_POWER = 100.0          # W
PROFILE_RATED_POWER = 100.0         # W, per-unit base
PROFILE_NOISE_FRACTION = 0.1
MAX_NOISE_FRACTION = 0.1

# Step-change schedule: (day index, per-node multiplier on H_j)
DEFAULT_STEP_SCHEDULE: Tuple[Tuple[int, Tuple[float, ...]], ...] = (
    (3, (1.5, 1.25, 1.5, 1.25)),
    (7, (0.8, 1.0, 0.8, 1.0)),
)

# Control objectives
FREQUENCY_BOUND_HZ = 0.0038
RECOVERY_THRESHOLD = 0.1
RECOVERY_CYCLES = 2
WEEKLY_LAG = 7


# Scenario names and their default cycle counts
class Scenarios:
    STEP_CONVERGENCE = "step_convergence"
    KAPPA_STUDY = "kappa_study"
    LOAD_PROFILES = "load_profiles"


SCENARIO_CYCLES: Dict[str, int] = {
    Scenarios.STEP_CONVERGENCE: 10,
    Scenarios.KAPPA_STUDY: 20,
    Scenarios.LOAD_PROFILES: 35,
}


# Command modes
class Modes:
    DESIGN = "design"
    SIMULATE = "simulate"
    EXPORT_MATRICES = "export-matrices"


# Graph Node Names
class NodeNames:
    CONFIGURE = "configure"
    BUILD_LIFTED = "build_lifted"
    DESIGN_SWEEP = "design_sweep"
    BUILD_DEMAND = "build_demand"
    SIMULATE = "simulate"
    EVALUATE = "evaluate"
    EXPORT = "export"
    ERROR_HANDLER = "error_handler"
    FINAL_RESPONSE = "final_response"


# Error types carried in error_info and the exit code each maps to
class ErrorTypes:
    CONFIG = "config_error"
    NUMERICAL = "numerical_error"
    UNEXPECTED = "unexpected_error"


EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_NUMERICAL_ERROR = 2

EXIT_CODES: Dict[str, int] = {
    ErrorTypes.CONFIG: EXIT_CONFIG_ERROR,
    ErrorTypes.NUMERICAL: EXIT_NUMERICAL_ERROR,
    ErrorTypes.UNEXPECTED: EXIT_NUMERICAL_ERROR,
}

# Error Messages
ERROR_MESSAGES = {
    "config_error": "The scenario configuration is invalid. Fix the listed fields and rerun.",
    "numerical_error": "A numerical step failed (solver, discretization or filter design).",
    "unexpected_error": "The run stopped on an unexpected error; see the log file for the traceback.",
}

# Output files
CYCLES_CSV = "cycles.csv"
CYCLES_COLUMNS = ["cycle", "hour", "node", "u_ilc", "y_li", "max_abs_freq"]
ERROR_NORMS_CSV = "error_norms.csv"
ERROR_NORMS_COLUMNS = ["cycle", "error_norm"]
SUMMARY_CSV = "summary.csv"
SUMMARY_COLUMNS = ["cycle", "sum_demand", "sum_y", "sum_u"]
DESIGN_CSV = "design.csv"
DESIGN_COLUMNS = ["kappa", "rho", "sigma_max", "as", "mc"]
KAPPA_NORMS_CSV = "error_norms_by_kappa.csv"
KAPPA_NORMS_COLUMNS = ["kappa", "cycle", "error_norm"]
MANIFEST_FILE = "manifest.json"
CHECKS_FILE = "checks.json"
CSV_FLOAT_FORMAT = "%.10g"

# Logging Configuration
LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
LOG_FILE = os.getenv("ILC_LOG_FILE", 'data/logs/microgrid_run.log')
