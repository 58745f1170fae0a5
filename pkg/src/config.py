import os
import logging
from dotenv import load_dotenv

logger = logging.getLogger(__name__)

# Explicitly load .env from the project root, regardless of working directory
dotenv_path = os.path.join(os.path.dirname(os.path.dirname(__file__)), '.env')
load_dotenv(dotenv_path=dotenv_path)

# --- Logging ---
# Verbosity only. Nothing numeric is read from the environment so that every
# run is reproducible from its command-line flags alone.
LOG_LEVEL = os.getenv("MUNTZ_LOG_LEVEL", "WARNING").upper()
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

# --- Sup-norm engine ---
DEFAULT_TOL = 1e-10            # relative tolerance of sup_norm and bisection
SCAN_POINTS = 4096             # geometric t-grid points for the derivative scan
MAX_BISECTION_STEPS = 2000
PRECISION_FLOOR = 1e-15        # tolerances below this cannot be honoured in doubles

# --- Exponent families ---
MPMATH_DPS = 50                # decimal digits used before rounding a family once
DEFAULT_PREFIX_LENGTH = 200    # values generated for geometric specs without count

# --- Constructions ---
BUILD_CHECK_GRID = 2048        # per-interval grid of the final check inside c0 build
MIN_T_SEPARATION = 1e-12       # relative t-gap required between consecutive intervals
OSCILLATION_SAMPLES = 1024
WITNESS_MAX_SWEEPS = 40

# --- Verification ---
DEFAULT_GRID = 100000
DEFAULT_TRIALS = 1000
DEFAULT_SEED = 42

# --- Certificate schemas ---
C0_SCHEMA = "c0-cert/1"
OCTA_SCHEMA = "octa-cert/1"

# --- Exit codes ---
EXIT_VERIFIED = 0
EXIT_FALSIFIED = 1
EXIT_LIMIT = 2
EXIT_USAGE = 64  # BSD sysexits EX_USAGE


def get_numeric_settings() -> dict:
    """
    Returns the numeric defaults that influence results. Recorded in every
    certificate so a reader can tell which engine settings produced it.
    """
    return {
        'DEFAULT_TOL': DEFAULT_TOL,
        'SCAN_POINTS': SCAN_POINTS,
        'MAX_BISECTION_STEPS': MAX_BISECTION_STEPS,
        'MPMATH_DPS': MPMATH_DPS,
        'BUILD_CHECK_GRID': BUILD_CHECK_GRID,
        'MIN_T_SEPARATION': MIN_T_SEPARATION,
        'OSCILLATION_SAMPLES': OSCILLATION_SAMPLES,
    }
