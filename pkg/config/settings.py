"""Configuration settings for the refrigerator frequency-control simulator"""

import logging
import os
from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)

# App Settings
LOG_LEVEL = os.getenv("PFC_LOG_LEVEL", "INFO")
OUTPUT_DIR = os.getenv("PFC_OUTPUT_DIR", "outputs")
THREADS = int(os.getenv("PFC_THREADS", "1"))
DEFAULT_SEED = int(os.getenv("PFC_DEFAULT_SEED", "42"))
SWEEP_WORKERS = int(os.getenv("PFC_SWEEP_WORKERS", "1"))

# ==============================================================================
#  TIME BASE
# ==============================================================================
# DESIGN DECISION: Fixed 1 s engine step
# Frequency data arrives at 1 Hz and every recursion (startup profile, lock
# survival functions, resetting factor) is indexed in whole seconds.
TIME_STEP = 1.0
DAY_SECONDS = 86400
HOUR_SECONDS = 3600

# Devices per block in the parallel device phase. Block boundaries never
# depend on the thread count.
DEVICE_BLOCK_SIZE = 8192

# ==============================================================================
#  REFRIGERATOR POPULATION DEFAULTS
# ==============================================================================
# DESIGN DECISION: beta is in degC/J
# With beta ~ 4.4e-5 degC/J and P_n ~ 80 W the cooling rate beta*P_n is
# 3.52e-3 degC/s and eta*R*P_n ~ 70 degC, which reproduces the quoted
# heating/cooling rates of 0.0009 and -0.0026 degC/s.
POPULATION_SIZE = 70000
AMBIENT_RANGE = (20.0, 24.0)          # degC
DEADBAND_RANGE = (1.7, 2.3)           # degC
SETPOINT_RANGE = (4.5, 5.5)           # degC
ALPHA_RANGE = (4.0e-5, 6.0e-5)        # 1/s
POWER_RANGE = (70.0, 90.0)            # W
PEAK_FACTOR = (0.25, 0.025)           # (mean, std)
STARTUP_DURATION = (30.0, 3.0)        # s
LOCK_ON = (60.0, 5.0)                 # s
LOCK_OFF = (189.0, 31.5)              # s
BETA = (4.4e-5, 0.7e-5)               # degC/J
DEFAULT_COP = 2.0
DOOR_RESISTANCE_RATIO = 25.0          # R_op = R / ratio

# Sampled beta is truncated so the compressor keeps this margin over the
# heat load at the lower limit: eta*R*P_n >= margin * (T_a - T_min).
COOLING_MARGIN = 1.1

# ==============================================================================
#  FREQUENCY CONTROL
# ==============================================================================
DF_MAX = 0.2                  # Hz, full activation
RESERVE_DUTY = 0.15
CORRECTIVE_GAIN = 0.5e-4      # 1/step
DEADBAND_HZ = 0.0
ENTSOE_DEADBAND_HZ = 0.01
CONTROLLABILITY_LIMIT = 0.95  # L_on + L_off warning threshold
BASELINE_WINDOW = 900         # s, centered moving average
DIAGNOSTIC_LOG_EVERY = 3600   # steps between repeated warnings

# ==============================================================================
#  DOOR OPENINGS
# ==============================================================================
# DESIGN DECISION: Approximate household histogram
# The measured hourly histogram is not tabulated; this daytime-heavy profile
# with breakfast, lunch and dinner peaks stands in for it and is overridable
# from the scenario file.
DOOR_OPENINGS_PER_DAY = (40.0, 5.0)   # (mean, std)
DOOR_DURATION = (20.0, 3.0)           # s (mean, std)
DOOR_ENERGY_UPLIFT = 0.22
_RAW_DOOR_PROFILE = [
    0.4, 0.2, 0.1, 0.1, 0.1, 0.3,     # 00-05
    1.5, 4.0, 5.5, 4.0, 3.2, 4.2,     # 06-11
    6.2, 5.8, 3.6, 3.4, 4.2, 6.4,     # 12-17
    8.6, 8.2, 6.4, 4.8, 2.8, 1.4,     # 18-23
]
DOOR_HOURLY_PROFILE = [w / sum(_RAW_DOOR_PROFILE) for w in _RAW_DOOR_PROFILE]

# ==============================================================================
#  SYNTHETIC FREQUENCY CLASSES
# ==============================================================================
SIGNAL_SIGMA = 0.025          # Hz
SIGNAL_HALF_PERIOD = 120      # s
SIGNAL_CLIP = 0.5             # Hz
SIGNAL_BIAS = {
    "zero_mean": 0.0,
    "small_bias": 0.005,
    "large_bias": 0.0192,
}

# Reserve market arithmetic
RESERVE_PRICE_EUR_MW_H = 21.5

logger.debug(f"✓ Settings loaded - threads: {THREADS}, output: {OUTPUT_DIR}")
