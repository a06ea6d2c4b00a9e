import os
from pathlib import Path

APP_NAME = "DroopPlan"

CACHE_DIR_ENV = "DROOPPLAN_CACHE_DIR"
DATA_DIR = Path(os.getenv(CACHE_DIR_ENV) or Path.home() / ".droopplan")
CACHE_SUFFIX = ".graph.json"

LOG_FORMAT = "[DroopPlan] %(levelname)s: %(message)s"

# Numerical tolerances
ORTHONORMAL_TOLERANCE = 1e-9
POSE_KEY_TRANSLATION_QUANTUM = 1e-4  # meters
POSE_KEY_ROTATION_QUANTUM = 1e-3  # rotation-matrix entries
PIVOT_TOLERANCE = 1e-6
PENETRATION_TOLERANCE = 1e-6
TRANSITION_ANGLE_TOLERANCE = 1e-6

# Physics
DEFAULT_GRAVITY = 9.81

# Discretization defaults
DEFAULT_GRID_SPACING = 0.05
DEFAULT_X_STEPS_DEG = [0.0, 15.0, 30.0, 45.0, 60.0, 75.0, 90.0]
DEFAULT_Z_STEPS_DEG = [float(z) for z in range(0, 360, 30)]
DEFAULT_STABLE_YAWS_DEG = [0.0, 90.0, 180.0, 270.0]
DEFAULT_GRASP_ANGLES_DEG = [0.0, 45.0, 90.0, 135.0, 180.0]

# Edge costs
EDGE_COSTS = {
    "translation": 1.0,
    "grasp_transition": 3.0,
    "regrasp": 5.0,
}

# Graph build settings
EDGE_CHECK_SAMPLES = 16
REQUIRE_DROOP_ON_TRANSITIONS = True

# Cartesian motion defaults
STEP_TRANSLATION = 0.005  # meters
STEP_ROTATION_DEG = 2.0
CONTACT_TOLERANCE = 0.001  # meters
RETREAT_CLEARANCE = 0.05  # meters
MAX_REPROJECTION = 0.01  # meters

# Graph cache
CACHE_FORMAT = "droopplan-graph"
CACHE_VERSION = 1

# Output files
PLAN_FILE = "plan.txt"
PLAN_JSON_FILE = "plan.json"
TRAJECTORY_FILE = "trajectory.txt"
REPORT_FILE = "verification.txt"
FRAME_PATTERN = "frame_{index:03d}.svg"

# Exit codes
EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NO_PATH = 3
EXIT_VERIFICATION = 4
EXIT_IO = 5
