"""
Global defaults and settings configuration.
"""

# Series defaults
DEFAULT_TRUNCATION = 10

# Tolerances
DEFAULT_FIXED_POINT_TOL = 1e-9
DEFAULT_ZERO_TOL = 1e-10  # relative to the largest leading-pair coefficient
DEFAULT_INDEX_TOL = 1e-8
DEFAULT_DET_TOL = 1e-7

# Root finder
DEFAULT_ROOT_RESIDUAL_TOL = 1e-10
DEFAULT_ROOT_CLUSTER_TOL = 1e-7
DEFAULT_ROOT_MAX_ITER = 500
DEFAULT_RATIONAL_MAX_DENOMINATOR = 10**6

# Fixed-point location (Gauss-Newton)
DEFAULT_NEWTON_MAX_ITER = 200
DEFAULT_NEWTON_TOL = 1e-14
LSTSQ_RCOND = 1e-10

# Orbit iteration
DEFAULT_R_CONV = 1e-3
DEFAULT_R_ESCAPE = 1e6
DEFAULT_MAX_ITER = 100_000
DEFAULT_BASIN_MAX_ITER = 5000
DEFAULT_CONFIRMATION_WINDOW = 100  # steps over which the norm must decrease
DEFAULT_TANGENT_WINDOW = 10  # projective positions averaged for the tangent
DEFAULT_RATE_BOUND = 1e3  # bound on n^(1/(order-1)) * |x_n|
DEFAULT_STEP_TOL = 1e-12
DEFAULT_TANGENT_CLUSTER_DISTANCE = 0.05

# Concurrency
THREADS_ENV_VAR = "HAKIMKIT_THREADS"

# PPM palette (RGB)
COLOR_ESCAPED = (0, 0, 0)
COLOR_UNDECIDED = (128, 128, 128)
COLOR_CONVERGED_ELSEWHERE = (255, 0, 0)
COLOR_CONVERGED_FAST = (255, 255, 255)  # ramp start: few iterations
COLOR_CONVERGED_SLOW = (0, 0, 255)  # ramp end: max_iter iterations
