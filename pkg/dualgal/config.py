from __future__ import annotations
import os
from pathlib import Path

APP_NAME = "dualgal"

CACHE_DIR = Path(os.environ.get("XDG_CACHE_HOME", os.path.expanduser("~/.cache"))) / APP_NAME
LOG_PATH = CACHE_DIR / "dualgal.log"

# linear algebra
SOLVE_TOL = 1e-9
RANK_CUTOFF = 1e-12
PIVOT_FLOOR = 1e-12

# finite-dimensional duals
LINEAR_DUAL_TOL = 1e-10
QUAD_PAIR_TOL = 1e-10
MAXENT_TOL = 1e-12
MAX_NEWTON_ITERS = 100
DTP_SINGULAR = 1e-8

# quadrature
GAUSS_NEWTON_TOL = 1e-15
MAX_GAUSS_POINTS = 32
SITE_MERGE_TOL = 1e-12
STABLE_QUAD_TOL = 1e-12
ERROR_EXTRA_POINTS = 3

# convergence rates: log-log fit over the last levels
RATE_FIT_POINTS = 3

# exact solutions / adjoint
SERIES_TERMS = 1000
SERIES_POINTS_PER_HALF_PERIOD = 20
RK4_STEPS = 1000

# output
EVAL_GRID = 1001
OUTPUT_FORMATS = ("csv", "json")
