"""Numerical tolerances and defaults shared across the package."""

TAU_GEOM = 1e-9  # vertex dedup / polytope equality
TAU_RES = 1e-9  # residual accepted as "attained" in covering searches
TAU_AUDIT = 1e-6  # slack on lip(f - h) <= mu
TAU_DET = 1e-10  # |det J| below this counts as singular

DEFAULT_RADII = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)
AUDIT_RADIUS_FLOOR = 1e-9
EXCLUSION_MARGIN = 1e-7

DIVERGENCE_RATIO = 10.0  # consecutive per-radius maxima jump
DIVERGENCE_SLOPE = -0.25  # log-log slope of per-radius maxima vs radius

ALPHA_FLOOR = 1e-4
ALPHA_MAX = 1e3
LOP_REL_TOL = 2e-3

CONTRACTION = 0.5  # residual factor per accepted inverse-solver step
STALL_BUDGET = 200
