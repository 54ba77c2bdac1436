"""
Configuration settings for the Oscillatory Operator Laboratory
"""

from pathlib import Path

# Output paths
OUTPUT_DIR = Path("output")
MANIFEST_NAME = "manifest.json"
SUMMARY_NAME = "summary.txt"

# Phase factorization settings
PHASE = {
    'cluster_tol': 1e-7,      # roots closer than cluster_tol*(1+|r|) are one root
    'newton_steps': 8,
    'box_samples': 33         # samples per axis for Hessian range on a dyadic box
}

# Kernel condition checking
KERNEL = {
    'samples': 2000,
    'min_distance': 1e-6,
    'max_distance': 1.0,
    'fd_relative_step': 1e-3,
    'fd_max_step': 1e-6,
    'ratio_slack': 1e-9       # rounding room on the ratio <= 1 checks
}

# Adaptive oscillatory quadrature
QUAD = {
    'tol': 1e-8,
    'max_panels': 20000,
    'order': 15,
    'embedded_order': 7,
    'min_width': 1e-14,       # floor for geometric grading toward singular points
    'grading_ratio': 0.5,
    'oracle_levels': 11,
    'oracle_floor': 1e-10     # oracle nodes nearer a singular point use the local power-law model
}

# Operator assembly
OPERATOR = {
    'J_max': 14,
    'quadrants': ((1, 1), (1, -1), (-1, 1), (-1, -1)),
    'amplitude_scale': 2.0,   # psi(x, y) = phi(2x) * phi(2y)
    'box': (-0.5, 0.5),
    'osc_samples': 129
}

# Norm estimation
NORMS = {
    'power_tol': 1e-10,
    'power_maxiter': 10000,
    'p_restarts': 8,
    'p_maxiter': 500,
    'p_tol': 1e-10,
    'grid_size': 256,
    'points_per_wavelength': 6,
    'max_grid_size': 4096,
    'max_check_size': 2048,   # largest grid used for the refinement check
    'schur_samples': 64,
    'schur_refine': 16,
    'row_chunk': 256
}

# Experiment defaults
EXPERIMENTS = {
    'lambda': {'start': 32.0, 'ratio': 2.0, 'count': 9},
    'min_lambdas': 4,
    'counterexample_min_lambdas': 3,   # explicit lambda sets, not necessarily geometric
    'resolution_tol': 0.05,
    'bounded_ratio': 2.0,     # "constant is bounded" surrogate: max/min <= 2
    'counterexample_samples': 50,
    'counterexample_interval': (0.125, 0.25),
    'endpoint_family_size': 20,
    'seed': 0,
    'threads': 1
}

# Acceptance thresholds (expected slopes are computed from n and mu)
ACCEPTANCE = {
    'decay_slope_tol': 0.08,
    'schur_slope_tol': 0.05,
    'damped_slope_tol': 0.1,
    'damped_imag_slope_tol': 0.05,
    'counterexample_pointwise': 0.1,
    'counterexample_slope_tol': 0.05,
    'audit_factor': 5.0,
    'factor_reconstruction_tol': 1e-9
}

# Process exit codes
EXIT_CODES = {
    'pass': 0,
    'fail': 1,
    'degenerate': 2,
    'quadrature': 3,
    'resolution': 4,
    'usage': 64
}

# Logging configuration
LOGGING = {
    'level': 'INFO',
    'format': '%(asctime)s - %(levelname)s - %(message)s',
    'file': 'osclab_run.log'
}
