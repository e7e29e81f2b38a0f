"""Constants."""

from typing import Final

# Tolerances
SLOPE_TOLERANCE: Final = 1e-9
IDENTITY_TOLERANCE: Final = 1e-8
SOLVER_TOLERANCE: Final = 1e-7
SYMMETRY_TOLERANCE: Final = 1e-12

# Solvers
SOLVER_MAX_ITER: Final = 500
LOWNER_MAX_ITER: Final = 20_000
RATIONALIZE_DENOMINATOR: Final = 10**12

# Enumeration
RANK_GUARD: Final = 8
ENUMERATION_MAX_NODES: Final = 2_000_000
ESCALATION_ROUNDS: Final = 3
ESCALATION_FACTOR: Final = 1.5
RADIUS_INFLATION: Final = 1e-9

# Successive minima
LOWNER_MARGIN: Final = 1e-6
REFINEMENT_PRIMES: Final = (2, 3, 5, 7)

# Symmetric powers
GAMMA_SIZE_GUARD: Final = 10**7
GAMMA_EXACT_MAX_ELL: Final = 20
SYMPOW_SIZE_GUARD: Final = 200

# Brute-force scans
BOX_SIZE_GUARD: Final = 10**6

# Checks
MC_SAMPLES: Final = 200_000
MC_CHUNK: Final = 50_000
MC_SIGMAS: Final = 4.0
SIGNIFICANT_DIGITS: Final = 12
