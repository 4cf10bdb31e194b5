from decouple import config

PROJECT_NAME = "sepair"

# Numerical tolerance policy
RANK_REL: float = config("SEPAIR_RANK_REL", default=1e-10, cast=float)
EQ_ABS: float = config("SEPAIR_EQ_ABS", default=1e-9, cast=float)

# Determinism
SEED: int = config("SEPAIR_SEED", default=0, cast=int)

LOG_LEVEL: str = config("SEPAIR_LOG_LEVEL", default="WARNING")

# Local angle optimizer
SEPARATION_MARGIN: float = config("SEPAIR_SEPARATION_MARGIN", default=1e-3, cast=float)
ALPHA_GRID: int = config("SEPAIR_ALPHA_GRID", default=32, cast=int)
ALPHA_REFINE_ITERS: int = config("SEPAIR_ALPHA_REFINE_ITERS", default=200, cast=int)
ALPHA_STARTS: int = config("SEPAIR_ALPHA_STARTS", default=3, cast=int)
ALPHA_TOLERANCE: float = config("SEPAIR_ALPHA_TOLERANCE", default=1e-3, cast=float)
ZERO_ANGLE_TOL: float = config("SEPAIR_ZERO_ANGLE_TOL", default=1e-6, cast=float)
INEQUALITY_SAMPLES: int = config("SEPAIR_INEQUALITY_SAMPLES", default=20, cast=int)

# Default lambda grid for range stability sweeps: 1, -1, i, -i, 2, 1/2, 1+i
DEFAULT_LAMBDAS: tuple[complex, ...] = (1, -1, 1j, -1j, 2, 0.5, 1 + 1j)
