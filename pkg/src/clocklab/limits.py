"""Dimension caps for dense and iterative linear algebra.

Total Hilbert-space dimension is capped at 2**22 by default; the
CLOCKLAB_MAX_DIM environment variable overrides the cap. Dense
eigendecomposition is used up to 2**12 and dense matrix assembly up to
2**14; beyond that, operators stay sparse and eigenpairs come from an
iterative solver.
"""

import os

from .errors import CapacityError

DEFAULT_MAX_DIM = 2**22
DENSE_EIG_CAP = 2**12
DENSE_ASSEMBLE_CAP = 2**14

_ENV_VAR = "CLOCKLAB_MAX_DIM"


def max_dim() -> int:
    """Effective total-dimension cap, honoring the environment override."""
    raw = os.environ.get(_ENV_VAR)
    if raw is None:
        return DEFAULT_MAX_DIM
    try:
        value = int(raw)
    except ValueError:
        raise CapacityError(f"{_ENV_VAR} must be an integer, got {raw!r}")
    if value < 2:
        raise CapacityError(f"{_ENV_VAR} must be at least 2, got {value}")
    return value


def check_dim(dim: int, what: str) -> int:
    """Raise CapacityError if ``dim`` exceeds the configured cap."""
    cap = max_dim()
    if dim > cap:
        raise CapacityError(
            f"{what} has dimension {dim}, exceeding the cap {cap}"
            f" (override with {_ENV_VAR})"
        )
    return dim
