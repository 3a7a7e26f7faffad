"""Service layer with singleton getters.

Uses @lru_cache for lazy singletons so the configured solver is built once
per process (each joblib worker builds its own).
"""

from functools import lru_cache
from typing import TYPE_CHECKING

from plvc_quantile.config import settings

if TYPE_CHECKING:
    from plvc_quantile.services.solver import QuantileSolver


@lru_cache(maxsize=1)
def get_solver() -> "QuantileSolver":
    """Get singleton quantile LP solver configured from settings."""
    from plvc_quantile.services.solver import QuantileSolver

    return QuantileSolver(
        simplex_max_rows=settings.simplex_max_rows,
        max_iter=settings.solver_max_iter,
        zero_tol=settings.zero_residual_tol,
    )


__all__ = ["get_solver"]
