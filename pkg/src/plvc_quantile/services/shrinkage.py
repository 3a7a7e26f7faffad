"""L1 shrinkage of the non-constant spline directions, tuned by SIC.

The tested coefficients are re-parameterized as in the constancy test; the
directions xi_1 (columns of Pi1) carry the penalty lam * ||xi_1||_1. When SIC
picks a lambda at which every xi_1 component is zero, the tested coefficients
are considered time-invariant at that quantile level.
"""

import logging
import math
from collections.abc import Sequence

import numpy as np
from joblib import Parallel, delayed

from plvc_quantile.config import settings
from plvc_quantile.models.data import LongitudinalDataset
from plvc_quantile.models.errors import ArgumentError, FitError, PLVCError
from plvc_quantile.models.inference import ShrinkagePathEntry, ShrinkageResult
from plvc_quantile.models.solver import Penalty, QrProblem
from plvc_quantile.services import get_solver
from plvc_quantile.services.solver import QuantileSolver, check_loss
from plvc_quantile.splines import SpecLike, split_design_for_constancy

logger = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 30
_MAX_DOUBLINGS = 60


def _path_point(
    X: np.ndarray,
    y: np.ndarray,
    tau: float,
    penalized: tuple[int, ...],
    lam: float,
    scale: np.ndarray,
    zero_tol: float,
    solver: QuantileSolver,
) -> ShrinkagePathEntry | None:
    try:
        solution = solver.solve_l1(QrProblem(X, y, tau, penalty=Penalty(penalized, lam)))
    except PLVCError as e:
        logger.warning(f"Shrinkage solve failed at lambda={lam}: {e}")
        return None

    coef = solution.coefficients
    nonzero = np.abs(coef) * scale > zero_tol
    pen = np.asarray(penalized)
    xi1 = float(np.sum(np.abs(coef[pen]) * nonzero[pen]))
    loss = check_loss(solution.residuals, tau)
    df = int(np.count_nonzero(nonzero))
    n_obs = len(y)
    sic = math.log(loss) + math.log(n_obs) / (2.0 * n_obs) * df if loss > 0 else -math.inf
    return ShrinkagePathEntry(lam=lam, sic=sic, loss=loss, df=df, xi1_l1norm=xi1)


def _standardizer(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per-column factor ||X_j|| / ||y|| turning |b_j| into a scale-free size."""
    y_norm = float(np.linalg.norm(y)) or 1.0
    return np.linalg.norm(X, axis=0) / y_norm


def lambda_max(
    X: np.ndarray,
    y: np.ndarray,
    tau: float,
    penalized: tuple[int, ...],
    solver: QuantileSolver | None = None,
    zero_tol: float | None = None,
) -> float:
    """
    Smallest doubling of a starting penalty at which every penalized coefficient is zero.

    Starts from the unpenalized check loss per observation.
    """
    solver = solver or get_solver()
    zero_tol = settings.shrinkage_zero_tol if zero_tol is None else zero_tol
    scale = _standardizer(X, y)
    base = solver.solve(QrProblem(X, y, tau))
    lam = max(base.objective / len(y), 1e-12 * max(1.0, float(np.max(np.abs(y)))))
    for _ in range(_MAX_DOUBLINGS):
        point = _path_point(X, y, tau, penalized, lam, scale, zero_tol, solver)
        if point is not None and point.xi1_l1norm == 0.0:
            return lam
        lam *= 2.0
    raise FitError(tau, "penalty doubling never shrank the tested block to zero")


def default_lambda_grid(lam_max: float, n_points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """0 followed by n_points log-spaced values from 1e-3 * lam_max to lam_max."""
    return np.concatenate([[0.0], np.geomspace(1e-3 * lam_max, lam_max, n_points)])


def shrinkage_constancy(
    ds: LongitudinalDataset,
    spec: SpecLike,
    tau: float,
    tested: Sequence[int],
    lambda_grid: Sequence[float] | None = None,
    solver: QuantileSolver | None = None,
    n_jobs: int | None = None,
) -> ShrinkageResult:
    """
    Penalize the non-constant directions of the tested coefficients and tune lambda by SIC.

    SIC(lam) = log(check loss) + log(N)/(2N) * df, with df the number of
    coefficients whose standardized size |b_j| ||X_j|| / ||y|| exceeds the
    zero threshold. Ties in SIC go to the larger lambda.

    Args:
        ds: Dataset.
        spec: Spline spec(s).
        tau: Quantile level.
        tested: Zero-based varying-coefficient indices.
        lambda_grid: Non-negative penalties; default 0 plus 30 log-spaced points.

    Raises:
        ArgumentError: Empty or negative lambda grid.
        FitError: Every penalized fit failed.
    """
    solver = solver or get_solver()
    zero_tol = settings.shrinkage_zero_tol
    Pi1, Pi2 = split_design_for_constancy(ds, spec, tested)
    X = np.hstack([Pi1, Pi2, ds.z])
    y = np.asarray(ds.y)
    penalized = tuple(range(Pi1.shape[1]))

    if lambda_grid is None:
        grid = default_lambda_grid(lambda_max(X, y, tau, penalized, solver, zero_tol))
    else:
        grid = np.asarray(list(lambda_grid), dtype=float)
        if grid.size == 0 or np.any(grid < 0):
            raise ArgumentError("lambda grid must be non-empty and non-negative")

    scale = _standardizer(X, y)
    points = Parallel(n_jobs=n_jobs or settings.threads)(
        delayed(_path_point)(X, y, tau, penalized, float(lam), scale, zero_tol, solver)
        for lam in grid
    )
    path = [p for p in points if p is not None]
    if not path:
        raise FitError(tau, "every shrinkage fit failed")

    best = min(path, key=lambda e: (e.sic, -e.lam))
    names = [ds.varying_names[l] for l in tested]
    logger.info(f"tau={tau}: shrinkage selects lambda={best.lam:.4g}, |xi1|={best.xi1_l1norm:.4g}")
    return ShrinkageResult(
        tau=tau,
        tested=names,
        lambda_star=best.lam,
        xi1_l1norm=best.xi1_l1norm,
        df=best.df,
        time_invariant=best.xi1_l1norm == 0.0,
        sic_path=path,
    )
