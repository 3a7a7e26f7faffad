"""PLVC quantile fitting, knot selection, prediction and model assessment.

A fit minimizes sum rho_tau(y_ij - Pi_ij' theta - z_ij' beta) over the stacked
design (Pi, Z). The constant-coefficient comparator (LCC) is the same fit with
a degree-0 spline without internal knots, whose single basis function is 1.
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import replace

import numpy as np
from joblib import Parallel, delayed

from plvc_quantile.config import settings
from plvc_quantile.models.data import LongitudinalDataset
from plvc_quantile.models.errors import (
    ArgumentError,
    EmptyWindowError,
    ExtrapolationError,
    FitError,
    PLVCError,
    SolverError,
)
from plvc_quantile.models.fits import (
    AssessmentResult,
    KnotSelection,
    QQPair,
    QuantileFit,
    QuantileProcess,
    SicEntry,
)
from plvc_quantile.models.solver import QrProblem, SolverStatus
from plvc_quantile.models.spline import SplineSpec
from plvc_quantile.services import get_solver
from plvc_quantile.services.solver import QuantileSolver
from plvc_quantile.splines import SpecLike, build_design, eval_basis, make_spec, resolve_specs

logger = logging.getLogger(__name__)


def stacked_design(ds: LongitudinalDataset, spec: SpecLike) -> np.ndarray:
    """Full design (Pi, Z) in dataset row order."""
    Pi, Z = build_design(ds, spec)
    return np.hstack([Pi, Z])


def fit(
    ds: LongitudinalDataset,
    spec: SpecLike,
    tau: float,
    weights: np.ndarray | None = None,
    solver: QuantileSolver | None = None,
) -> QuantileFit:
    """
    Fit the PLVC quantile model at one quantile level.

    Args:
        ds: Dataset.
        spec: Shared spline spec, or one per varying coefficient.
        tau: Quantile level in (0, 1).
        weights: Optional positive observation weights.
        solver: Solver to use (default: configured singleton).

    Returns:
        QuantileFit carrying the solver status (``degenerate`` for
        non-unique optima or rank-deficient designs).

    Raises:
        FitError: The LP could not be solved.
    """
    specs = resolve_specs(spec, ds.p)
    solver = solver or get_solver()
    X = stacked_design(ds, specs)

    try:
        solution = solver.solve(QrProblem(X, ds.y, tau, weights))
    except SolverError as e:
        raise FitError(tau, str(e)) from e

    if solution.rank < X.shape[1]:
        logger.warning(
            f"tau={tau}: design rank {solution.rank} < {X.shape[1]} parameters; "
            "coefficients are not identified"
        )
    elif solution.status is SolverStatus.DEGENERATE:
        logger.debug(f"tau={tau}: non-unique quantile solution")

    coef = solution.coefficients
    starts = np.concatenate([[0], np.cumsum([s.basis_dim for s in specs])]).astype(int)
    blocks = tuple(coef[starts[l] : starts[l + 1]] for l in range(len(specs)))
    return QuantileFit(
        tau=tau,
        specs=specs,
        theta_blocks=blocks,
        beta=coef[starts[-1] :],
        objective=solution.objective,
        residuals=solution.residuals,
        status=solution.status,
        time_map=ds.time_map,
        varying_names=ds.varying_names,
        constant_names=ds.constant_names,
    )


def constant_spec() -> SplineSpec:
    """Degree-0 spline with no internal knots: a single basis function equal to 1."""
    return make_spec(0, degree=0)


def fit_constant(
    ds: LongitudinalDataset,
    tau: float,
    solver: QuantileSolver | None = None,
) -> QuantileFit:
    """Fit the linear constant-coefficient (LCC) model: every alpha_l constant."""
    return fit(ds, constant_spec(), tau, solver=solver)


def schwarz_criterion(loss: float, n_obs: int, n_params: int) -> float:
    """log(loss) + log(N) / (2N) * n_params; -inf for a zero loss."""
    penalty = math.log(n_obs) / (2.0 * n_obs) * n_params
    if loss <= 0.0:
        return -math.inf
    return math.log(loss) + penalty


def default_k_range(n_obs: int) -> range:
    """Candidate internal-knot counts 1 .. ceil(N^(1/5)) + 2."""
    return range(1, math.ceil(n_obs ** 0.2) + 3)


def _candidate(
    ds: LongitudinalDataset,
    tau: float,
    k: int,
    degree: int,
    placement: str,
    solver: QuantileSolver | None,
) -> SicEntry | None:
    try:
        spec = make_spec(k, degree, placement, ds.t)  # type: ignore[arg-type]
        result = fit(ds, spec, tau, solver=solver)
    except PLVCError as e:
        logger.warning(f"Knot candidate k={k} failed: {e}")
        return None
    n_params = ds.p * (degree + k + 1) + ds.q
    return SicEntry(
        k=k,
        sic=schwarz_criterion(result.objective, ds.n_obs, n_params),
        loss=result.objective,
        n_params=n_params,
    )


def select_knots(
    ds: LongitudinalDataset,
    tau: float,
    degree: int | None = None,
    k_range: Sequence[int] | None = None,
    placement: str = "uniform",
    solver: QuantileSolver | None = None,
    n_jobs: int | None = None,
) -> tuple[int, KnotSelection]:
    """
    Choose the number of internal knots by the Schwarz criterion.

    SIC(k) = log(check loss) + log(N)/(2N) * (p (degree + k + 1) + q);
    the smallest k wins ties.

    Returns:
        (k*, KnotSelection with the SIC table in k order).

    Raises:
        ArgumentError: Empty k_range.
        FitError: Every candidate fit failed.
    """
    degree = settings.default_degree if degree is None else degree
    ks = list(default_k_range(ds.n_obs) if k_range is None else k_range)
    if not ks:
        raise ArgumentError("k_range must contain at least one candidate")

    entries = Parallel(n_jobs=n_jobs or settings.threads)(
        delayed(_candidate)(ds, tau, k, degree, placement, solver) for k in ks
    )
    table = sorted((e for e in entries if e is not None), key=lambda e: e.k)
    if not table:
        raise FitError(tau, f"all {len(ks)} knot candidates failed")

    best = min(table, key=lambda e: (e.sic, e.k))
    logger.info(f"tau={tau}: SIC selects k={best.k} of {[e.k for e in table]}")
    return best.k, KnotSelection(selected_k=best.k, degree=degree, entries=table)


def fit_selected(
    ds: LongitudinalDataset,
    tau: float,
    degree: int | None = None,
    k_range: Sequence[int] | None = None,
    placement: str = "uniform",
    solver: QuantileSolver | None = None,
    n_jobs: int | None = None,
) -> QuantileFit:
    """Select k by SIC, then fit with it; the SIC table rides on the result."""
    k, selection = select_knots(ds, tau, degree, k_range, placement, solver, n_jobs)
    spec = make_spec(k, selection.degree, placement, ds.t)  # type: ignore[arg-type]
    return replace(fit(ds, spec, tau, solver=solver), knot_selection=selection)


# =============================================================================
# Coefficient curves and prediction
# =============================================================================


def _mapped_times(fit_result: QuantileFit, t: float | np.ndarray) -> np.ndarray:
    times = np.atleast_1d(np.asarray(t, dtype=float))
    tm = fit_result.time_map
    if not tm.contains(times):
        outside = times[(times < tm.t_min) | (times > tm.t_max)]
        bad = float(outside[0]) if outside.size else float(times[0])
        raise ExtrapolationError(bad, tm.t_min, tm.t_max)
    return tm.forward(times)


def eval_alpha(
    fit_result: QuantileFit, l: int, t: float | np.ndarray
) -> float | np.ndarray:
    """
    Evaluate alpha_l(t) = pi(time_map(t))' theta_l on the original time scale.

    Raises:
        ArgumentError: l out of range.
        ExtrapolationError: t outside the observed time range.
    """
    if not 0 <= l < fit_result.p:
        raise ArgumentError(f"Coefficient index {l} out of range for p={fit_result.p}")
    u = _mapped_times(fit_result, t)
    values = eval_basis(fit_result.specs[l], u).reshape(len(u), -1) @ fit_result.theta_blocks[l]
    if np.ndim(t) == 0:
        return float(values[0])
    return np.asarray(values)


def predict_rows(
    fit_result: QuantileFit, x: np.ndarray, z: np.ndarray, t: np.ndarray
) -> np.ndarray:
    """Conditional tau-quantiles x_r' alpha(t_r) + z_r' beta for many rows."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    z = np.asarray(z, dtype=float)
    z = np.zeros((x.shape[0], 0)) if z.size == 0 else z.reshape(x.shape[0], -1)
    if x.shape[1] != fit_result.p or z.shape[1] != fit_result.q:
        raise ArgumentError(
            f"Expected x of length {fit_result.p} and z of length {fit_result.q}, "
            f"got {x.shape[1]} and {z.shape[1]}"
        )
    alphas = np.column_stack(
        [np.atleast_1d(eval_alpha(fit_result, l, t)) for l in range(fit_result.p)]
    )
    return np.sum(x * alphas, axis=1) + z @ fit_result.beta


def predict_quantile(
    fit_result: QuantileFit,
    x: Sequence[float] | np.ndarray,
    z: Sequence[float] | np.ndarray,
    t: float,
) -> float:
    """Predicted tau-quantile sum_l x_l alpha_l(t) + z' beta at one covariate point."""
    x_arr = np.asarray(x, dtype=float).ravel()
    z_arr = np.asarray(z, dtype=float).ravel()
    if x_arr.size != fit_result.p or z_arr.size != fit_result.q:
        raise ArgumentError(
            f"Expected x of length {fit_result.p} and z of length {fit_result.q}, "
            f"got {x_arr.size} and {z_arr.size}"
        )
    return float(predict_rows(fit_result, x_arr[None, :], z_arr[None, :], np.array([t]))[0])


# =============================================================================
# Quantile process and assessment
# =============================================================================


def _fit_at(
    ds: LongitudinalDataset, spec: SpecLike, tau: float, solver: QuantileSolver | None
) -> QuantileFit:
    try:
        return fit(ds, spec, tau, solver=solver)
    except FitError:
        raise
    except PLVCError as e:
        raise FitError(tau, str(e)) from e


def fit_process(
    ds: LongitudinalDataset,
    spec: SpecLike,
    taus: Sequence[float],
    solver: QuantileSolver | None = None,
    n_jobs: int | None = None,
) -> QuantileProcess:
    """
    Fit independently at every grid point with a shared spec.

    Raises:
        ArgumentError: Empty or non-increasing grid, or a tau outside (0, 1).
        FitError: A per-tau fit failed (the failing tau is named).
    """
    grid = np.asarray(list(taus), dtype=float)
    if grid.size == 0:
        raise ArgumentError("tau grid must be non-empty")
    if np.any(grid <= 0) or np.any(grid >= 1) or np.any(np.diff(grid) <= 0):
        raise ArgumentError("tau grid must be strictly increasing in (0, 1)")

    fits = Parallel(n_jobs=n_jobs or settings.threads)(
        delayed(_fit_at)(ds, spec, float(tau), solver) for tau in grid
    )
    return QuantileProcess(taus=grid, fits=tuple(fits))


def default_assess_grid() -> np.ndarray:
    """tau grid 0.05, 0.10, ..., 0.95."""
    return np.round(np.arange(1, 20) * 0.05, 2)


def _window(ds: LongitudinalDataset, t_star: float, tol: float) -> np.ndarray:
    rows = np.flatnonzero(np.abs(ds.time - t_star) <= tol)
    if rows.size == 0:
        raise EmptyWindowError(t_star, tol)
    return rows


def assess(
    proc: QuantileProcess,
    ds: LongitudinalDataset,
    t_star: float,
    tol: float,
    n_draws: int,
    seed: int,
) -> np.ndarray:
    """
    Simulate responses near t* from a fitted quantile process.

    Each draw picks u ~ U(0, 1) and a qualifying observation uniformly, then
    returns the u-th conditional quantile at that observation's covariates and
    time. Between grid points quantiles are interpolated linearly (clamped at
    the grid ends) after sorting the per-tau values, so they are monotone in u.

    Raises:
        EmptyWindowError: No observation within tol of t_star.
    """
    rows = _window(ds, t_star, tol)
    if n_draws <= 0:
        return np.zeros(0)

    # (window rows) x (tau grid) conditional quantiles, sorted in tau
    curves = np.column_stack(
        [predict_rows(f, ds.x[rows], ds.z[rows], ds.time[rows]) for f in proc.fits]
    )
    curves.sort(axis=1)

    rng = np.random.default_rng(seed)
    us = rng.uniform(size=n_draws)
    picks = rng.integers(0, rows.size, size=n_draws)
    return np.array([np.interp(u, proc.taus, curves[i]) for u, i in zip(us, picks)])


def qq_pairs(
    observed: np.ndarray,
    simulated: np.ndarray,
    probs: Sequence[float] | None = None,
) -> list[QQPair]:
    """Matched empirical quantiles of two samples, by default at (i - 0.5)/m for m observed."""
    observed = np.asarray(observed, dtype=float)
    simulated = np.asarray(simulated, dtype=float)
    if observed.size == 0 or simulated.size == 0:
        return []
    if probs is None:
        m = observed.size
        grid = (np.arange(1, m + 1) - 0.5) / m
    else:
        grid = np.asarray(list(probs), dtype=float)
    obs_q = np.quantile(observed, grid)
    sim_q = np.quantile(simulated, grid)
    return [
        QQPair(prob=float(p), observed=float(o), simulated=float(s))
        for p, o, s in zip(grid, obs_q, sim_q)
    ]


def assess_model(
    proc: QuantileProcess,
    ds: LongitudinalDataset,
    t_star: float,
    tol: float,
    n_draws: int,
    seed: int,
    model: str = "plvc",
) -> AssessmentResult:
    """Simulate Y* near t* and pair it with the observed window for a Q-Q comparison."""
    simulated = assess(proc, ds, t_star, tol, n_draws, seed)
    observed = ds.y[_window(ds, t_star, tol)]
    return AssessmentResult(
        model=model,
        t_star=t_star,
        tol=tol,
        n_draws=n_draws,
        seed=seed,
        window_size=int(observed.size),
        simulated=simulated.tolist(),
        observed=observed.tolist(),
        qq=qq_pairs(observed, simulated),
    )
