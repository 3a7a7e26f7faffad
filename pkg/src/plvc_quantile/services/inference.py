"""Wald and rank score tests for the constant part and for coefficient constancy.

All tests work on residualized designs D = (I - W (W'BW)^-1 W'B) T, computed
from a pivoted QR of B^(1/2) W without forming N x N projectors.
"""

import logging
import math
from collections.abc import Sequence
from typing import Any

import numpy as np
from scipy import linalg
from scipy.stats import chi2

from plvc_quantile.config import settings
from plvc_quantile.models.data import LongitudinalDataset
from plvc_quantile.models.errors import (
    ArgumentError,
    DegenerateDesignError,
    FitError,
    IllConditionedError,
    NoPairsError,
    SolverError,
)
from plvc_quantile.models.inference import (
    Correlation,
    HypothesisRow,
    ResidualizedDesign,
    TestMethod,
    TestResult,
    WeightMode,
)
from plvc_quantile.models.solver import QrProblem
from plvc_quantile.services import get_solver
from plvc_quantile.services.density import build_B, estimate_weights
from plvc_quantile.services.fitting import fit, fit_selected
from plvc_quantile.services.shrinkage import shrinkage_constancy
from plvc_quantile.services.solver import QuantileSolver, psi
from plvc_quantile.splines import SpecLike, build_design, constancy_df, split_design_for_constancy

logger = logging.getLogger(__name__)

# A residualized test column this small relative to its original carries no information
_INFORMATIVE_TOL = 1e-8

Groups = Sequence[slice] | Sequence[np.ndarray]


# =============================================================================
# Projection
# =============================================================================


def residualize(
    test_block: np.ndarray,
    nuisance_block: np.ndarray,
    B: np.ndarray,
    pivot_tol: float | None = None,
    max_condition: float | None = None,
) -> ResidualizedDesign:
    """
    Remove the B-weighted projection onto the nuisance columns from the test block.

    Exactly collinear nuisance columns are dropped by a pivoted QR of
    B^(1/2) W: a column is kept while |R_kk| > pivot_tol * |R_00|.

    Args:
        test_block: N x d_test matrix T.
        nuisance_block: N x d_nuis matrix W.
        B: Positive diagonal weights, length N.
        pivot_tol: Relative pivot threshold (default from settings).
        max_condition: Largest acceptable condition estimate of the kept R factor.

    Returns:
        ResidualizedDesign with D'BW = 0 up to round-off.

    Raises:
        IllConditionedError: The kept nuisance columns are still numerically singular.
    """
    pivot_tol = settings.pivot_tol if pivot_tol is None else pivot_tol
    max_condition = settings.max_condition if max_condition is None else max_condition

    T = np.asarray(test_block, dtype=float).reshape(len(B), -1)
    W = np.asarray(nuisance_block, dtype=float).reshape(len(B), -1)
    b = np.asarray(B, dtype=float)
    if W.shape[1] == 0:
        return ResidualizedDesign(D=T.copy(), W=W, B=b)

    root = np.sqrt(b)[:, None]
    Q, R, piv = linalg.qr(root * W, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.count_nonzero(diag > pivot_tol * diag[0])) if diag[0] > 0 else 0
    kept = np.sort(piv[:rank])
    dropped = tuple(int(j) for j in np.sort(piv[rank:]))
    if dropped:
        logger.debug(f"Dropped {len(dropped)} collinear nuisance columns")

    condition = float(np.linalg.cond(R[:rank, :rank])) if rank else 1.0
    if condition > max_condition:
        raise IllConditionedError("Weighted nuisance design", condition)

    Q1 = Q[:, :rank]
    Tw = root * T
    D = (Tw - Q1 @ (Q1.T @ Tw)) / root
    return ResidualizedDesign(D=D, W=W[:, kept], B=b, dropped=dropped, condition=condition)


def _require_informative(D: np.ndarray, test_block: np.ndarray) -> None:
    reference = np.linalg.norm(test_block, axis=0)
    remaining = np.linalg.norm(D, axis=0)
    if np.any(remaining <= _INFORMATIVE_TOL * reference):
        raise DegenerateDesignError(
            "Tested columns lie in the span of the nuisance design; nothing left to test"
        )


# =============================================================================
# Statistics
# =============================================================================


def estimate_delta(residuals: np.ndarray, groups: Groups) -> float:
    """
    Fraction of ordered intra-subject residual pairs with both residuals negative.

    Raises:
        NoPairsError: Every subject has a single observation.
    """
    r = np.asarray(residuals, dtype=float)
    both = 0
    pairs = 0
    for g in groups:
        neg = int(np.count_nonzero(r[g] < 0))
        m = int(np.size(r[g]))
        both += neg * (neg - 1)
        pairs += m * (m - 1)
    if pairs == 0:
        raise NoPairsError()
    return both / pairs


def rank_score_statistic(
    D: np.ndarray,
    scores: np.ndarray,
    groups: Groups,
    correlation: Correlation = Correlation.EMPIRICAL,
    tau: float | None = None,
    delta: float | None = None,
) -> tuple[np.ndarray, np.ndarray, float]:
    """
    Rank score statistic S' V^-1 S with S = N^(-1/2) D' psi.

    Empirical V = N^-1 sum_i (D_i' psi_i)(D_i' psi_i)'. Exchangeable
    V = N^-1 sum_i D_i' A D_i with A = (delta - tau^2) J + (tau - delta) I.

    Returns:
        (S, V, statistic).

    Raises:
        ArgumentError: Exchangeable form without tau and delta.
        DegenerateDesignError: V is singular.
    """
    D = np.asarray(D, dtype=float).reshape(len(scores), -1)
    n_obs = D.shape[0]
    S = D.T @ scores / math.sqrt(n_obs)

    V = np.zeros((D.shape[1], D.shape[1]))
    if correlation is Correlation.EMPIRICAL:
        for g in groups:
            u = D[g].T @ scores[g]
            V += np.outer(u, u)
    else:
        if tau is None or delta is None:
            raise ArgumentError("Exchangeable covariance needs tau and delta")
        for g in groups:
            s = D[g].sum(axis=0)
            V += (delta - tau**2) * np.outer(s, s) + (tau - delta) * (D[g].T @ D[g])
    V /= n_obs

    eigvals = np.linalg.eigvalsh(V)
    if eigvals[-1] <= 0 or eigvals[0] <= eigvals[-1] / settings.max_condition:
        raise DegenerateDesignError("Score covariance is singular")
    statistic = float(S @ np.linalg.solve(V, S))
    return S, V, max(statistic, 0.0)


def wald_statistic(
    z_star: np.ndarray,
    scores: np.ndarray,
    b: np.ndarray,
    groups: Groups,
    beta: np.ndarray,
    tested: Sequence[int],
) -> tuple[float, np.ndarray]:
    """
    Wald statistic beta_T' [C_TT]^-1 beta_T with sandwich C = K^-1 Lambda K^-1.

    K = Z*' diag(b) Z*, Lambda = sum_i (Z*_i' psi_i)(Z*_i' psi_i)'.

    Returns:
        (statistic, C).

    Raises:
        IllConditionedError: K or C_TT numerically singular.
    """
    Zs = np.asarray(z_star, dtype=float).reshape(len(scores), -1)
    K = Zs.T @ (np.asarray(b)[:, None] * Zs)
    Lam = np.zeros_like(K)
    for g in groups:
        u = Zs[g].T @ scores[g]
        Lam += np.outer(u, u)

    cond_k = float(np.linalg.cond(K))
    if not np.isfinite(cond_k) or cond_k > settings.max_condition:
        raise IllConditionedError("K", cond_k)
    K_inv = np.linalg.inv(K)
    C = K_inv @ Lam @ K_inv

    idx = list(tested)
    C_TT = C[np.ix_(idx, idx)]
    cond_c = float(np.linalg.cond(C_TT))
    if not np.isfinite(cond_c) or cond_c > settings.max_condition:
        raise IllConditionedError("C_TT", cond_c)
    beta_T = np.asarray(beta, dtype=float)[idx]
    statistic = float(beta_T @ np.linalg.solve(C_TT, beta_T))
    return max(statistic, 0.0), C


def _p_value(statistic: float, df: int) -> float:
    return float(min(1.0, max(0.0, chi2.sf(statistic, df))))


# =============================================================================
# Tests on a dataset
# =============================================================================


def _check_indices(tested: Sequence[int], size: int, what: str) -> list[int]:
    idx = [int(j) for j in tested]
    if not idx:
        raise ArgumentError(f"At least one {what} must be tested")
    if len(set(idx)) != len(idx) or any(j < 0 or j >= size for j in idx):
        raise ArgumentError(f"Tested {what} indices {idx} invalid for {size} available")
    return idx


def _weights(
    ds: LongitudinalDataset,
    spec: SpecLike,
    tau: float,
    mode: WeightMode,
    solver: QuantileSolver | None,
) -> np.ndarray:
    if mode is WeightMode.IDENTITY:
        return build_B(None, WeightMode.IDENTITY, n_obs=ds.n_obs)
    return build_B(estimate_weights(ds, spec, tau, solver=solver))


def _rank_score_test(
    ds: LongitudinalDataset,
    test_block: np.ndarray,
    nuisance: np.ndarray,
    b: np.ndarray,
    tau: float,
    correlation: Correlation,
    df: int,
    hypothesis: str,
    solver: QuantileSolver | None,
) -> TestResult:
    solver = solver or get_solver()
    try:
        restricted = solver.solve(QrProblem(nuisance, ds.y, tau))
    except SolverError as e:
        raise FitError(tau, f"restricted fit: {e}") from e

    scores = np.asarray(psi(restricted.residuals, tau))
    design = residualize(test_block, nuisance, b)
    _require_informative(design.D, test_block)

    aux: dict[str, Any] = {
        "orthogonality": design.orthogonality(),
        "condition": design.condition,
        "dropped_nuisance_columns": len(design.dropped),
        "restricted_status": restricted.status.value,
    }
    delta = None
    if correlation is Correlation.EXCHANGEABLE:
        delta = estimate_delta(restricted.residuals, ds.groups)
        aux["delta"] = delta

    _, _, statistic = rank_score_statistic(design.D, scores, ds.groups, correlation, tau, delta)
    method = TestMethod.QRS if correlation is Correlation.EMPIRICAL else TestMethod.QRS_DELTA
    return TestResult(
        method=method,
        statistic=statistic,
        df=df,
        p_value=_p_value(statistic, df),
        tau=tau,
        hypothesis=hypothesis,
        aux=aux,
    )


def rank_score_beta(
    ds: LongitudinalDataset,
    spec: SpecLike,
    tau: float,
    tested: Sequence[int],
    correlation: Correlation = Correlation.EMPIRICAL,
    weights: WeightMode = WeightMode.IDENTITY,
    solver: QuantileSolver | None = None,
) -> TestResult:
    """
    Rank score test of H0: beta_T = 0 for the tested constant-part coefficients.

    The restricted model drops the tested z columns; D residualizes them on
    (Pi, remaining z). Reference distribution chi2(|T|).

    Args:
        ds: Dataset.
        spec: Spline spec(s) of the varying part.
        tau: Quantile level.
        tested: Zero-based indices into the constant part.
        correlation: Empirical per-subject score covariance (QRS) or
            exchangeable working correlation (QRS_delta).
        weights: Identity (default) or estimated density weights.

    Raises:
        ArgumentError: Bad tested set.
        DegenerateDesignError: Tested columns are in the nuisance span.
    """
    idx = _check_indices(tested, ds.q, "constant coefficient")
    Pi, Z = build_design(ds, spec)
    rest = [j for j in range(ds.q) if j not in idx]
    nuisance = np.hstack([Pi, Z[:, rest]])
    b = _weights(ds, spec, tau, weights, solver)
    hypothesis = "beta[" + ",".join(ds.constant_names[j] for j in idx) + "]=0"
    return _rank_score_test(
        ds, Z[:, idx], nuisance, b, tau, correlation, len(idx), hypothesis, solver
    )


def constancy_test(
    ds: LongitudinalDataset,
    spec: SpecLike,
    tau: float,
    tested: Sequence[int],
    correlation: Correlation = Correlation.EMPIRICAL,
    weights: WeightMode = WeightMode.IDENTITY,
    solver: QuantileSolver | None = None,
) -> TestResult:
    """
    Rank score test that the tested varying coefficients are constant in time.

    Under H0 the non-constant spline directions Pi1 are dropped; the
    restricted fit uses (Pi2, Z). Degrees of freedom sum (k_l + degree_l)
    over tested l. The aux map carries the normal approximation
    (t - df) / sqrt(2 df).
    """
    idx = _check_indices(tested, ds.p, "varying coefficient")
    Pi1, Pi2 = split_design_for_constancy(ds, spec, idx)
    nuisance = np.hstack([Pi2, ds.z])
    df = constancy_df(spec, ds.p, idx)
    b = _weights(ds, spec, tau, weights, solver)
    hypothesis = ",".join(ds.varying_names[l] for l in idx) + " constant"
    result = _rank_score_test(ds, Pi1, nuisance, b, tau, correlation, df, hypothesis, solver)
    result.aux["normal_approximation"] = (result.statistic - df) / math.sqrt(2.0 * df)
    return result


def wald_test(
    ds: LongitudinalDataset,
    spec: SpecLike,
    tau: float,
    tested: Sequence[int],
    solver: QuantileSolver | None = None,
) -> TestResult:
    """
    Wald test of H0: beta_T = 0 with the sandwich covariance.

    Uses the unrestricted fit's residual scores, estimated density weights
    B, and Z* = (I - P) Z with P the B-weighted projection onto Pi.

    Raises:
        IllConditionedError: K or C_TT numerically singular.
    """
    idx = _check_indices(tested, ds.q, "constant coefficient")
    full = fit(ds, spec, tau, solver=solver)
    density = estimate_weights(ds, spec, tau, solver=solver)
    b = build_B(density)

    Pi, Z = build_design(ds, spec)
    design = residualize(Z, Pi, b)
    scores = np.asarray(psi(full.residuals, tau))
    statistic, _ = wald_statistic(design.D, scores, b, ds.groups, full.beta, idx)
    return TestResult(
        method=TestMethod.WALD,
        statistic=statistic,
        df=len(idx),
        p_value=_p_value(statistic, len(idx)),
        tau=tau,
        hypothesis="beta[" + ",".join(ds.constant_names[j] for j in idx) + "]=0",
        aux={
            "eps_n": density.eps_n,
            "density_floor_count": density.floor_count,
            "orthogonality": design.orthogonality(),
            "fit_status": full.status.value,
        },
    )


# =============================================================================
# Multi-quantile report
# =============================================================================


def hypothesis_table(
    ds: LongitudinalDataset,
    spec: SpecLike | None,
    taus: Sequence[float],
    beta_tests: Sequence[Sequence[int]] = (),
    constancy_tests: Sequence[Sequence[int]] = (),
    correlation: Correlation = Correlation.EMPIRICAL,
    weights: WeightMode = WeightMode.IDENTITY,
    shrink: bool = True,
    solver: QuantileSolver | None = None,
) -> list[HypothesisRow]:
    """
    Run every hypothesis at every quantile level.

    Args:
        spec: Spline spec(s), or None to select the knots by SIC at each tau.
        beta_tests: Index sets into the constant part, one per hypothesis.
        constancy_tests: Index sets into the varying part, one per hypothesis.
        shrink: Also report the shrinkage norm for constancy hypotheses.

    Returns:
        Rows ordered by tau, then beta hypotheses, then constancy hypotheses.
    """
    rows: list[HypothesisRow] = []
    for tau in taus:
        tau_spec = spec if spec is not None else fit_selected(ds, tau, solver=solver).specs
        for tested in beta_tests:
            result = rank_score_beta(ds, tau_spec, tau, tested, correlation, weights, solver)
            rows.append(_row(result))
        for tested in constancy_tests:
            result = constancy_test(ds, tau_spec, tau, tested, correlation, weights, solver)
            norm = None
            if shrink:
                norm = shrinkage_constancy(ds, tau_spec, tau, tested, solver=solver).xi1_l1norm
            rows.append(_row(result, norm))
    return rows


def _row(result: TestResult, xi1_l1norm: float | None = None) -> HypothesisRow:
    return HypothesisRow(
        tau=float(result.tau if result.tau is not None else float("nan")),
        hypothesis=result.hypothesis,
        method=result.method,
        statistic=result.statistic,
        df=result.df,
        p_value=result.p_value,
        xi1_l1norm=xi1_l1norm,
    )
