"""Hypothesis testing tools for PLVC Quantile.

Rank score and Wald tests for the constant coefficients, and rank score
tests plus L1 shrinkage for the time-invariance of varying coefficients.
"""

from typing import Any

from plvc_quantile.audit import audit_log
from plvc_quantile.models.errors import ArgumentError
from plvc_quantile.models.inference import TestMethod
from plvc_quantile.server import mcp
from plvc_quantile.services.inference import constancy_test, rank_score_beta, wald_test
from plvc_quantile.services.shrinkage import shrinkage_constancy
from plvc_quantile.services.workflow import (
    check_tau,
    constant_indices,
    correlation_for,
    load_dataset,
    parse_method,
    parse_weights,
    resolve_spec,
    varying_indices,
)


@mcp.tool()
@audit_log
async def test_beta(
    data_path: str,
    coef: str = "",
    tau: float = 0.5,
    varying: str = "",
    constant: str = "",
    method: str = "qrs",
    weights: str = "identity",
    knots: str = "auto",
    degree: int = 3,
) -> dict[str, Any]:
    """
    Test whether constant-part coefficients are zero at one quantile level.

    Args:
        data_path: Path to the CSV file.
        coef: Comma-separated constant covariates to test; empty tests all.
        tau: Quantile level in (0, 1).
        varying: Comma-separated columns with time-varying coefficients.
        constant: Comma-separated columns with constant coefficients.
        method: "qrs" (rank score, empirical per-subject covariance),
                "qrs_delta" (rank score, exchangeable working correlation),
                or "wald" (sandwich covariance with estimated densities).
        weights: "identity" or "estimated" density weights for the rank
                 score projection. Ignored by the Wald test.
        knots: "auto" (SIC selection) or an internal knot count.
        degree: Spline degree (default 3).

    Returns:
        Test result with method, statistic, df, p_value, tau, hypothesis and
        aux diagnostics (projection orthogonality, and delta for qrs_delta).

    Note:
        The Wald test tends to over-reject in small samples; prefer the rank
        score tests when the number of subjects is modest.
    """
    tau = check_tau(tau)
    test_method = parse_method(method)
    ds = load_dataset(data_path, varying, constant)
    tested = constant_indices(ds, coef)
    spec, _ = resolve_spec(ds, tau, knots, degree)

    if test_method is TestMethod.WALD:
        result = wald_test(ds, spec, tau, tested)
    else:
        result = rank_score_beta(
            ds, spec, tau, tested, correlation_for(test_method), parse_weights(weights)
        )
    return result.to_dict()


@mcp.tool()
@audit_log
async def test_constancy(
    data_path: str,
    coef: str,
    tau: float = 0.5,
    varying: str = "",
    constant: str = "",
    method: str = "qrs",
    weights: str = "identity",
    knots: str = "auto",
    degree: int = 3,
) -> dict[str, Any]:
    """
    Test whether varying coefficients are in fact constant over time.

    The tested spline blocks are re-parameterized into a constant level and
    non-constant directions; the rank score statistic measures the evidence
    carried by the non-constant directions.

    Args:
        data_path: Path to the CSV file.
        coef: Comma-separated varying covariates to test (e.g. "x1").
              Use "intercept" to test the baseline curve.
        tau: Quantile level in (0, 1).
        varying: Comma-separated columns with time-varying coefficients.
        constant: Comma-separated columns with constant coefficients.
        method: "qrs" or "qrs_delta". The Wald test is not available here.
        weights: "identity" or "estimated" density weights.
        knots: "auto" (SIC selection) or an internal knot count.
        degree: Spline degree (default 3).

    Returns:
        Test result with statistic, df = sum (k + degree) over tested
        coefficients, chi-squared p_value, and aux holding the normal
        approximation (statistic - df) / sqrt(2 df).
    """
    tau = check_tau(tau)
    test_method = parse_method(method)
    if test_method is TestMethod.WALD:
        raise ArgumentError("The Wald test applies to constant coefficients only")
    ds = load_dataset(data_path, varying, constant)
    tested = varying_indices(ds, coef)
    spec, _ = resolve_spec(ds, tau, knots, degree)
    result = constancy_test(
        ds, spec, tau, tested, correlation_for(test_method), parse_weights(weights)
    )
    return result.to_dict()


@mcp.tool()
@audit_log
async def shrink_constancy(
    data_path: str,
    coef: str,
    tau: float = 0.5,
    varying: str = "",
    constant: str = "",
    knots: str = "auto",
    degree: int = 3,
) -> dict[str, Any]:
    """
    Shrink the non-constant spline directions of varying coefficients.

    An L1 penalty on the non-constant directions is tuned by the Schwarz
    criterion. A zero norm at the chosen penalty suggests the coefficient
    does not change over time at this quantile level.

    Args:
        data_path: Path to the CSV file.
        coef: Comma-separated varying covariates to examine.
        tau: Quantile level in (0, 1).
        varying: Comma-separated columns with time-varying coefficients.
        constant: Comma-separated columns with constant coefficients.
        knots: "auto" (SIC selection) or an internal knot count.
        degree: Spline degree (default 3).

    Returns:
        lambda_star, xi1_l1norm, df, time_invariant and the SIC path.
    """
    tau = check_tau(tau)
    ds = load_dataset(data_path, varying, constant)
    tested = varying_indices(ds, coef)
    spec, _ = resolve_spec(ds, tau, knots, degree)
    return shrinkage_constancy(ds, spec, tau, tested).to_dict()
