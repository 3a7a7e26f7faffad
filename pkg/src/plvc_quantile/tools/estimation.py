"""Dataset validation, model fitting and knot selection tools for PLVC Quantile."""

from typing import Any

from plvc_quantile.audit import audit_log
from plvc_quantile.data import validate
from plvc_quantile.server import mcp
from plvc_quantile.services.fitting import select_knots as _select_knots
from plvc_quantile.services.workflow import check_tau, fit_with_knots, load_dataset

_MAX_DEGREE = 5
_MAX_KNOTS = 50


@mcp.tool()
@audit_log
async def validate_dataset(
    data_path: str,
    varying: str = "",
    constant: str = "",
    intercept: bool = True,
) -> dict[str, Any]:
    """
    Load a longitudinal CSV and summarize its structure.

    The file needs ``subject``, ``time`` and ``y`` columns plus every named
    covariate. Rows are grouped by subject and sorted by time.

    Args:
        data_path: Path to the CSV file.
        varying: Comma-separated columns with time-varying coefficients.
                 Examples: "x1,x2", "cd4_pre"
        constant: Comma-separated columns with constant coefficients.
        intercept: Include a time-varying intercept (default True).

    Returns:
        Validation report with:
        - n_subjects, n_observations: Counts n and N
        - min_m, max_m, mean_m: Per-subject observation counts
        - single_observation_subjects: Subjects with one record
        - time_range, covariate_ranges: Observed ranges
        - warnings: e.g. single-observation subjects or constant covariates
    """
    ds = load_dataset(data_path, varying, constant, intercept)
    return validate(ds).to_dict()


@mcp.tool()
@audit_log
async def fit_model(
    data_path: str,
    tau: float = 0.5,
    varying: str = "",
    constant: str = "",
    knots: str = "auto",
    degree: int = 3,
    intercept: bool = True,
) -> dict[str, Any]:
    """
    Fit a partially linear varying coefficient quantile regression model.

    The tau-th conditional quantile of y is modelled as
    sum_l x_l alpha_l(t) + z' beta, with each alpha_l a B-spline in time.

    Args:
        data_path: Path to the CSV file.
        tau: Quantile level in (0, 1), e.g. 0.5 for the median.
        varying: Comma-separated columns with time-varying coefficients.
        constant: Comma-separated columns with constant coefficients.
        knots: "auto" to choose the number of internal knots by the
               Schwarz criterion, or an integer count (0-50).
        degree: Spline degree (0-5, default 3 for cubic splines).
        intercept: Include a time-varying intercept (default True).

    Returns:
        Fit document with tau, degree, internal knots (on [0, 1]),
        time_range, theta (spline coefficients per varying covariate),
        beta, objective (check loss), solver status, and knot_selection
        (the SIC table) when knots="auto".
    """
    tau = check_tau(tau)
    degree = max(0, min(_MAX_DEGREE, degree))
    if knots.strip().lower() != "auto" and knots.strip().isdigit():
        knots = str(min(_MAX_KNOTS, int(knots)))

    ds = load_dataset(data_path, varying, constant, intercept)
    result = fit_with_knots(ds, tau, knots, degree)
    return result.to_document().to_dict()


@mcp.tool()
@audit_log
async def select_knots(
    data_path: str,
    tau: float = 0.5,
    varying: str = "",
    constant: str = "",
    degree: int = 3,
    k_max: int | None = None,
    intercept: bool = True,
) -> dict[str, Any]:
    """
    Choose the number of internal knots by the Schwarz information criterion.

    SIC(k) = log(check loss) + log(N) / (2N) * (p (degree + k + 1) + q).

    Args:
        data_path: Path to the CSV file.
        tau: Quantile level in (0, 1).
        varying: Comma-separated columns with time-varying coefficients.
        constant: Comma-separated columns with constant coefficients.
        degree: Spline degree (0-5, default 3).
        k_max: Largest candidate count; default ceil(N^(1/5)) + 2.
        intercept: Include a time-varying intercept (default True).

    Returns:
        selected_k, degree and the SIC table (k, sic, loss, n_params per candidate).
    """
    tau = check_tau(tau)
    degree = max(0, min(_MAX_DEGREE, degree))
    k_range = None if k_max is None else range(1, max(1, min(_MAX_KNOTS, k_max)) + 1)

    ds = load_dataset(data_path, varying, constant, intercept)
    _, selection = _select_knots(ds, tau, degree, k_range)
    return selection.to_dict()
