"""Glue shared by the command line and the MCP tools.

Turns user-facing arguments (comma-separated column lists, ``auto`` or an
integer knot count, coefficient names) into datasets, spline specs and
index sets for the services.
"""

import logging
from collections.abc import Sequence
from dataclasses import replace
from pathlib import Path

from pydantic import ValidationError

from plvc_quantile.config import settings
from plvc_quantile.data import load_csv
from plvc_quantile.models.data import LongitudinalDataset, ModelSpec
from plvc_quantile.models.errors import ArgumentError
from plvc_quantile.models.fits import KnotSelection, QuantileFit
from plvc_quantile.models.inference import Correlation, TestMethod, WeightMode
from plvc_quantile.models.spline import SplineSpec
from plvc_quantile.services.fitting import fit, select_knots
from plvc_quantile.services.solver import QuantileSolver
from plvc_quantile.splines import make_spec

logger = logging.getLogger(__name__)

AUTO = "auto"


def split_columns(value: str | Sequence[str] | None) -> list[str]:
    """Parse ``"a,b , c"`` (or a list) into column names, dropping blanks."""
    if value is None:
        return []
    items = value.split(",") if isinstance(value, str) else list(value)
    return [item.strip() for item in items if item.strip()]


def load_dataset(
    data_path: str | Path,
    varying: str | Sequence[str] | None,
    constant: str | Sequence[str] | None = None,
    intercept: bool = True,
) -> LongitudinalDataset:
    """
    Load a CSV with the given role assignment.

    Raises:
        ArgumentError: Overlapping or empty role assignment.
        DataError: Missing file content, columns or unparsable cells.
    """
    try:
        spec = ModelSpec(
            varying_columns=split_columns(varying),
            constant_columns=split_columns(constant),
            intercept_varying=intercept,
        )
    except ValidationError as e:
        raise ArgumentError(str(e.errors()[0]["msg"])) from None
    return load_csv(data_path, spec)


def parse_knots(knots: int | str | None) -> int | None:
    """``auto`` or None means SIC selection; otherwise a non-negative integer."""
    if knots is None or (isinstance(knots, str) and knots.strip().lower() == AUTO):
        return None
    try:
        k = int(knots)
    except (TypeError, ValueError):
        raise ArgumentError(
            f"knots must be '{AUTO}' or a non-negative integer, got {knots!r}"
        ) from None
    if k < 0:
        raise ArgumentError(f"knots must be non-negative, got {k}")
    return k


def resolve_spec(
    ds: LongitudinalDataset,
    tau: float,
    knots: int | str | None = AUTO,
    degree: int | None = None,
    placement: str = "uniform",
    solver: QuantileSolver | None = None,
    n_jobs: int | None = None,
) -> tuple[SplineSpec, KnotSelection | None]:
    """
    Spline spec for a fit at ``tau``: explicit knot count, or SIC over the default range.

    Returns:
        (spec, KnotSelection when the knots were chosen automatically).
    """
    degree = settings.default_degree if degree is None else degree
    k = parse_knots(knots)
    selection = None
    if k is None:
        k, selection = select_knots(
            ds, tau, degree, placement=placement, solver=solver, n_jobs=n_jobs
        )
    spec = make_spec(k, degree, placement, ds.t)  # type: ignore[arg-type]
    return spec, selection


def fit_with_knots(
    ds: LongitudinalDataset,
    tau: float,
    knots: int | str | None = AUTO,
    degree: int | None = None,
    placement: str = "uniform",
    solver: QuantileSolver | None = None,
    n_jobs: int | None = None,
) -> QuantileFit:
    """Fit at ``tau`` with the resolved spec; the SIC table rides on automatic fits."""
    spec, selection = resolve_spec(ds, tau, knots, degree, placement, solver, n_jobs)
    result = fit(ds, spec, tau, solver=solver)
    return replace(result, knot_selection=selection) if selection else result


def varying_indices(ds: LongitudinalDataset, names: str | Sequence[str]) -> list[int]:
    """Positions of named varying coefficients (``intercept`` included when present)."""
    wanted = split_columns(names)
    if not wanted:
        raise ArgumentError("Name at least one varying coefficient to test")
    return [ds.varying_index(name) for name in wanted]


def constant_indices(ds: LongitudinalDataset, names: str | Sequence[str] | None) -> list[int]:
    """Positions of named constant coefficients; all of them when none are named."""
    wanted = split_columns(names)
    if not wanted:
        if ds.q == 0:
            raise ArgumentError("The model has no constant coefficients to test")
        return list(range(ds.q))
    return [ds.constant_index(name) for name in wanted]


def check_tau(tau: float) -> float:
    """Reject quantile levels outside (0, 1)."""
    if not 0.0 < tau < 1.0:
        raise ArgumentError(f"tau must lie in (0, 1), got {tau}")
    return float(tau)


def parse_taus(value: str | Sequence[float]) -> list[float]:
    """Parse a comma-separated tau list and check each level."""
    if isinstance(value, str):
        try:
            taus = [float(v) for v in split_columns(value)]
        except ValueError:
            raise ArgumentError(f"Could not parse tau list {value!r}") from None
    else:
        taus = [float(v) for v in value]
    if not taus:
        raise ArgumentError("tau list must be non-empty")
    return [check_tau(t) for t in taus]


def parse_method(value: str | TestMethod) -> TestMethod:
    """Accept ``qrs``, ``qrs-delta``/``qrs_delta`` or ``wald``."""
    if isinstance(value, TestMethod):
        return value
    try:
        return TestMethod(value.strip().lower().replace("-", "_"))
    except ValueError:
        choices = ", ".join(m.value for m in TestMethod)
        raise ArgumentError(f"Unknown test method '{value}' (choose from {choices})") from None


def parse_weights(value: str | WeightMode) -> WeightMode:
    """Accept ``identity`` or ``estimated``."""
    if isinstance(value, WeightMode):
        return value
    try:
        return WeightMode(value.strip().lower())
    except ValueError:
        raise ArgumentError(f"Unknown weight mode '{value}'") from None


def correlation_for(method: TestMethod) -> Correlation:
    """Score covariance form matching a rank score method."""
    return Correlation.EXCHANGEABLE if method is TestMethod.QRS_DELTA else Correlation.EMPIRICAL
