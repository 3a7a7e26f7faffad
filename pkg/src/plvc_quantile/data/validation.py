"""Descriptive diagnostics of a longitudinal dataset."""

import numpy as np

from plvc_quantile.models.data import INTERCEPT, LongitudinalDataset, ValidationReport


def validate(ds: LongitudinalDataset) -> ValidationReport:
    """
    Summarize subject counts, visit counts and covariate ranges.

    Warnings flag subjects with a single observation and covariates that never
    vary (the varying intercept is exempt). The dataset is not modified.
    """
    m = ds.m
    warnings: list[str] = []
    singles = int(np.count_nonzero(m == 1))
    if singles:
        warnings.append(f"single-observation subjects present ({singles} of {ds.n})")
    if np.all(m < 2):
        warnings.append("no subject has two or more observations; exchangeable tests unavailable")

    ranges: dict[str, list[float]] = {}
    for j, name in enumerate(ds.varying_names):
        if ds.has_intercept and name == INTERCEPT:
            continue
        column = ds.x[:, j]
        ranges[name] = [float(column.min()), float(column.max())]
        if np.ptp(column) == 0.0:
            warnings.append(f"degenerate varying covariate '{name}'")
    for j, name in enumerate(ds.constant_names):
        column = ds.z[:, j]
        ranges[name] = [float(column.min()), float(column.max())]
        if np.ptp(column) == 0.0:
            warnings.append(f"degenerate constant covariate '{name}'")

    return ValidationReport(
        n_subjects=ds.n,
        n_observations=ds.n_obs,
        min_m=int(m.min()),
        max_m=int(m.max()),
        mean_m=float(m.mean()),
        single_observation_subjects=singles,
        time_range=[ds.time_map.t_min, ds.time_map.t_max],
        covariate_ranges=ranges,
        warnings=warnings,
    )
