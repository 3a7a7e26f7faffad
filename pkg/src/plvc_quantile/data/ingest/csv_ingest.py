"""Longitudinal CSV ingestion.

Files are comma-separated UTF-8 with a header row holding ``subject``,
``time``, ``y`` and the named covariates in any column order. Missing
values are rejected, never imputed.
"""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from plvc_quantile.models.data import INTERCEPT, LongitudinalDataset, ModelSpec
from plvc_quantile.models.errors import EmptyInputError, ParseError, SchemaError

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("subject", "time", "y")


def _numeric(frame: pd.DataFrame, column: str) -> np.ndarray:
    """Parse one column, naming the first offending data row (1-based) on failure."""
    raw = frame[column].str.strip()
    values = pd.to_numeric(raw, errors="coerce").to_numpy(dtype=float)
    bad = ~np.isfinite(values)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ParseError(row=i + 1, column=column, value=frame[column].iloc[i])
    return values


def _block(frame: pd.DataFrame, columns: list[str]) -> np.ndarray:
    if not columns:
        return np.zeros((len(frame), 0))
    return np.column_stack([_numeric(frame, c) for c in columns])


def load_csv(path: str | Path, spec: ModelSpec) -> LongitudinalDataset:
    """
    Load a longitudinal dataset.

    Rows are grouped by subject in order of first appearance and sorted by
    time within subject; times are mapped onto [0, 1].

    Args:
        path: CSV file path.
        spec: Assignment of covariate columns to the varying and constant parts.

    Returns:
        LongitudinalDataset.

    Raises:
        EmptyInputError: No data rows.
        SchemaError: Required or named columns missing.
        ParseError: A non-numeric or non-finite cell (row numbers exclude the header).
    """
    path = Path(path)
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        raise EmptyInputError(str(path)) from None
    if frame.empty:
        raise EmptyInputError(str(path))

    frame.columns = [str(c).strip() for c in frame.columns]
    wanted = [*REQUIRED_COLUMNS, *spec.varying_columns, *spec.constant_columns]
    missing = [c for c in wanted if c not in frame.columns]
    if missing:
        raise SchemaError(missing, str(path))

    time = _numeric(frame, "time")
    y = _numeric(frame, "y")
    x = _block(frame, spec.varying_columns)
    z = _block(frame, spec.constant_columns)

    ds = LongitudinalDataset.from_arrays(
        frame["subject"].str.strip().to_numpy(),
        time,
        y,
        x,
        z,
        varying_names=spec.varying_columns,
        constant_names=spec.constant_columns,
        intercept=spec.intercept_varying,
    )
    logger.info(f"Loaded {ds.n_obs} observations of {ds.n} subjects from {path}")
    return ds


def write_csv(ds: LongitudinalDataset, path: str | Path) -> Path:
    """
    Write a dataset in the format ``load_csv`` reads.

    Times are on the original scale; a prepended intercept column is not written.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    skip = 1 if ds.has_intercept and ds.varying_names[:1] == (INTERCEPT,) else 0
    x_names = ds.varying_names[skip:]
    rows = [
        {
            "subject": obs.subject_id,
            "time": obs.t,
            "y": obs.y,
            **dict(zip(x_names, obs.x[skip:])),
            **dict(zip(ds.constant_names, obs.z)),
        }
        for group in ds.subjects
        for obs in group
    ]
    columns = ["subject", "time", "y", *x_names, *ds.constant_names]
    pd.DataFrame(rows, columns=columns).to_csv(path, index=False)
    return path
