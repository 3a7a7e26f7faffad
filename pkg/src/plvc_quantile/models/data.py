"""Longitudinal dataset models.

Observations are grouped by subject (in order of first appearance) and sorted
by time within subject. Times are mapped affinely onto [0, 1] for the spline
basis; the original scale is kept for reporting.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Any

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, model_validator

from plvc_quantile.models.errors import ArgumentError, DataError

INTERCEPT = "intercept"


def _as_columns(values: Any, n_rows: int) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(n_rows, 1)
    if arr.ndim != 2 or arr.shape[0] != n_rows:
        raise ArgumentError(f"Covariate block has shape {arr.shape}, expected {n_rows} rows")
    return arr


class Observation(BaseModel):
    """A single timestamped record of one subject."""

    subject_id: str = Field(..., description="Subject identifier")
    t: float = Field(..., description="Measurement time (original units)")
    y: float = Field(..., description="Response")
    x: list[float] = Field(..., description="Varying-part covariates (length p)")
    z: list[float] = Field(default_factory=list, description="Constant-part covariates (length q)")

    @model_validator(mode="after")
    def _check_finite(self) -> Observation:
        values = [self.t, self.y, *self.x, *self.z]
        if not all(math.isfinite(v) for v in values):
            raise ValueError(f"Non-finite value in observation of subject '{self.subject_id}'")
        if not self.x:
            raise ValueError("At least one varying covariate is required")
        return self


class ModelSpec(BaseModel):
    """Assignment of CSV columns to the varying and constant parts."""

    varying_columns: list[str] = Field(
        default_factory=list,
        description="Columns whose coefficients vary smoothly with time (x)",
    )
    constant_columns: list[str] = Field(
        default_factory=list,
        description="Columns with time-invariant coefficients (z)",
    )
    intercept_varying: bool = Field(
        default=True,
        description="Prepend a column of ones to x (time-varying baseline)",
    )

    @model_validator(mode="after")
    def _check_roles(self) -> ModelSpec:
        overlap = set(self.varying_columns) & set(self.constant_columns)
        if overlap:
            raise ValueError(f"Columns assigned to both parts: {sorted(overlap)}")
        if not self.varying_columns and not self.intercept_varying:
            raise ValueError("At least one varying column is required")
        return self

    @property
    def varying_names(self) -> list[str]:
        """Names of the x columns including the intercept when requested."""
        return ([INTERCEPT] if self.intercept_varying else []) + list(self.varying_columns)


class TimeMap(BaseModel):
    """Affine map from the observed time range onto [0, 1]."""

    t_min: float
    t_max: float

    @property
    def span(self) -> float:
        return self.t_max - self.t_min

    def forward(self, t: Any) -> np.ndarray:
        """Map original times to [0, 1], clamping round-off at the ends."""
        arr = np.asarray(t, dtype=float)
        if self.span <= 0:
            return np.zeros_like(arr)
        return np.clip((arr - self.t_min) / self.span, 0.0, 1.0)

    def inverse(self, u: Any) -> np.ndarray:
        """Map [0, 1] back to the original time scale."""
        return self.t_min + np.asarray(u, dtype=float) * self.span

    def contains(self, t: Any, rtol: float = 1e-12) -> bool:
        """Check that every time lies within the observed range."""
        arr = np.asarray(t, dtype=float)
        slack = rtol * max(1.0, abs(self.t_min), abs(self.t_max))
        return bool(np.all((arr >= self.t_min - slack) & (arr <= self.t_max + slack)))


@dataclass(frozen=True, eq=False)
class LongitudinalDataset:
    """n subjects with m_i timestamped records each.

    Rows are stored subject-contiguous; ``offsets[i]:offsets[i+1]`` is the
    row range of subject i. All arrays are read-only after construction.
    """

    subject_ids: tuple[str, ...]
    subject: np.ndarray
    time: np.ndarray
    t: np.ndarray
    y: np.ndarray
    x: np.ndarray
    z: np.ndarray
    varying_names: tuple[str, ...]
    constant_names: tuple[str, ...]
    time_map: TimeMap
    offsets: np.ndarray
    has_intercept: bool = False

    def __post_init__(self) -> None:
        for name in ("time", "y", "x", "z"):
            values = getattr(self, name)
            if not np.all(np.isfinite(values)):
                raise DataError(f"Dataset field '{name}' contains non-finite values")
        if self.x.ndim != 2 or self.x.shape[1] < 1:
            raise DataError("At least one varying covariate is required")
        for arr in (self.subject, self.time, self.t, self.y, self.x, self.z, self.offsets):
            arr.setflags(write=False)

    # ------------------------------------------------------------------
    # Construction
    # ------------------------------------------------------------------

    @classmethod
    def from_arrays(
        cls,
        subject: Sequence[Any] | np.ndarray,
        time: Sequence[float] | np.ndarray,
        y: Sequence[float] | np.ndarray,
        x: np.ndarray,
        z: np.ndarray | None = None,
        varying_names: Sequence[str] | None = None,
        constant_names: Sequence[str] | None = None,
        intercept: bool = False,
    ) -> LongitudinalDataset:
        """
        Build a dataset from flat per-row arrays.

        Rows may come in any order; they are grouped by subject in order of
        first appearance and sorted by time within subject.

        Args:
            subject: Subject label per row (converted to str).
            time: Measurement time per row, original units.
            y: Response per row.
            x: Varying-part covariates, shape (N, p) or (N,).
            z: Constant-part covariates, shape (N, q); None for q = 0.
            varying_names: Names of the x columns (excluding the intercept).
            constant_names: Names of the z columns.
            intercept: Prepend a column of ones to x.

        Returns:
            LongitudinalDataset with time_map fitted to the observed range.
        """
        labels = np.asarray([str(s) for s in subject], dtype=object)
        time_arr = np.asarray(time, dtype=float)
        y_arr = np.asarray(y, dtype=float)
        n_rows = len(labels)
        if n_rows == 0:
            raise DataError("Dataset has no observations")

        x_arr = _as_columns(x, n_rows)
        z_arr = np.zeros((n_rows, 0)) if z is None else _as_columns(z, n_rows)
        if len(time_arr) != n_rows or len(y_arr) != n_rows:
            raise ArgumentError("subject, time and y must have equal length")

        x_names = list(varying_names) if varying_names is not None else [
            f"x{j + 1}" for j in range(x_arr.shape[1])
        ]
        z_names = list(constant_names) if constant_names is not None else [
            f"z{j + 1}" for j in range(z_arr.shape[1])
        ]
        if len(x_names) != x_arr.shape[1] or len(z_names) != z_arr.shape[1]:
            raise ArgumentError("Covariate names do not match covariate columns")
        if intercept:
            x_arr = np.column_stack([np.ones(n_rows), x_arr])
            x_names = [INTERCEPT, *x_names]

        codes, uniques = pd.factorize(labels, sort=False)
        order = np.lexsort((time_arr, codes))
        codes = codes[order]
        counts = np.bincount(codes, minlength=len(uniques))
        offsets = np.concatenate([[0], np.cumsum(counts)]).astype(int)

        time_sorted = time_arr[order]
        finite_time = time_sorted[np.isfinite(time_sorted)]
        if finite_time.size == 0:
            raise DataError("Dataset has no finite times")
        time_map = TimeMap(t_min=float(finite_time.min()), t_max=float(finite_time.max()))

        return cls(
            subject_ids=tuple(str(u) for u in uniques),
            subject=codes.astype(int),
            time=time_sorted,
            t=time_map.forward(time_sorted),
            y=y_arr[order],
            x=x_arr[order],
            z=z_arr[order],
            varying_names=tuple(x_names),
            constant_names=tuple(z_names),
            time_map=time_map,
            has_intercept=intercept,
            offsets=offsets,
        )

    # ------------------------------------------------------------------
    # Shape
    # ------------------------------------------------------------------

    @property
    def n(self) -> int:
        """Number of subjects."""
        return len(self.subject_ids)

    @property
    def n_obs(self) -> int:
        """Total number of observations N."""
        return int(self.y.shape[0])

    @property
    def p(self) -> int:
        return int(self.x.shape[1])

    @property
    def q(self) -> int:
        return int(self.z.shape[1])

    @property
    def m(self) -> np.ndarray:
        """Observation count per subject."""
        return np.diff(self.offsets)

    @property
    def groups(self) -> list[slice]:
        """Row slice of each subject, in subject order."""
        return [slice(int(a), int(b)) for a, b in zip(self.offsets[:-1], self.offsets[1:])]

    @property
    def subjects(self) -> list[list[Observation]]:
        """Subject groups as lists of Observation records."""
        return [
            [
                Observation(
                    subject_id=self.subject_ids[i],
                    t=float(self.time[r]),
                    y=float(self.y[r]),
                    x=self.x[r].tolist(),
                    z=self.z[r].tolist(),
                )
                for r in range(g.start, g.stop)
            ]
            for i, g in enumerate(self.groups)
        ]

    def varying_index(self, name: str) -> int:
        """Position of a varying coefficient by column name."""
        try:
            return self.varying_names.index(name)
        except ValueError:
            raise ArgumentError(f"Unknown varying covariate '{name}'") from None

    def constant_index(self, name: str) -> int:
        """Position of a constant coefficient by column name."""
        try:
            return self.constant_names.index(name)
        except ValueError:
            raise ArgumentError(f"Unknown constant covariate '{name}'") from None


class ValidationReport(BaseModel):
    """Descriptive diagnostics of a dataset. Never mutates the dataset."""

    n_subjects: int = Field(..., description="Number of subjects n")
    n_observations: int = Field(..., description="Total observations N")
    min_m: int = Field(..., description="Smallest per-subject observation count")
    max_m: int = Field(..., description="Largest per-subject observation count")
    mean_m: float = Field(..., description="Mean per-subject observation count")
    single_observation_subjects: int = Field(
        default=0, description="Subjects with m_i = 1"
    )
    time_range: list[float] = Field(..., description="Observed [min, max] time")
    covariate_ranges: dict[str, list[float]] = Field(
        default_factory=dict, description="Observed [min, max] per covariate"
    )
    warnings: list[str] = Field(default_factory=list, description="Warnings")

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for JSON output."""
        return self.model_dump()
