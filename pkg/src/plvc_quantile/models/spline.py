"""B-spline basis configuration models."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
from pydantic import BaseModel, Field, model_validator


class SplineSpec(BaseModel):
    """Normalized B-spline basis of order degree+1 over [0, 1].

    The full knot vector repeats each boundary knot degree+1 times, so the
    basis has k_internal + degree + 1 functions summing to one on [0, 1].
    """

    model_config = {"frozen": True}

    degree: int = Field(..., ge=0, description="Spline degree h (3 = cubic)")
    knots: tuple[float, ...] = Field(..., description="Full knot vector over [0, 1]")

    @model_validator(mode="after")
    def _check_knots(self) -> SplineSpec:
        k = self.degree
        knots = np.asarray(self.knots, dtype=float)
        if len(knots) < 2 * (k + 1):
            raise ValueError("Knot vector shorter than 2 * (degree + 1)")
        if np.any(np.diff(knots) < 0):
            raise ValueError("Knot vector must be non-decreasing")
        if np.any(knots[: k + 1] != 0.0) or np.any(knots[-(k + 1) :] != 1.0):
            raise ValueError("Boundary knots 0 and 1 must each have multiplicity degree + 1")
        internal = knots[k + 1 : len(knots) - k - 1]
        if internal.size and (np.any(internal <= 0.0) or np.any(internal >= 1.0)):
            raise ValueError("Internal knots must lie strictly inside (0, 1)")
        if internal.size > 1 and np.any(np.diff(internal) <= 0):
            raise ValueError("Internal knots must be strictly increasing")
        return self

    @property
    def k_internal(self) -> int:
        """Number of internal knots k_n."""
        return len(self.knots) - 2 * (self.degree + 1)

    @property
    def internal_knots(self) -> tuple[float, ...]:
        return self.knots[self.degree + 1 : len(self.knots) - self.degree - 1]

    @property
    def basis_dim(self) -> int:
        """Number of basis functions, k_n + degree + 1."""
        return self.k_internal + self.degree + 1

    @property
    def knot_array(self) -> np.ndarray:
        return np.asarray(self.knots, dtype=float)

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for JSON output."""
        return {
            "degree": self.degree,
            "k_internal": self.k_internal,
            "internal_knots": list(self.internal_knots),
            "basis_dim": self.basis_dim,
        }


@dataclass(frozen=True, eq=False)
class ConstancyTransform:
    """Invertible G with G @ pi(t) = (1, pi_bar(t)).

    The first row of G is all ones (partition of unity); the remaining rows are
    identity rows, so pi_bar(t) = (B_2(t), ..., B_K(t)).
    """

    G: np.ndarray
    reduced_dim: int

    @property
    def G_inv(self) -> np.ndarray:
        """Closed-form inverse: first row (1, -1, ..., -1), identity below."""
        inv = np.eye(self.G.shape[0])
        inv[0, 1:] = -1.0
        return inv

    def reduced_basis(self, basis: np.ndarray) -> np.ndarray:
        """Drop the first basis column, giving pi_bar for each row."""
        return np.asarray(basis)[..., 1:]
