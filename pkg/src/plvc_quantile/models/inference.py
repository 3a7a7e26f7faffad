"""Models for density weights, residualized designs and hypothesis tests."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel, Field


class TestMethod(str, Enum):
    """Hypothesis test flavours."""

    WALD = "wald"
    QRS = "qrs"
    QRS_DELTA = "qrs_delta"


class Correlation(str, Enum):
    """Working score covariance for the rank score tests."""

    EMPIRICAL = "empirical"
    EXCHANGEABLE = "exchangeable"


class WeightMode(str, Enum):
    """Density weights used in the projections."""

    ESTIMATED = "estimated"
    IDENTITY = "identity"


class TestResult(BaseModel):
    """Outcome of a Wald or rank score test."""

    __test__ = False

    method: TestMethod = Field(..., description="Test flavour")
    statistic: float = Field(..., ge=0.0, description="Test statistic")
    df: int = Field(..., ge=1, description="Chi-square degrees of freedom")
    p_value: float = Field(..., ge=0.0, le=1.0, description="Upper-tail chi-square p-value")
    tau: float | None = Field(default=None, description="Quantile level")
    hypothesis: str = Field(default="", description="Tested coefficients")
    aux: dict[str, Any] = Field(default_factory=dict, description="Diagnostics")

    def rejects(self, level: float = 0.05) -> bool:
        """Whether the null is rejected at the given level."""
        return self.p_value < level

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for JSON output."""
        return self.model_dump(mode="json")


@dataclass(frozen=True, eq=False)
class DensityWeights:
    """Difference-quotient estimates of f_ij(0) at one quantile level."""

    tau: float
    eps_n: float
    f_hat: np.ndarray
    floor_count: int = 0

    def __post_init__(self) -> None:
        if np.any(self.f_hat <= 0):
            raise ValueError("Density weights must be positive")


@dataclass(frozen=True, eq=False)
class ResidualizedDesign:
    """Test block with the B-weighted projection on the nuisance block removed.

    ``W`` keeps only the nuisance columns retained by the pivoted QR;
    ``dropped`` lists the collinear ones (original column indices).
    """

    D: np.ndarray
    W: np.ndarray
    B: np.ndarray
    dropped: tuple[int, ...] = ()
    condition: float = 1.0

    def orthogonality(self) -> float:
        """Relative size of D'BW, zero up to round-off."""
        cross = self.D.T @ (self.B[:, None] * self.W)
        scale = float(np.linalg.norm(self.D) * np.linalg.norm(self.W))
        if scale == 0.0:
            return 0.0
        return float(np.linalg.norm(cross) / scale)


class ShrinkagePathEntry(BaseModel):
    """One point of the L1 shrinkage path."""

    lam: float = Field(..., ge=0.0, description="Penalty weight")
    sic: float = Field(..., description="log(check loss) + log(N)/(2N) * df")
    loss: float = Field(..., ge=0.0, description="Check loss at the solution")
    df: int = Field(..., ge=0, description="Coefficients above the zero threshold")
    xi1_l1norm: float = Field(..., ge=0.0, description="L1 norm of the penalized block")


class ShrinkageResult(BaseModel):
    """SIC-tuned L1 shrinkage of the non-constant spline directions."""

    tau: float = Field(..., description="Quantile level")
    tested: list[str] = Field(..., description="Varying coefficients examined")
    lambda_star: float = Field(..., ge=0.0, description="SIC-minimizing penalty")
    xi1_l1norm: float = Field(..., ge=0.0, description="L1 norm of the penalized block at lambda*")
    df: int = Field(..., ge=0, description="Nonzero coefficient count at lambda*")
    time_invariant: bool = Field(..., description="Penalized block shrunk to zero at lambda*")
    sic_path: list[ShrinkagePathEntry] = Field(default_factory=list, description="Path")

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for JSON output."""
        return self.model_dump()


class HypothesisRow(BaseModel):
    """One line of a multi-quantile hypothesis table."""

    tau: float
    hypothesis: str
    method: TestMethod
    statistic: float
    df: int
    p_value: float
    xi1_l1norm: float | None = None
