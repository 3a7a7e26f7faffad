"""Monte Carlo study configuration and reports."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, Field, model_validator

from plvc_quantile.models.data import LongitudinalDataset
from plvc_quantile.models.inference import TestMethod, WeightMode

Truth = Literal["plvc", "lcc", "constancy"]
Hypothesis = Literal["beta", "constancy"]


class SimulationConfig(BaseModel):
    """Data-generating design of a Monte Carlo study.

    Cases: 1 exchangeable normal errors, 2 AR(1) normal errors in continuous
    time, 3 exchangeable multivariate t(3) errors. Errors are scaled by
    (1 + |x1|) after centering at their tau-quantile.
    """

    case: Literal[1, 2, 3] = Field(default=1, description="Error structure")
    n: int = Field(default=100, ge=2, description="Number of subjects")
    tau: float = Field(default=0.5, gt=0.0, lt=1.0, description="Quantile level")
    beta: float = Field(default=1.0, description="Effect of the constant covariate z")
    eta: float = Field(default=1.0, description="Departure of alpha_1 from constancy")
    rho: float = Field(default=0.8, ge=0.0, lt=1.0, description="Base within-subject correlation")
    reps: int = Field(default=100, ge=1, description="Replicate count")
    seed: int = Field(default=0, ge=0, description="Root seed")
    truth: Truth = Field(default="plvc", description="Coefficient functions to simulate from")
    degree: int = Field(default=3, ge=0, description="Spline degree used for fitting")
    knots: int | None = Field(
        default=None, ge=0, description="Internal knots; None selects by SIC per replicate"
    )

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for JSON output."""
        return self.model_dump()


class StudyTest(BaseModel):
    """Which hypothesis a level/power study tests, and how."""

    hypothesis: Hypothesis = Field(default="beta", description="beta = 0, or alpha_1 constant")
    methods: list[TestMethod] = Field(
        default_factory=lambda: [TestMethod.QRS, TestMethod.QRS_DELTA, TestMethod.WALD],
        description="Tests to apply to every replicate",
    )
    weights: WeightMode = Field(default=WeightMode.IDENTITY, description="Rank score weights")
    level: float = Field(default=0.05, gt=0.0, lt=1.0, description="Nominal level")

    @model_validator(mode="after")
    def _check_methods(self) -> StudyTest:
        if not self.methods:
            raise ValueError("At least one test method is required")
        if self.hypothesis == "constancy" and TestMethod.WALD in self.methods:
            raise ValueError("The Wald test applies to beta only")
        return self


class MethodRate(BaseModel):
    """Rejection frequency of one test."""

    method: str
    rejections: int = Field(..., ge=0)
    trials: int = Field(..., ge=0)
    rate: float = Field(..., ge=0.0, le=1.0)
    se: float = Field(..., ge=0.0, description="Binomial standard error")


class EstimatorSummary(BaseModel):
    """Monte Carlo accuracy of one estimator of beta."""

    estimator: str
    trials: int = Field(..., ge=0)
    mse: float = Field(..., ge=0.0)
    bias: float
    se_mse: float = Field(..., ge=0.0, description="Monte Carlo standard error of the MSE")
    alpha_mse: list[float] | None = Field(
        default=None, description="Average squared error of each alpha_l at the design points"
    )


class McReport(BaseModel):
    """Result of a Monte Carlo study."""

    study: str = Field(..., description="level-power, mse or power-curve")
    config: SimulationConfig
    reps: int
    failures: int = Field(default=0, description="Replicates with a failed fit or test")
    target: str | None = Field(default=None, description="Swept parameter of a power curve")
    value: float | None = Field(default=None, description="Value of the swept parameter")
    rates: list[MethodRate] = Field(default_factory=list)
    estimators: list[EstimatorSummary] = Field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for JSON output."""
        return self.model_dump(mode="json")

    def to_csv_rows(self) -> list[dict[str, Any]]:
        """One flat row per test method and per estimator."""
        base = {
            "study": self.study,
            "case": self.config.case,
            "n": self.config.n,
            "tau": self.config.tau,
            "beta": self.config.beta,
            "eta": self.config.eta,
            "rho": self.config.rho,
            "truth": self.config.truth,
            "reps": self.reps,
            "failures": self.failures,
        }
        rows: list[dict[str, Any]] = []
        for r in self.rates:
            rows.append({**base, "kind": "test", "name": r.method, "rate": r.rate, "se": r.se})
        for e in self.estimators:
            rows.append(
                {
                    **base,
                    "kind": "estimator",
                    "name": e.estimator,
                    "se": e.se_mse,
                    "mse": e.mse,
                    "bias": e.bias,
                }
            )
        return rows


@dataclass(frozen=True, eq=False)
class SimulatedDataset:
    """A generated dataset with the truth it was drawn from.

    ``alpha_true[r, l]`` is alpha_l at row r's time, in dataset row order.
    """

    dataset: LongitudinalDataset
    replicate: int
    alpha_true: np.ndarray
    beta_true: np.ndarray
    errors: np.ndarray
