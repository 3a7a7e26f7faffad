"""Fitted PLVC quantile models and their JSON documents."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np
from pydantic import BaseModel, Field

from plvc_quantile.models.data import TimeMap
from plvc_quantile.models.errors import ArgumentError
from plvc_quantile.models.solver import SolverStatus
from plvc_quantile.models.spline import SplineSpec

# =============================================================================
# Documents (JSON artifacts)
# =============================================================================


class SicEntry(BaseModel):
    """Schwarz criterion for one candidate number of internal knots."""

    k: int = Field(..., ge=0, description="Number of internal knots")
    sic: float = Field(..., description="log(check loss) + log(N)/(2N) * n_params")
    loss: float = Field(..., ge=0, description="Check loss at the fit")
    n_params: int = Field(..., description="p * (degree + k + 1) + q")


class KnotSelection(BaseModel):
    """Outcome of the SIC search over the number of internal knots."""

    selected_k: int = Field(..., description="Minimizing k (smallest on ties)")
    degree: int = Field(..., description="Spline degree used for every candidate")
    entries: list[SicEntry] = Field(default_factory=list, description="SIC table in k order")

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for JSON output."""
        return self.model_dump()


class SplineDoc(BaseModel):
    """Knot layout of one coefficient block."""

    degree: int
    knots: list[float] = Field(..., description="Internal knots in (0, 1)")


class FitDocument(BaseModel):
    """JSON form of a QuantileFit."""

    tau: float = Field(..., description="Quantile level")
    degree: int = Field(..., description="Spline degree")
    knots: list[float] = Field(..., description="Internal knots on the [0, 1] scale")
    time_range: list[float] = Field(..., description="Observed [min, max] time")
    varying_names: list[str] = Field(..., description="Varying covariates, in theta row order")
    constant_names: list[str] = Field(default_factory=list, description="Constant covariates")
    theta: list[list[float]] = Field(..., description="Spline coefficients per varying covariate")
    beta: list[float] = Field(default_factory=list, description="Constant-part coefficients")
    objective: float = Field(..., description="Check loss at the solution")
    status: str = Field(..., description="Solver status")
    n_obs: int = Field(..., description="Number of observations")
    coefficient_splines: list[SplineDoc] | None = Field(
        default=None, description="Per-coefficient knot layouts when they differ"
    )
    knot_selection: KnotSelection | None = Field(
        default=None, description="SIC table when knots were selected automatically"
    )

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for JSON output."""
        return self.model_dump(exclude_none=True)


class ProcessDocument(BaseModel):
    """JSON form of a QuantileProcess."""

    taus: list[float] = Field(..., description="Quantile grid")
    fits: list[FitDocument] = Field(..., description="One fit per grid point")

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for JSON output."""
        return self.model_dump(exclude_none=True)


class QQPair(BaseModel):
    """Matched quantiles of observed and simulated responses."""

    prob: float
    observed: float
    simulated: float


class AssessmentResult(BaseModel):
    """Simulated responses near t* against the observed window, for a Q-Q plot."""

    model: str = Field(default="plvc", description="Model the process was fitted with")
    t_star: float = Field(..., description="Assessment time (original scale)")
    tol: float = Field(..., description="Matching distance")
    n_draws: int = Field(..., description="Number of simulated responses")
    seed: int = Field(..., description="Random seed")
    window_size: int = Field(..., description="Observations within tol of t*")
    simulated: list[float] = Field(default_factory=list, description="Simulated Y*")
    observed: list[float] = Field(default_factory=list, description="Observed y in the window")
    qq: list[QQPair] = Field(default_factory=list, description="Q-Q pairs")

    def to_dict(self) -> dict[str, Any]:
        """Convert to dictionary for JSON output."""
        return self.model_dump()


# =============================================================================
# Numerical containers
# =============================================================================


@dataclass(frozen=True, eq=False)
class QuantileFit:
    """PLVC fit at one quantile level.

    ``theta_blocks[l]`` holds the spline coefficients of varying covariate l;
    residuals are in dataset row order.
    """

    tau: float
    specs: tuple[SplineSpec, ...]
    theta_blocks: tuple[np.ndarray, ...]
    beta: np.ndarray
    objective: float
    residuals: np.ndarray
    status: SolverStatus
    time_map: TimeMap
    varying_names: tuple[str, ...]
    constant_names: tuple[str, ...] = ()
    knot_selection: KnotSelection | None = field(default=None, repr=False)

    @property
    def p(self) -> int:
        return len(self.specs)

    @property
    def q(self) -> int:
        return int(self.beta.shape[0])

    @property
    def spec(self) -> SplineSpec:
        """The shared spline spec (the first coefficient's when overridden)."""
        return self.specs[0]

    @property
    def shared_spec(self) -> bool:
        return all(s == self.specs[0] for s in self.specs)

    @property
    def theta(self) -> np.ndarray:
        """The p x basis_dim coefficient block."""
        if not self.shared_spec:
            raise ArgumentError("Per-coefficient specs have no theta matrix; use theta_blocks")
        return np.vstack(self.theta_blocks)

    @property
    def coefficients(self) -> np.ndarray:
        """Stacked (theta_1, ..., theta_p, beta) in design column order."""
        return np.concatenate([*self.theta_blocks, self.beta])

    @property
    def n_params(self) -> int:
        return int(sum(s.basis_dim for s in self.specs)) + self.q

    def to_document(self) -> FitDocument:
        """Build the JSON document for this fit."""
        per_coefficient = None
        if not self.shared_spec:
            per_coefficient = [
                SplineDoc(degree=s.degree, knots=list(s.internal_knots)) for s in self.specs
            ]
        return FitDocument(
            tau=self.tau,
            degree=self.spec.degree,
            knots=list(self.spec.internal_knots),
            time_range=[self.time_map.t_min, self.time_map.t_max],
            varying_names=list(self.varying_names),
            constant_names=list(self.constant_names),
            theta=[block.tolist() for block in self.theta_blocks],
            beta=self.beta.tolist(),
            objective=self.objective,
            status=self.status.value,
            n_obs=int(self.residuals.shape[0]),
            coefficient_splines=per_coefficient,
            knot_selection=self.knot_selection,
        )


@dataclass(frozen=True, eq=False)
class QuantileProcess:
    """Independent fits over a strictly increasing tau grid sharing one spec."""

    taus: np.ndarray
    fits: tuple[QuantileFit, ...]

    def __post_init__(self) -> None:
        if len(self.taus) != len(self.fits):
            raise ArgumentError("One fit per tau is required")
        if np.any(np.diff(self.taus) <= 0):
            raise ArgumentError("tau grid must be strictly increasing")

    def to_document(self) -> ProcessDocument:
        """Build the JSON document for this process."""
        return ProcessDocument(
            taus=[float(t) for t in self.taus],
            fits=[f.to_document() for f in self.fits],
        )
