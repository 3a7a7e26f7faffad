"""Models for weighted check-loss minimization problems."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from plvc_quantile.models.errors import ArgumentError


class SolverStatus(str, Enum):
    """Outcome of a quantile LP solve."""

    OPTIMAL = "optimal"
    MAX_ITER = "max-iter"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class Penalty:
    """L1 penalty lam * sum_{j in indices} |b_j|."""

    indices: tuple[int, ...]
    lam: float

    def __post_init__(self) -> None:
        if not self.indices:
            raise ArgumentError("Penalty index set must be non-empty")
        if self.lam < 0 or not np.isfinite(self.lam):
            raise ArgumentError(f"Penalty lambda must be finite and >= 0 (got {self.lam})")


@dataclass(frozen=True, eq=False)
class QrProblem:
    """Minimize sum_i w_i rho_tau(y_i - x_i'b) (+ optional L1 penalty)."""

    design: np.ndarray
    response: np.ndarray
    tau: float
    weights: np.ndarray | None = None
    penalty: Penalty | None = None

    def __post_init__(self) -> None:
        design = np.atleast_2d(np.asarray(self.design, dtype=float))
        response = np.asarray(self.response, dtype=float).ravel()
        object.__setattr__(self, "design", design)
        object.__setattr__(self, "response", response)
        if not 0.0 < self.tau < 1.0:
            raise ArgumentError(f"tau must lie in (0, 1) (got {self.tau})")
        if design.shape[0] != response.shape[0]:
            raise ArgumentError(
                f"Design has {design.shape[0]} rows but response has {response.shape[0]}"
            )
        if self.weights is not None:
            weights = np.asarray(self.weights, dtype=float).ravel()
            if weights.shape != response.shape or np.any(weights <= 0):
                raise ArgumentError("Weights must be positive with one entry per observation")
            object.__setattr__(self, "weights", weights)
        if self.penalty is not None and any(
            j < 0 or j >= design.shape[1] for j in self.penalty.indices
        ):
            raise ArgumentError("Penalty indices out of range for the design")

    @property
    def n_obs(self) -> int:
        return int(self.design.shape[0])

    @property
    def n_params(self) -> int:
        return int(self.design.shape[1])

    @property
    def weight_vector(self) -> np.ndarray:
        return np.ones(self.n_obs) if self.weights is None else self.weights


@dataclass(frozen=True, eq=False)
class QrSolution:
    """Minimizer of a QrProblem.

    ``objective`` equals the check loss of ``residuals`` (plus the penalty
    term when one was requested).
    """

    coefficients: np.ndarray
    objective: float
    residuals: np.ndarray
    status: SolverStatus
    rank: int
    method: str = ""
    iterations: int = 0
    certificate: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_zero_residuals(self) -> int:
        return int(np.count_nonzero(self.residuals == 0.0))
