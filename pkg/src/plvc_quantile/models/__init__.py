"""Data models for datasets, fits, tests and Monte Carlo studies."""

from plvc_quantile.models.data import (
    INTERCEPT,
    LongitudinalDataset,
    ModelSpec,
    Observation,
    TimeMap,
    ValidationReport,
)
from plvc_quantile.models.errors import (
    ArgumentError,
    AuditLogError,
    DataError,
    NumericalError,
    PLVCError,
    ReplicateFailureError,
    SplineError,
)
from plvc_quantile.models.fits import (
    AssessmentResult,
    FitDocument,
    KnotSelection,
    ProcessDocument,
    QuantileFit,
    QuantileProcess,
)
from plvc_quantile.models.inference import (
    Correlation,
    HypothesisRow,
    ShrinkageResult,
    TestMethod,
    TestResult,
    WeightMode,
)
from plvc_quantile.models.simulation import McReport, SimulationConfig, StudyTest
from plvc_quantile.models.spline import SplineSpec

__all__ = [
    "INTERCEPT",
    "ArgumentError",
    "AssessmentResult",
    "AuditLogError",
    "Correlation",
    "DataError",
    "FitDocument",
    "HypothesisRow",
    "KnotSelection",
    "LongitudinalDataset",
    "McReport",
    "ModelSpec",
    "NumericalError",
    "Observation",
    "PLVCError",
    "ProcessDocument",
    "QuantileFit",
    "QuantileProcess",
    "ReplicateFailureError",
    "ShrinkageResult",
    "SimulationConfig",
    "SplineError",
    "SplineSpec",
    "StudyTest",
    "TestMethod",
    "TestResult",
    "TimeMap",
    "ValidationReport",
    "WeightMode",
]
