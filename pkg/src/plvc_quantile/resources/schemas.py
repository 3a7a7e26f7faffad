"""JSON schema loader.

Schemas ship in ``resources/data/<name>.schema.json``. Each one
describes a document written by the command line and mirrors the pydantic
model that produces it, which is also what ``validate_document`` checks
against.
"""

import json
import logging
from functools import lru_cache
from importlib import resources
from typing import Any

from pydantic import BaseModel, ValidationError

from plvc_quantile.models.data import ValidationReport
from plvc_quantile.models.errors import ArgumentError
from plvc_quantile.models.fits import AssessmentResult, FitDocument, KnotSelection, ProcessDocument
from plvc_quantile.models.inference import HypothesisRow, ShrinkageResult, TestResult
from plvc_quantile.models.simulation import McReport

logger = logging.getLogger(__name__)

DOCUMENT_MODELS: dict[str, type[BaseModel]] = {
    "fit": FitDocument,
    "process": ProcessDocument,
    "knot_selection": KnotSelection,
    "test_result": TestResult,
    "shrinkage": ShrinkageResult,
    "hypothesis_row": HypothesisRow,
    "mc_report": McReport,
    "validation": ValidationReport,
    "assessment": AssessmentResult,
}

SCHEMA_NAMES = tuple(sorted(DOCUMENT_MODELS))


@lru_cache(maxsize=None)
def get_schema(name: str) -> dict[str, Any]:
    """
    Load a published schema by name.

    Raises:
        ArgumentError: Unknown schema name.
    """
    if name not in DOCUMENT_MODELS:
        raise ArgumentError(f"Unknown schema '{name}' (available: {', '.join(SCHEMA_NAMES)})")
    text = resources.files(__package__).joinpath("data", f"{name}.schema.json").read_text("utf-8")
    schema: dict[str, Any] = json.loads(text)
    return schema


def validate_document(name: str, document: dict[str, Any]) -> BaseModel:
    """
    Check a JSON document against the model behind schema ``name``.

    Raises:
        ArgumentError: Unknown schema name, or the document does not conform.
    """
    get_schema(name)
    try:
        return DOCUMENT_MODELS[name].model_validate(document)
    except ValidationError as e:
        logger.debug(f"Document failed '{name}' validation: {e}")
        raise ArgumentError(f"Document does not match schema '{name}': {e.error_count()} error(s)")
