"""Published JSON schemas for the command-line artifacts."""

from plvc_quantile.resources.schemas import (
    DOCUMENT_MODELS,
    SCHEMA_NAMES,
    get_schema,
    validate_document,
)

__all__ = ["DOCUMENT_MODELS", "SCHEMA_NAMES", "get_schema", "validate_document"]
