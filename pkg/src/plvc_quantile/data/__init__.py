"""Dataset ingestion and validation."""

from plvc_quantile.data.ingest import load_csv, write_csv
from plvc_quantile.data.validation import validate

__all__ = ["load_csv", "validate", "write_csv"]
