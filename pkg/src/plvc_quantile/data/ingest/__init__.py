"""CSV ingestion of longitudinal datasets."""

from plvc_quantile.data.ingest.csv_ingest import REQUIRED_COLUMNS, load_csv, write_csv

__all__ = ["REQUIRED_COLUMNS", "load_csv", "write_csv"]
