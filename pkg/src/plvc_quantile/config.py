"""Configuration settings for PLVC Quantile."""

from pathlib import Path

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables.

    All settings can be overridden via environment variables with the
    PLVC_QR_ prefix (e.g., PLVC_QR_THREADS=4).
    """

    model_config = SettingsConfigDict(
        env_prefix="PLVC_QR_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # MCP Transport Configuration (stdio only)
    mcp_transport: str = "stdio"

    # Parallelism: default worker cap for replicates, knot and tau sweeps
    threads: int = 1

    # Spline defaults
    default_degree: int = 3

    # LP solver
    # Dual simplex up to this many observations, interior point above it
    simplex_max_rows: int = 200
    solver_max_iter: int = 100_000
    # Residuals below this (relative to max|y|) are exact zeros
    zero_residual_tol: float = 1e-9

    # Projections and inference
    pivot_tol: float = 1e-10
    max_condition: float = 1e12
    density_cap: float = 1e3
    significance_level: float = 0.05

    # Shrinkage
    shrinkage_zero_tol: float = 1e-6

    # Monte Carlo
    mc_failure_cap: float = 0.05

    # Logging Configuration
    log_level: str = "INFO"
    audit_log_path: str = "./logs/runs.jsonl"

    @property
    def audit_log(self) -> Path:
        """Return run ledger path as Path object."""
        return Path(self.audit_log_path)


settings = Settings()
