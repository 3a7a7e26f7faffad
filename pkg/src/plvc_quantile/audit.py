"""Run ledger for CLI subcommands and MCP tools.

Every invocation appends one JSON line (timestamp, tool, parameters, status,
result summary or error type) to ``settings.audit_log_path``. Ledger write
failures are logged and never abort a computation.
"""

import asyncio
import json
import logging
from collections.abc import Callable
from datetime import datetime, timezone
from functools import wraps
from pathlib import Path
from typing import Any, Literal, TypeVar

import numpy as np
from pydantic import BaseModel, Field, ValidationError

from plvc_quantile.config import settings
from plvc_quantile.models.errors import AuditLogError

logger = logging.getLogger(__name__)

F = TypeVar("F", bound=Callable[..., Any])

_MAX_ITEMS = 20


def _sanitize_value(value: Any) -> Any:
    """Shrink parameter values to something small and JSON-friendly."""
    if isinstance(value, Path):
        return str(value)
    if isinstance(value, np.ndarray):
        return f"array{list(value.shape)}"
    if isinstance(value, str) and len(value) > 1000:
        return value[:1000] + "...[truncated]"
    if isinstance(value, (list, tuple)) and len(value) > _MAX_ITEMS:
        return [*value[:_MAX_ITEMS], f"...[{len(value) - _MAX_ITEMS} more]"]
    return value


def _sanitize_params(params: dict[str, Any]) -> dict[str, Any]:
    return {key: _sanitize_value(value) for key, value in params.items()}


def _summarize_result(result: Any) -> str:
    """Brief summary of a result for the ledger."""
    if result is None:
        return "None"
    if isinstance(result, int):
        return f"exit code {result}"
    if isinstance(result, dict):
        for keys in (("statistic", "p_value"), ("tau", "objective"), ("lambda_star",)):
            if all(k in result for k in keys):
                return ", ".join(f"{k}={result[k]}" for k in keys)
        return f"Dict with keys: {list(result.keys())[:5]}"
    if isinstance(result, list):
        return f"List with {len(result)} items"
    return str(type(result).__name__)


def _write_entry(entry: dict[str, Any]) -> None:
    log_path = settings.audit_log
    try:
        log_path.parent.mkdir(parents=True, exist_ok=True)
        with open(log_path, "a", encoding="utf-8") as f:
            f.write(json.dumps(entry, default=str) + "\n")
    except OSError as e:
        logger.error(f"Failed to write run ledger: {e}")
        raise AuditLogError(f"Failed to write run ledger: {e}") from e


def record_run(
    tool: str,
    params: dict[str, Any],
    result: Any = None,
    error: BaseException | None = None,
) -> None:
    """Append one ledger entry; write failures are logged, not raised."""
    entry: dict[str, Any] = {
        "timestamp": datetime.now(timezone.utc).isoformat(),
        "tool": tool,
        "params": _sanitize_params(params),
    }
    if error is None:
        entry["status"] = "success"
        entry["result_summary"] = _summarize_result(result)
    else:
        entry["status"] = "error"
        entry["error"] = str(error)
        entry["error_type"] = type(error).__name__
    try:
        _write_entry(entry)
    except AuditLogError:
        pass


def audit_log(func: F) -> F:
    """
    Record every call of a (sync or async) tool function in the run ledger.

    Usage:
        @mcp.tool()
        @audit_log
        async def fit_model(data_path: str, tau: float) -> dict:
            ...
    """

    @wraps(func)
    async def async_wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            result = await func(*args, **kwargs)
        except Exception as e:
            record_run(func.__name__, kwargs, error=e)
            raise
        record_run(func.__name__, kwargs, result=result)
        return result

    @wraps(func)
    def sync_wrapper(*args: Any, **kwargs: Any) -> Any:
        try:
            result = func(*args, **kwargs)
        except Exception as e:
            record_run(func.__name__, kwargs, error=e)
            raise
        record_run(func.__name__, kwargs, result=result)
        return result

    if asyncio.iscoroutinefunction(func):
        return async_wrapper  # type: ignore[return-value]
    return sync_wrapper  # type: ignore[return-value]


class RunRecord(BaseModel):
    """One ledger line read back."""

    timestamp: datetime = Field(..., description="UTC time the run finished")
    tool: str = Field(..., description="MCP tool name or cli.<subcommand>")
    params: dict[str, Any] = Field(default_factory=dict, description="Sanitized parameters")
    status: Literal["success", "error"] = Field(..., description="Run outcome")
    result_summary: str | None = Field(default=None, description="Short result summary")
    error: str | None = Field(default=None, description="Error message of a failed run")
    error_type: str | None = Field(default=None, description="Exception class of a failed run")

    @property
    def tau(self) -> float | None:
        """Scalar quantile level of the run; None for grids or runs without one."""
        try:
            return float(self.params["tau"])
        except (KeyError, TypeError, ValueError):
            return None


def read_runs(
    tool: str | None = None,
    tau: float | None = None,
    status: str | None = None,
    limit: int | None = None,
) -> list[RunRecord]:
    """
    Ledger records, newest first.

    Lines that are not valid records are skipped with a warning.

    Args:
        tool: Only runs of this tool or ``cli.<subcommand>``.
        tau: Only runs at this scalar quantile level.
        status: Only ``success`` or ``error`` runs.
        limit: Keep at most this many of the newest matches.
    """
    log_path = settings.audit_log
    if not log_path.exists():
        return []

    records: list[RunRecord] = []
    skipped = 0
    with open(log_path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            try:
                record = RunRecord.model_validate_json(line)
            except ValidationError:
                skipped += 1
                continue
            if tool is not None and record.tool != tool:
                continue
            if status is not None and record.status != status:
                continue
            if tau is not None and (record.tau is None or abs(record.tau - tau) > 1e-12):
                continue
            records.append(record)
    if skipped:
        logger.warning(f"Skipped {skipped} unreadable run ledger lines in {log_path}")

    records.reverse()
    return records if limit is None else records[:limit]
