"""Tests for the run ledger."""

import json
from unittest.mock import patch

import numpy as np
import pytest

from plvc_quantile.audit import (
    _sanitize_params,
    _summarize_result,
    _write_entry,
    audit_log,
    read_runs,
    record_run,
)
from plvc_quantile.models.errors import ArgumentError, AuditLogError


class TestSanitizeParams:
    """Tests for parameter sanitization."""

    def test_should_pass_through_small_values(self):
        # Arrange
        params = {"tau": 0.5, "knots": "auto", "taus": [0.25, 0.5]}

        # Act
        result = _sanitize_params(params)

        # Assert
        assert result == params

    def test_should_truncate_long_strings(self):
        # Act
        result = _sanitize_params({"varying": "x" * 1500})

        # Assert
        assert len(result["varying"]) == 1000 + len("...[truncated]")
        assert result["varying"].endswith("...[truncated]")

    def test_should_describe_arrays_by_shape(self):
        # Act
        result = _sanitize_params({"weights": np.ones((3, 2))})

        # Assert
        assert result["weights"] == "array[3, 2]"

    def test_should_cut_long_lists(self):
        # Act
        result = _sanitize_params({"lambdas": list(range(25))})

        # Assert
        assert result["lambdas"][:20] == list(range(20))
        assert result["lambdas"][-1] == "...[5 more]"


class TestSummarizeResult:
    """Tests for result summaries."""

    def test_should_return_none_string_for_none(self):
        # Act / Assert
        assert _summarize_result(None) == "None"

    def test_should_report_exit_codes(self):
        # Act / Assert
        assert _summarize_result(2) == "exit code 2"

    def test_should_pick_test_fields_from_a_result(self):
        # Act
        result = _summarize_result({"statistic": 3.1, "p_value": 0.08, "df": 1})

        # Assert
        assert result == "statistic=3.1, p_value=0.08"

    def test_should_pick_fit_fields_from_a_document(self):
        # Act
        result = _summarize_result({"tau": 0.5, "objective": 12.0, "theta": []})

        # Assert
        assert result == "tau=0.5, objective=12.0"

    def test_should_list_keys_of_other_dicts(self):
        # Act / Assert
        assert _summarize_result({"a": 1}) == "Dict with keys: ['a']"

    def test_should_count_list_items(self):
        # Act / Assert
        assert _summarize_result([1, 2, 3]) == "List with 3 items"


class TestRecordRun:
    """Tests for ledger writing."""

    def test_should_append_success_entry(self, isolated_ledger):
        # Act
        record_run("cli.fit", {"tau": 0.5}, result=0)

        # Assert
        entry = json.loads(isolated_ledger.read_text().strip())
        assert entry["tool"] == "cli.fit"
        assert entry["status"] == "success"
        assert entry["result_summary"] == "exit code 0"
        assert entry["params"] == {"tau": 0.5}
        assert "timestamp" in entry

    def test_should_record_error_type(self, isolated_ledger):
        # Act
        record_run("cli.fit", {}, error=ArgumentError("bad tau"))

        # Assert
        entry = json.loads(isolated_ledger.read_text().strip())
        assert entry["status"] == "error"
        assert entry["error_type"] == "ArgumentError"
        assert entry["error"] == "bad tau"

    def test_should_raise_ledger_error_on_unwritable_path(self):
        # Act / Assert
        with patch("builtins.open", side_effect=PermissionError("denied")):
            with pytest.raises(AuditLogError):
                _write_entry({"tool": "x"})

    def test_should_swallow_ledger_errors_when_recording(self):
        # Act / Assert
        with patch("builtins.open", side_effect=PermissionError("denied")):
            record_run("cli.fit", {})


class TestAuditLogDecorator:
    """Tests for the tool decorator."""

    @pytest.mark.asyncio
    async def test_should_record_async_calls(self):
        # Arrange
        @audit_log
        async def fit_model(data_path: str, tau: float = 0.5) -> dict:
            return {"tau": tau, "objective": 1.0}

        # Act
        result = await fit_model(data_path="d.csv", tau=0.25)

        # Assert
        assert result["tau"] == 0.25
        records = read_runs(tool="fit_model")
        assert len(records) == 1
        assert records[0].params == {"data_path": "d.csv", "tau": 0.25}
        assert records[0].result_summary == "tau=0.25, objective=1.0"

    def test_should_record_sync_failures_and_reraise(self):
        # Arrange
        @audit_log
        def failing(tau: float) -> None:
            raise ArgumentError("tau must lie in (0, 1)")

        # Act
        with pytest.raises(ArgumentError):
            failing(tau=2.0)

        # Assert
        records = read_runs(tool="failing")
        assert records[0].status == "error"
        assert records[0].error_type == "ArgumentError"


class TestReadRuns:
    """Tests for reading the ledger back."""

    def test_should_return_empty_list_without_ledger(self):
        # Act / Assert
        assert read_runs() == []

    def test_should_return_newest_first_and_respect_limit(self):
        # Arrange
        for i in range(5):
            record_run("cli.fit", {"i": i})

        # Act
        records = read_runs(limit=2)

        # Assert
        assert [r.params["i"] for r in records] == [4, 3]

    def test_should_filter_by_tool(self):
        # Arrange
        record_run("cli.fit", {})
        record_run("cli.simulate", {})

        # Act
        records = read_runs(tool="cli.simulate")

        # Assert
        assert [r.tool for r in records] == ["cli.simulate"]

    def test_should_filter_by_scalar_tau_including_string_values(self):
        # Arrange
        record_run("cli.fit", {"tau": "0.25"})
        record_run("cli.fit", {"tau": "0.25,0.5"})
        record_run("test_beta", {"tau": 0.5})
        record_run("test_beta", {"tau": 0.25})

        # Act
        records = read_runs(tau=0.25)

        # Assert
        assert [(r.tool, r.tau) for r in records] == [("test_beta", 0.25), ("cli.fit", 0.25)]

    def test_should_filter_by_status(self):
        # Arrange
        record_run("cli.fit", {}, result=0)
        record_run("cli.fit", {}, error=ArgumentError("bad"))

        # Act
        records = read_runs(status="error")

        # Assert
        assert len(records) == 1
        assert records[0].error_type == "ArgumentError"
        assert records[0].result_summary is None

    def test_should_skip_unreadable_lines_and_keep_valid_records(self, isolated_ledger):
        # Arrange
        record_run("cli.fit", {"tau": 0.5}, result=0)
        with open(isolated_ledger, "a", encoding="utf-8") as f:
            f.write("not json\n")
            f.write(json.dumps({"tool": "cli.fit"}) + "\n")
        record_run("cli.shrink", {"tau": 0.5}, result=0)

        # Act
        records = read_runs()

        # Assert
        assert [r.tool for r in records] == ["cli.shrink", "cli.fit"]
