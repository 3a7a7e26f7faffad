"""Tests for the validation, fitting and knot selection tools."""

import pytest

from plvc_quantile.audit import read_runs
from plvc_quantile.models.errors import ArgumentError, SchemaError

VARYING = "x1,x2,x3"


@pytest.mark.asyncio
class TestValidateDataset:
    """Tests for validate_dataset tool."""

    async def test_should_summarize_simulated_file(self, sim_csv, sim_dataset):
        from plvc_quantile.tools.estimation import validate_dataset

        func = validate_dataset.fn
        result = await func(data_path=str(sim_csv), varying=VARYING, constant="z")

        assert result["n_subjects"] == sim_dataset.n
        assert result["n_observations"] == sim_dataset.n_obs
        assert result["min_m"] >= 1

    async def test_should_reject_missing_columns(self, sim_csv):
        from plvc_quantile.tools.estimation import validate_dataset

        func = validate_dataset.fn
        with pytest.raises(SchemaError):
            await func(data_path=str(sim_csv), varying="cd4")

    async def test_should_reject_overlapping_roles(self, sim_csv):
        from plvc_quantile.tools.estimation import validate_dataset

        func = validate_dataset.fn
        with pytest.raises(ArgumentError):
            await func(data_path=str(sim_csv), varying="x1", constant="x1")


@pytest.mark.asyncio
class TestFitModel:
    """Tests for fit_model tool."""

    async def test_should_fit_with_fixed_knots(self, sim_csv):
        from plvc_quantile.tools.estimation import fit_model

        func = fit_model.fn
        result = await func(
            data_path=str(sim_csv), tau=0.5, varying=VARYING, constant="z", knots="1"
        )

        assert result["tau"] == 0.5
        assert result["knots"] == [0.5]
        assert len(result["theta"]) == 4
        assert len(result["beta"]) == 1
        assert "knot_selection" not in result

    async def test_should_attach_sic_table_when_knots_are_automatic(self, sim_csv):
        from plvc_quantile.tools.estimation import fit_model

        func = fit_model.fn
        result = await func(data_path=str(sim_csv), tau=0.5, varying=VARYING, constant="z")

        selection = result["knot_selection"]
        assert selection["selected_k"] == len(result["knots"])
        assert [e["k"] for e in selection["entries"]] == sorted(
            e["k"] for e in selection["entries"]
        )

    async def test_should_reject_tau_outside_unit_interval(self, sim_csv):
        from plvc_quantile.tools.estimation import fit_model

        func = fit_model.fn
        with pytest.raises(ArgumentError, match="tau"):
            await func(data_path=str(sim_csv), tau=1.5, varying=VARYING)

    async def test_should_record_call_in_run_ledger(self, sim_csv):
        from plvc_quantile.tools.estimation import fit_model

        func = fit_model.fn
        await func(data_path=str(sim_csv), tau=0.25, varying=VARYING, constant="z", knots="0")

        records = read_runs(tool="fit_model", tau=0.25)
        assert len(records) == 1
        assert records[0].status == "success"


@pytest.mark.asyncio
class TestSelectKnots:
    """Tests for select_knots tool."""

    async def test_should_limit_candidates_to_k_max(self, sim_csv):
        from plvc_quantile.tools.estimation import select_knots

        func = select_knots.fn
        result = await func(
            data_path=str(sim_csv), tau=0.5, varying=VARYING, constant="z", k_max=2
        )

        assert [e["k"] for e in result["entries"]] == [1, 2]
        assert result["selected_k"] in (1, 2)
        assert result["degree"] == 3
