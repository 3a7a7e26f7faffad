"""Integration tests for MCP tool registration and execution."""

import pytest

from plvc_quantile.server import mcp

TOOLS = {
    "validate_dataset",
    "fit_model",
    "select_knots",
    "test_beta",
    "test_constancy",
    "shrink_constancy",
    "simulate_study",
}


class TestMCPToolRegistration:
    """Tests for MCP tool registration."""

    @pytest.mark.asyncio
    async def test_should_register_every_tool(self) -> None:
        tools = await mcp.get_tools()

        assert TOOLS <= set(tools.keys())

    @pytest.mark.asyncio
    async def test_should_have_tool_descriptions(self) -> None:
        tools = await mcp.get_tools()

        for name, tool in tools.items():
            assert tool.description, f"Tool {name} missing description"
            assert len(tool.description) > 20, f"Tool {name} description too short"


class TestMCPToolExecution:
    """End-to-end calls through the registered tool objects."""

    @pytest.mark.asyncio
    async def test_should_fit_then_test_the_same_file(self, sim_csv) -> None:
        tools = await mcp.get_tools()
        common = {"data_path": str(sim_csv), "varying": "x1,x2,x3", "constant": "z"}

        fitted = await tools["fit_model"].fn(tau=0.5, knots="1", **common)
        tested = await tools["test_beta"].fn(coef="z", tau=0.5, knots="1", **common)

        assert fitted["constant_names"] == ["z"]
        assert tested["tau"] == 0.5
        assert isinstance(tested["statistic"], float)
