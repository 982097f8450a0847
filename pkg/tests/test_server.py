"""
Tests for the UAV Base Station Planner MCP tools
"""

import inspect
import json

import pytest
from fastmcp import Client
from pydantic import BaseModel, Field, ValidationError

from uavbs_planner.errors import DomainError, handle_error_inline
from uavbs_planner.scenario import ScenarioDocument, save_scenario
from uavbs_planner.server import (
    compare_single_tier,
    evaluate_link,
    generate_scenario,
    mcp,
    search_config,
    solve_scenario,
)

FAST = {"grid_rows": 2, "grid_cols": 3, "epsilon_g": 50.0}


def inline(scenario) -> dict:
    return ScenarioDocument.from_scenario(scenario).model_dump(mode="json")


def tool_payload(result) -> dict:
    content = getattr(result, "content", result)
    return json.loads(content[0].text)


class TestToolRegistration:
    """Test the MCP tool surface."""

    async def test_tools_listed(self):
        """Test every planner tool is registered."""
        async with Client(mcp) as client:
            tools = await client.list_tools()
        names = {tool.name for tool in tools}
        assert {"generate_scenario", "solve_scenario", "evaluate_link", "compare_single_tier"} <= names

    def test_tools_stay_plain_functions(self):
        """Test registration leaves the module functions directly callable."""
        for tool in (generate_scenario, solve_scenario, evaluate_link, compare_single_tier):
            assert inspect.isfunction(tool)
        assert evaluate_link(0.0, 0.0, 100.0, 100.0, 0.0, 1e6)["success"] is True

    async def test_tool_schema_exposes_refinement(self):
        """Test the solve tool advertises its zoom setting."""
        async with Client(mcp) as client:
            tools = {tool.name: tool for tool in await client.list_tools()}
        assert "refine_levels" in tools["solve_scenario"].inputSchema["properties"]

    async def test_call_evaluate_link(self):
        """Test a link evaluation through the client."""
        async with Client(mcp) as client:
            result = await client.call_tool("evaluate_link", {
                "uav_x": 0.0, "uav_y": 0.0, "uav_h": 100.0,
                "user_x": 100.0, "user_y": 0.0, "bandwidth_hz": 1e6,
            })
        payload = tool_payload(result)
        assert payload["success"] is True
        assert payload["link"]["elevation_deg"] == pytest.approx(45.0)

    async def test_call_solve_inline(self, tiny_scenario):
        """Test solving an inline scenario through the client."""
        async with Client(mcp) as client:
            result = await client.call_tool("solve_scenario", {"scenario": inline(tiny_scenario), **FAST})
        payload = tool_payload(result)
        assert payload["success"] is True
        assert payload["audit_violations"] == []


class TestEvaluateLink:
    """Test the link evaluation tool."""

    def test_overhead_link(self):
        """Test a UAV directly above the user."""
        result = evaluate_link(50.0, 50.0, 200.0, 50.0, 50.0, 1e6)
        link = result["link"]
        assert result["success"] is True
        assert link["elevation_deg"] == 90.0
        assert 0.0 < link["p_los"] <= 1.0
        assert 0.0 < link["rate_bps"] < link["rate_ceiling_bps"]

    def test_environment_changes_los(self):
        """Test urban environments see less line of sight."""
        suburban = evaluate_link(0.0, 0.0, 100.0, 300.0, 0.0, 1e6)["link"]
        highrise = evaluate_link(0.0, 0.0, 100.0, 300.0, 0.0, 1e6, environment="highrise")["link"]
        assert highrise["p_los"] < suburban["p_los"]
        assert highrise["pathloss_db"] > suburban["pathloss_db"]

    def test_coincident_points(self):
        """Test a UAV on the ground at the user's position."""
        result = evaluate_link(10.0, 10.0, 0.0, 10.0, 10.0, 1e6)
        assert result["error"] is True
        assert result["error_type"] == "GeometryError"

    def test_unknown_environment(self):
        """Test an unknown environment name."""
        result = evaluate_link(0.0, 0.0, 100.0, 10.0, 0.0, 1e6, environment="lunar")
        assert result["error_type"] == "DomainError"
        assert "lunar" in result["error_message"]


class TestSolveScenario:
    """Test the solve tool."""

    def test_inline_gss(self, tiny_scenario):
        """Test GSS serves every user of the loose scenario."""
        result = solve_scenario(scenario=inline(tiny_scenario), **FAST)
        solution = result["solution"]
        assert result["success"] is True
        assert solution["solver"] == "gss"
        assert solution["served_users"] == 6
        assert solution["profit"] == pytest.approx(5.6)
        assert solution["normalized_profit"] == pytest.approx(1.0)
        assert solution["knapsack_solves"] == (2 * solution["iterations"] + 1 + 2) * 6
        assert set(solution["assignment"]) == set(solution["per_user_bandwidth_hz"])

    @pytest.mark.parametrize("solver", ["random", "fixed"])
    def test_heuristics(self, tiny_scenario, solver):
        """Test heuristic solvers through the tool."""
        result = solve_scenario(scenario=inline(tiny_scenario), solver=solver, **FAST)
        assert result["solution"]["solver"] == solver
        assert result["audit_violations"] == []

    def test_file_in_file_out(self, tmp_path, tiny_scenario):
        """Test reading a scenario file and writing the solution."""
        path = save_scenario(tiny_scenario, tmp_path / "scenario.json")
        out = tmp_path / "out" / "solution.json"
        result = solve_scenario(scenario_path=str(path), out_path=str(out), **FAST)
        assert result["out_path"] == str(out)
        written = json.loads(out.read_text())
        assert written["profit"] == pytest.approx(result["solution"]["profit"])

    def test_unknown_solver(self, tiny_scenario):
        """Test an unknown solver name."""
        result = solve_scenario(scenario=inline(tiny_scenario), solver="annealing")
        assert result["error"] is True
        assert result["error_type"] == "DomainError"

    def test_needs_exactly_one_source(self, tmp_path, tiny_scenario):
        """Test scenario_path and scenario are mutually exclusive."""
        path = save_scenario(tiny_scenario, tmp_path / "scenario.json")
        assert solve_scenario()["error_type"] == "DomainError"
        both = solve_scenario(scenario_path=str(path), scenario=inline(tiny_scenario))
        assert both["error_type"] == "DomainError"

    def test_schema_error_details(self, tiny_scenario):
        """Test schema failures list field paths."""
        document = inline(tiny_scenario)
        document["users"][1] = ["west", 2.0]
        result = solve_scenario(scenario=document)
        assert result["error_type"] == "ScenarioSchemaError"
        assert "users.1.0" in [d["field"] for d in result["details"]]


class TestGenerateScenario:
    """Test the generation tool."""

    def test_inline_documents(self):
        """Test scenarios returned inline with consecutive seeds."""
        result = generate_scenario(n=6, m=2, tier_set=2, seed=3, count=2)
        assert result["count"] == 2
        assert [s["summary"]["seed"] for s in result["scenarios"]] == [3, 4]
        assert result["scenarios"][0]["scenario"]["tiers_bps"] == [1e6, 2e6, 4e6]

    def test_written_files(self, tmp_path):
        """Test scenarios written to a directory."""
        result = generate_scenario(n=6, seed=10, count=2, out_dir=str(tmp_path))
        paths = [entry["path"] for entry in result["scenarios"]]
        assert [p.split("/")[-1] for p in paths] == ["scenario_10.json", "scenario_11.json"]
        assert all((tmp_path / p.split("/")[-1]).exists() for p in paths)

    def test_invalid_arguments(self):
        """Test count and tier set validation."""
        assert generate_scenario(count=0)["error_type"] == "DomainError"
        assert generate_scenario(tier_set=7)["error_type"] == "ValidationError"


class TestCompareSingleTier:
    """Test the pricing comparison tool."""

    def test_tiny_scenario(self, tiny_scenario):
        """Test the single offer sits at the mean tier rate."""
        result = compare_single_tier(scenario=inline(tiny_scenario), **FAST)
        comparison = result["comparison"]
        assert result["success"] is True
        assert result["single_rate_mbps"] == pytest.approx(1.5)
        assert comparison["multi_profit"] >= 0.0
        assert comparison["single_profit"] >= 0.0


class TestHelpers:
    """Test tool helpers and inline error handling."""

    def test_search_config_units(self, tiny_scenario):
        """Test Mbps and kHz arguments become SI units."""
        cfg = search_config(tiny_scenario, rate_unit_mbps=0.5, bw_unit_khz=20.0)
        assert cfg.rate_unit == 5e5
        assert cfg.bw_unit == 2e4
        assert (cfg.h_l, cfg.h_u) == tuple(tiny_scenario.altitude_bracket)
        assert cfg.cells == 50

    def test_planner_error(self):
        """Test planner errors keep their type name."""
        result = handle_error_inline("op", DomainError("bad value"))
        assert result == {"error": True, "error_type": "DomainError", "error_message": "bad value"}

    def test_validation_error_details(self):
        """Test pydantic errors carry field details."""

        class Counter(BaseModel):
            count: int = Field(ge=1)

        with pytest.raises(ValidationError) as excinfo:
            Counter(count=0)
        result = handle_error_inline("op", excinfo.value)
        assert result["error_type"] == "ValidationError"
        assert result["details"][0]["field"] == "count"

    def test_unexpected_error(self):
        """Test other exceptions are reported by type."""
        result = handle_error_inline("op", KeyError("x"))
        assert result["error_type"] == "KeyError"
