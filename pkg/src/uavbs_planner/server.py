"""
UAV Base Station Planner MCP Server

Exposes scenario generation, placement solving and link evaluation as MCP
tools using the FastMCP SDK. Every tool returns a plain dictionary: results
carry ``"success": True``, failures go through ``handle_error_inline``.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Optional

from fastmcp import FastMCP

from .channel import ChannelParams, Point3, data_rate, elevation_angle, p_los, pathloss_user
from .errors import DomainError, handle_error_inline
from .experiment import coverage_metric, normalized_profit, single_tier_comparison
from .placement import PlacementSolution, SearchConfig, audit_solution, solve
from .rate_inversion import MBPS, rate_ceiling
from .scenario import (
    GenSpec,
    Region,
    Scenario,
    ScenarioDocument,
    generate_batch,
    load_scenario,
    loads,
    save_scenario,
    scenario_summary,
)
from .settings import RuntimeSettings

logger = logging.getLogger(__name__)

# Initialize FastMCP
mcp = FastMCP("UAV Base Station Planner")

SOLVERS = ("gss", "random", "fixed", "oracle")


def _resolve_scenario(scenario_path: Optional[str], scenario: Optional[Dict[str, Any]]) -> Scenario:
    """Scenario from a file path or an inline scenario document."""
    if (scenario_path is None) == (scenario is None):
        raise DomainError("Provide exactly one of scenario_path or scenario")
    if scenario_path is not None:
        return load_scenario(scenario_path)
    return loads(json.dumps(scenario), source="inline scenario")


def search_config(
    scenario: Scenario,
    grid_rows: int = 5,
    grid_cols: int = 10,
    epsilon_g: float = 1.0,
    rate_unit_mbps: float = 0.5,
    bw_unit_khz: float = 10.0,
    seed: int = 0,
    replications_random: int = 50,
    refine_levels: int = 2,
) -> SearchConfig:
    """SearchConfig in I/O units (Mbps, kHz) with the scenario's altitude bracket."""
    return SearchConfig.for_scenario(
        scenario,
        grid_rows=grid_rows,
        grid_cols=grid_cols,
        epsilon_g=epsilon_g,
        rate_unit=rate_unit_mbps * MBPS,
        bw_unit=bw_unit_khz * 1e3,
        seed=seed,
        replications_random=replications_random,
        refine_levels=refine_levels,
    )


def solution_payload(scenario: Scenario, solution: PlacementSolution) -> Dict[str, Any]:
    """JSON-ready view of a solution plus its report metrics."""
    return {
        "solver": solution.solver,
        "uav": solution.uav.model_dump(),
        "gbs_index": solution.gbs_index,
        "profit": solution.profit,
        "normalized_profit": normalized_profit(scenario, solution.profit),
        "coverage": coverage_metric(scenario, solution),
        "served_users": solution.assignment.served,
        "assignment": {str(user): tier for user, tier in solution.assignment.chosen.items()},
        "per_user_bandwidth_hz": {str(user): bw for user, bw in solution.per_user_bw.items()},
        "backhaul_capacity_bps": solution.backhaul_capacity,
        "access_capacity_hz": solution.access_capacity,
        "rate_slack_bps": solution.rate_slack,
        "bandwidth_slack_hz": solution.bw_slack,
        "knapsack_solves": solution.evaluations,
        "iterations": solution.iterations,
        "altitude_brackets": [list(b) for b in solution.altitude_brackets],
    }


def generate_scenario(
    n: int = 50,
    m: int = 4,
    tier_set: int = 1,
    seed: int = 0,
    count: int = 1,
    width_m: float = 1500.0,
    height_m: float = 1500.0,
    out_dir: Optional[str] = None,
) -> Dict[str, Any]:
    """
    Generate clustered random scenarios.

    Args:
        n: Number of users
        m: Number of ground base stations
        tier_set: Predefined rate tier set (1: 1,2 Mbps; 2: 1,2,4 Mbps; 3: 1,2,4,8 Mbps)
        seed: Seed of the first scenario; later scenarios use seed + 1, seed + 2, ...
        count: Number of scenarios to generate
        width_m: Region width in meters
        height_m: Region height in meters
        out_dir: Directory to write scenario_<seed>.json files into; when omitted
            the scenario documents are returned inline

    Returns:
        Dictionary containing a summary (and path or document) per scenario
    """
    try:
        if count < 1:
            raise DomainError("count must be at least 1")
        spec = GenSpec(n=n, m=m, tier_set_id=tier_set, seed=seed, region=Region(width=width_m, height=height_m))
        scenarios = []
        for scenario in generate_batch(spec, count):
            entry: Dict[str, Any] = {"summary": scenario_summary(scenario)}
            if out_dir:
                entry["path"] = str(save_scenario(scenario, Path(out_dir) / f"scenario_{scenario.seed}.json"))
            else:
                entry["scenario"] = ScenarioDocument.from_scenario(scenario).model_dump(mode="json")
            scenarios.append(entry)
        return {
            "success": True,
            "scenarios": scenarios,
            "count": len(scenarios),
        }
    except Exception as e:
        return handle_error_inline("generate_scenario", e)


def solve_scenario(
    scenario_path: Optional[str] = None,
    scenario: Optional[Dict[str, Any]] = None,
    solver: str = "gss",
    grid_rows: int = 5,
    grid_cols: int = 10,
    epsilon_g: float = 1.0,
    rate_unit_mbps: float = 0.5,
    bw_unit_khz: float = 10.0,
    seed: int = 0,
    lattice_step_m: Optional[float] = None,
    refine_levels: int = 2,
    out_path: Optional[str] = None,
) -> Dict[str, Any]:
    """
    Place the UAV and allocate rate tiers for one scenario.

    Args:
        scenario_path: Path to a scenario JSON file
        scenario: Inline scenario document (alternative to scenario_path)
        solver: One of gss, random, fixed, oracle
        grid_rows: Grid search rows
        grid_cols: Grid search columns
        epsilon_g: Golden-section stop width in meters
        rate_unit_mbps: Knapsack rate discretisation unit in Mbps
        bw_unit_khz: Knapsack bandwidth discretisation unit in kHz
        seed: Seed for the random-placement heuristic
        lattice_step_m: Lattice spacing for the oracle solver
        refine_levels: Grid zooms around the final GSS cell (0 for the plain search)
        out_path: Optional path to write the solution JSON to

    Returns:
        Dictionary containing the solution, its metrics and audit result
    """
    try:
        if solver not in SOLVERS:
            raise DomainError(f"Unknown solver '{solver}', expected one of {list(SOLVERS)}")
        problem = _resolve_scenario(scenario_path, scenario)
        cfg = search_config(
            problem, grid_rows, grid_cols, epsilon_g, rate_unit_mbps, bw_unit_khz, seed,
            refine_levels=refine_levels,
        )
        solution = solve(problem, solver, cfg, lattice_step_m)  # type: ignore[arg-type]
        payload = solution_payload(problem, solution)
        violations = audit_solution(problem, solution, cfg)
        if out_path:
            Path(out_path).parent.mkdir(parents=True, exist_ok=True)
            Path(out_path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
            logger.info(f"Wrote solution {out_path}")
        return {
            "success": True,
            "solution": payload,
            "audit_violations": violations,
            "out_path": out_path,
        }
    except Exception as e:
        return handle_error_inline("solve_scenario", e)


def evaluate_link(
    uav_x: float,
    uav_y: float,
    uav_h: float,
    user_x: float,
    user_y: float,
    bandwidth_hz: float,
    environment: str = "suburban",
) -> Dict[str, Any]:
    """
    Evaluate the air-to-ground link between a UAV and one ground user.

    Args:
        uav_x: UAV x coordinate in meters
        uav_y: UAV y coordinate in meters
        uav_h: UAV altitude in meters
        user_x: User x coordinate in meters
        user_y: User y coordinate in meters
        bandwidth_hz: Bandwidth allocated to the user in Hz
        environment: suburban, urban, dense_urban or highrise

    Returns:
        Dictionary containing elevation angle, LoS probability, pathloss and rate
    """
    try:
        params = ChannelParams.for_environment(environment)
        uav = Point3(x=uav_x, y=uav_y, h=uav_h)
        user = Point3(x=user_x, y=user_y)
        theta = elevation_angle(uav, user)
        return {
            "success": True,
            "link": {
                "environment": environment,
                "elevation_deg": theta,
                "p_los": p_los(params, theta),
                "pathloss_db": pathloss_user(params, uav, user),
                "rate_bps": data_rate(params, uav, user, bandwidth_hz),
                "rate_ceiling_bps": rate_ceiling(params, uav, user),
            },
        }
    except Exception as e:
        return handle_error_inline("evaluate_link", e)


def compare_single_tier(
    scenario_path: Optional[str] = None,
    scenario: Optional[Dict[str, Any]] = None,
    grid_rows: int = 5,
    grid_cols: int = 10,
    epsilon_g: float = 1.0,
) -> Dict[str, Any]:
    """
    Compare tiered pricing against a single mean-rate offer on one scenario.

    Args:
        scenario_path: Path to a scenario JSON file
        scenario: Inline scenario document (alternative to scenario_path)
        grid_rows: Grid search rows
        grid_cols: Grid search columns
        epsilon_g: Golden-section stop width in meters

    Returns:
        Dictionary containing both profits and the relative improvement
    """
    try:
        problem = _resolve_scenario(scenario_path, scenario)
        cfg = search_config(problem, grid_rows, grid_cols, epsilon_g)
        comparison = single_tier_comparison(problem, cfg)
        return {
            "success": True,
            "comparison": comparison.model_dump(),
            "single_rate_mbps": comparison.single_rate_bps / MBPS,
        }
    except Exception as e:
        return handle_error_inline("compare_single_tier", e)


# Registered after definition: recent FastMCP decorators return Tool objects,
# and the CLI calls these functions directly.
for _tool in (generate_scenario, solve_scenario, evaluate_link, compare_single_tier):
    mcp.tool()(_tool)


def main():
    """Main entry point for the MCP server."""
    settings = RuntimeSettings.from_env()
    logging.basicConfig(
        level=getattr(logging, settings.log_level),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    )
    logger.info("Starting UAV Base Station Planner MCP server")
    mcp.run()


if __name__ == "__main__":
    main()
