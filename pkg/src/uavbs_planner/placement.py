"""
UAV placement solvers.

Every candidate position goes through the same pipeline: pick the GBS with
the best backhaul, invert the rate function for every (user, tier), then
solve the tier-allocation knapsack. The solvers differ only in which
positions they try:

- ``grid_search``: centers of a rows x cols partition of the region at one altitude
- ``gss_optimize``: golden-section search over altitude, grid search at each
  interior altitude, then a local grid zoom around the final cell
- ``heuristic_random``: uniformly drawn positions, best of N
- ``heuristic_fixed``: weighted user centroid at four quarter altitudes
- ``exhaustive_oracle``: a full 3-D lattice, exact over that lattice
"""

import logging
import math
from typing import Dict, List, Literal, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, model_validator

from .channel import Point3, backhaul_capacity, best_gbs, data_rate
from .errors import DomainError, ResourceLimitError
from .knapsack import (
    DEFAULT_BW_UNIT_HZ,
    DEFAULT_CELL_BUDGET,
    DEFAULT_RATE_UNIT_BPS,
    Assignment,
    build_instance,
    solve_dp,
    utility,
)
from .rate_inversion import DEFAULT_BW_TOLERANCE_HZ, build_demand_table
from .scenario import Scenario, heuristic_rng

logger = logging.getLogger(__name__)

GOLDEN_RATIO_CONJUGATE = (math.sqrt(5.0) - 1.0) / 2.0
AUDIT_RTOL = 1e-9

Solver = Literal["gss", "random", "fixed", "oracle"]


class SearchConfig(BaseModel):
    """Search and discretisation settings shared by all solvers."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    h_l: float = Field(default=50.0, gt=0, description="Lowest altitude (m)")
    h_u: float = Field(default=500.0, gt=0, description="Highest altitude (m)")
    epsilon_g: float = Field(default=1.0, gt=0, description="GSS stop width (m)")
    grid_rows: int = Field(default=5, ge=1)
    grid_cols: int = Field(default=10, ge=1)
    refine_levels: int = Field(default=2, ge=0, description="Grid zooms around the final GSS cell")
    region_width: Optional[float] = Field(default=None, gt=0, description="Overrides the scenario region")
    region_height: Optional[float] = Field(default=None, gt=0, description="Overrides the scenario region")
    seed: int = 0
    replications_random: int = Field(default=50, ge=1)
    rate_unit: float = Field(default=DEFAULT_RATE_UNIT_BPS, gt=0, description="DP rate axis unit (bps)")
    bw_unit: float = Field(default=DEFAULT_BW_UNIT_HZ, gt=0, description="DP bandwidth axis unit (Hz)")
    bw_tolerance: float = Field(default=DEFAULT_BW_TOLERANCE_HZ, gt=0, description="Bisection tolerance (Hz)")
    cell_budget: int = Field(default=DEFAULT_CELL_BUDGET, ge=1)
    centroid_weighting: Literal["willingness", "uniform"] = "willingness"
    oracle_lattice_cap: int = Field(default=100_000, ge=1)
    return_best_visited: bool = False

    @model_validator(mode="after")
    def _check_bracket(self) -> "SearchConfig":
        if not self.h_l < self.h_u:
            raise ValueError("h_l must be below h_u")
        return self

    @classmethod
    def for_scenario(cls, scenario: Scenario, **overrides: object) -> "SearchConfig":
        """Config whose altitude bracket is the scenario's, plus overrides."""
        values: Dict[str, object] = {"h_l": scenario.altitude_bracket[0], "h_u": scenario.altitude_bracket[1]}
        values.update(overrides)
        return cls.model_validate(values)

    @property
    def cells(self) -> int:
        return self.grid_rows * self.grid_cols

    def gss_evaluations(self, iterations: int) -> int:
        """Knapsack solves of a GSS run: two grids per iteration, the final grid and its zooms."""
        return (2 * iterations + 1 + self.refine_levels) * self.cells

    def region_size(self, scenario: Scenario) -> Tuple[float, float]:
        return (
            self.region_width if self.region_width is not None else scenario.region.width,
            self.region_height if self.region_height is not None else scenario.region.height,
        )


class PlacementSolution(BaseModel):
    """A UAV position, its anchoring GBS and the optimal tier allocation there."""
    model_config = ConfigDict(frozen=True)

    solver: str = "position"
    uav: Point3
    gbs_index: int
    assignment: Assignment
    profit: float
    per_user_bw: Dict[int, float] = Field(default_factory=dict)
    backhaul_capacity: float
    access_capacity: float
    evaluations: int = Field(default=1, description="Knapsack solves performed")
    iterations: int = Field(default=0, description="GSS loop iterations")
    altitude_brackets: List[Tuple[float, float]] = Field(default_factory=list)

    @computed_field  # type: ignore[prop-decorator]
    @property
    def rate_slack(self) -> float:
        return self.backhaul_capacity - self.assignment.used_rate

    @computed_field  # type: ignore[prop-decorator]
    @property
    def bw_slack(self) -> float:
        return self.access_capacity - self.assignment.used_bw

    def with_search_stats(self, solver: str, evaluations: int, **extra: object) -> "PlacementSolution":
        return self.model_copy(update={"solver": solver, "evaluations": evaluations, **extra})


def evaluate_position(scenario: Scenario, uav: Point3, cfg: SearchConfig) -> PlacementSolution:
    """Best GBS, demand table and optimal allocation at one UAV position."""
    gbs_index, capacity = best_gbs(scenario.channel, uav, scenario.gbss)
    access = scenario.gbss[gbs_index].bandwidth_hz
    demand = build_demand_table(
        scenario.channel, uav, scenario.users, scenario.tiers, access, cfg.bw_tolerance
    )
    instance = build_instance(demand, scenario.willingness, scenario.tiers, capacity, access)
    assignment = solve_dp(instance, cfg.rate_unit, cfg.bw_unit, cfg.cell_budget)
    per_user_bw = {
        user: float(demand.required_bw[user][tier])  # type: ignore[arg-type]
        for user, tier in assignment.chosen.items()
    }
    return PlacementSolution(
        uav=uav,
        gbs_index=gbs_index,
        assignment=assignment,
        profit=assignment.total_profit,
        per_user_bw=per_user_bw,
        backhaul_capacity=capacity,
        access_capacity=access,
    )


def _best(candidates: Sequence[PlacementSolution]) -> PlacementSolution:
    """First candidate with the highest profit."""
    best = candidates[0]
    for candidate in candidates[1:]:
        if candidate.profit > best.profit:
            best = candidate
    return best


def grid_centers(width: float, height: float, rows: int, cols: int) -> List[Tuple[float, float]]:
    """Cell centers in row-major order; cell q = row * cols + col."""
    return [
        ((col + 0.5) * width / cols, (row + 0.5) * height / rows)
        for row in range(rows)
        for col in range(cols)
    ]


def grid_search(scenario: Scenario, h_fixed: float, cfg: SearchConfig) -> PlacementSolution:
    """Evaluate every grid-cell center at altitude ``h_fixed``; ties go to the lowest cell."""
    slack = 1e-9 * (cfg.h_u - cfg.h_l)
    if not cfg.h_l - slack <= h_fixed <= cfg.h_u + slack:
        raise DomainError(f"Altitude {h_fixed} outside [{cfg.h_l}, {cfg.h_u}]")
    width, height = cfg.region_size(scenario)
    best: Optional[PlacementSolution] = None
    for q, (x, y) in enumerate(grid_centers(width, height, cfg.grid_rows, cfg.grid_cols)):
        candidate = evaluate_position(scenario, Point3(x=x, y=y, h=h_fixed), cfg)
        logger.debug(f"grid h={h_fixed:.2f} cell={q} profit={candidate.profit:.4f}")
        if best is None or candidate.profit > best.profit:
            best = candidate
    assert best is not None
    return best.with_search_stats("grid", cfg.cells)


def refine_position(scenario: Scenario, incumbent: PlacementSolution, cfg: SearchConfig) -> PlacementSolution:
    """Zoom the grid onto the incumbent ``cfg.refine_levels`` times at its altitude.

    Each level lays a rows x cols grid over a window two current cells wide
    and high, centered on the incumbent and shifted to stay inside the region.
    A candidate replaces the incumbent only when strictly more profitable, so
    the result is never worse than the input.
    """
    width, height = cfg.region_size(scenario)
    cell_w, cell_h = width / cfg.grid_cols, height / cfg.grid_rows
    best = incumbent
    for level in range(cfg.refine_levels):
        win_w, win_h = min(2.0 * cell_w, width), min(2.0 * cell_h, height)
        x0 = min(max(best.uav.x - win_w / 2.0, 0.0), width - win_w)
        y0 = min(max(best.uav.y - win_h / 2.0, 0.0), height - win_h)
        h = best.uav.h
        for dx, dy in grid_centers(win_w, win_h, cfg.grid_rows, cfg.grid_cols):
            candidate = evaluate_position(scenario, Point3(x=x0 + dx, y=y0 + dy, h=h), cfg)
            if candidate.profit > best.profit:
                best = candidate
        cell_w, cell_h = win_w / cfg.grid_cols, win_h / cfg.grid_rows
        logger.debug(f"refine level {level + 1}: profit={best.profit:.4f} at ({best.uav.x:.1f}, {best.uav.y:.1f})")
    return best


def gss_optimize(scenario: Scenario, cfg: SearchConfig) -> PlacementSolution:
    """Golden-section search over altitude with a grid search at every interior altitude.

    Each iteration evaluates h1 = h_l + g (h_u - h_l) and h2 = h_u - g (h_u - h_l)
    (g the golden ratio conjugate, so h2 < h1). If the h1 profit is at least the
    h2 profit the bracket becomes [h2, h_u], otherwise [h_l, h1]. When the
    bracket is narrower than epsilon_g, the midpoint is solved once more, the
    winning cell is refined ``refine_levels`` times and that solution is
    returned. With ``refine_levels=0`` the run costs (2 iterations + 1) grids.
    """
    h_l, h_u = cfg.h_l, cfg.h_u
    brackets = [(h_l, h_u)]
    visited: List[PlacementSolution] = []
    iterations = 0
    while h_u - h_l >= cfg.epsilon_g:
        width = h_u - h_l
        h1 = h_l + GOLDEN_RATIO_CONJUGATE * width
        h2 = h_u - GOLDEN_RATIO_CONJUGATE * width
        upper = grid_search(scenario, h1, cfg)
        lower = grid_search(scenario, h2, cfg)
        visited.extend([upper, lower])
        if upper.profit >= lower.profit:
            h_l = h2
        else:
            h_u = h1
        iterations += 1
        brackets.append((h_l, h_u))
        logger.debug(
            f"GSS iteration {iterations}: profit(h1={h1:.2f})={upper.profit:.4f} "
            f"profit(h2={h2:.2f})={lower.profit:.4f} -> [{h_l:.2f}, {h_u:.2f}]"
        )

    final = refine_position(scenario, grid_search(scenario, (h_l + h_u) / 2.0, cfg), cfg)
    result = final
    if cfg.return_best_visited:
        result = _best([final, *visited])
    solution = result.with_search_stats(
        "gss",
        cfg.gss_evaluations(iterations),
        iterations=iterations,
        altitude_brackets=brackets,
    )
    logger.info(
        f"GSS finished after {iterations} iterations: profit={solution.profit:.4f} at "
        f"({solution.uav.x:.1f}, {solution.uav.y:.1f}, {solution.uav.h:.2f})"
    )
    return solution


def heuristic_random(scenario: Scenario, cfg: SearchConfig) -> PlacementSolution:
    """Best of ``replications_random`` uniformly drawn positions."""
    rng = heuristic_rng(cfg.seed)
    width, height = cfg.region_size(scenario)
    low = np.array([0.0, 0.0, cfg.h_l])
    high = np.array([width, height, cfg.h_u])
    candidates = []
    for _ in range(cfg.replications_random):
        x, y, h = rng.uniform(low, high)
        candidates.append(evaluate_position(scenario, Point3(x=float(x), y=float(y), h=float(h)), cfg))
    solution = _best(candidates).with_search_stats("random", cfg.replications_random)
    logger.info(f"Random heuristic: best profit {solution.profit:.4f} over {cfg.replications_random} draws")
    return solution


def user_centroid(scenario: Scenario, weighting: str = "willingness") -> Tuple[float, float]:
    """Weighted mean user position; weights are top-tier willingness or uniform."""
    xy = np.array([[u.x, u.y] for u in scenario.users])
    weights = np.ones(scenario.n)
    if weighting == "willingness":
        weights = np.array([row[-1] for row in scenario.willingness])
        if not weights.sum() > 0:
            weights = np.ones(scenario.n)
    x, y = np.average(xy, axis=0, weights=weights)
    return float(x), float(y)


def heuristic_fixed(scenario: Scenario, cfg: SearchConfig) -> PlacementSolution:
    """User centroid at the altitudes h_l + k (h_u - h_l) / 4, k = 1..4."""
    x, y = user_centroid(scenario, cfg.centroid_weighting)
    altitudes = [cfg.h_l + k * (cfg.h_u - cfg.h_l) / 4.0 for k in range(1, 5)]
    candidates = [evaluate_position(scenario, Point3(x=x, y=y, h=h), cfg) for h in altitudes]
    solution = _best(candidates).with_search_stats("fixed", len(altitudes))
    logger.info(f"Fixed heuristic: profit {solution.profit:.4f} at h={solution.uav.h:.1f}")
    return solution


def exhaustive_oracle(
    scenario: Scenario,
    cfg: SearchConfig,
    lattice_step: Optional[float] = None,
    *,
    shape: Optional[Tuple[int, int, int]] = None,
    altitudes: Optional[Sequence[float]] = None,
) -> PlacementSolution:
    """Exact best over a 3-D lattice of cell centers.

    The lattice is either ``lattice_step`` meters apart on every axis or a
    ``(cols, rows, levels)`` shape. Horizontal points are cell centers as in
    grid search; altitude levels are the centers of equal slices of
    [h_l, h_u] unless ``altitudes`` lists them.
    """
    width, height = cfg.region_size(scenario)
    if shape is not None:
        cols, rows, levels = shape
    elif lattice_step is not None:
        if not lattice_step > 0:
            raise DomainError("lattice_step must be positive")
        cols = max(1, round(width / lattice_step))
        rows = max(1, round(height / lattice_step))
        levels = max(1, round((cfg.h_u - cfg.h_l) / lattice_step))
    else:
        cols, rows, levels = cfg.grid_cols, cfg.grid_rows, 1
    if altitudes is None:
        span = (cfg.h_u - cfg.h_l) / levels
        altitudes = [cfg.h_l + (k + 0.5) * span for k in range(levels)]
    size = cols * rows * len(altitudes)
    if size > cfg.oracle_lattice_cap:
        raise ResourceLimitError(f"Lattice of {size} points exceeds the cap of {cfg.oracle_lattice_cap}")

    centers = grid_centers(width, height, rows, cols)
    best: Optional[PlacementSolution] = None
    for h in altitudes:
        for x, y in centers:
            candidate = evaluate_position(scenario, Point3(x=x, y=y, h=float(h)), cfg)
            if best is None or candidate.profit > best.profit:
                best = candidate
    assert best is not None
    solution = best.with_search_stats("oracle", size)
    logger.info(f"Lattice oracle over {size} points: profit {solution.profit:.4f}")
    return solution


def solve(scenario: Scenario, solver: Solver, cfg: SearchConfig, lattice_step: Optional[float] = None) -> PlacementSolution:
    """Dispatch to one of the named solvers."""
    if solver == "gss":
        return gss_optimize(scenario, cfg)
    if solver == "random":
        return heuristic_random(scenario, cfg)
    if solver == "fixed":
        return heuristic_fixed(scenario, cfg)
    if solver == "oracle":
        return exhaustive_oracle(scenario, cfg, lattice_step)
    raise DomainError(f"Unknown solver '{solver}'")


# ---------------------------------------------------------------------------
# Verification
# ---------------------------------------------------------------------------

class ProfitEvaluation(BaseModel):
    """Objective value of an explicit bandwidth allocation and its constraint violations."""
    profit: float
    rates: Dict[int, float]
    gbs_index: int
    backhaul_capacity: float
    violations: List[str] = Field(default_factory=list)

    @property
    def feasible(self) -> bool:
        return not self.violations


def _exceeds(used: float, capacity: float) -> bool:
    return used > capacity * (1.0 + AUDIT_RTOL) + AUDIT_RTOL


def network_profit(
    scenario: Scenario,
    uav: Point3,
    bandwidths: Mapping[int, float],
    gbs_index: Optional[int] = None,
) -> ProfitEvaluation:
    """Profit of giving each listed user the stated bandwidth, priced by reached tier.

    Checks total rate against the backhaul capacity and total bandwidth against
    the anchoring GBS; the GBS defaults to the one with the best backhaul.
    """
    params = scenario.channel
    if gbs_index is None:
        gbs_index, capacity = best_gbs(params, uav, scenario.gbss)
    else:
        station = scenario.gbss[gbs_index]
        capacity = backhaul_capacity(params, uav, station.position, station.bandwidth_hz)
    rates = {
        user: data_rate(params, uav, scenario.users[user], bw)
        for user, bw in sorted(bandwidths.items())
        if bw > 0
    }
    profit = math.fsum(
        utility(rate, scenario.tiers, scenario.willingness[user]) for user, rate in rates.items()
    )
    violations = []
    total_rate = math.fsum(rates.values())
    if _exceeds(total_rate, capacity):
        violations.append(f"delivered rates {total_rate:.1f} bps exceed backhaul {capacity:.1f} bps")
    total_bw = math.fsum(bandwidths.values())
    access = scenario.gbss[gbs_index].bandwidth_hz
    if _exceeds(total_bw, access):
        violations.append(f"bandwidth {total_bw:.1f} Hz exceeds GBS {gbs_index} capacity {access:.1f} Hz")
    return ProfitEvaluation(
        profit=profit, rates=rates, gbs_index=gbs_index, backhaul_capacity=capacity, violations=violations
    )


def audit_solution(scenario: Scenario, solution: PlacementSolution, cfg: SearchConfig) -> List[str]:
    """Re-derive capacities and demand at the solution's position and list every violation."""
    params = scenario.channel
    violations: List[str] = []
    uav = solution.uav
    if not cfg.h_l - 1e-9 <= uav.h <= cfg.h_u + 1e-9:
        violations.append(f"altitude {uav.h} outside [{cfg.h_l}, {cfg.h_u}]")

    gbs_index, _ = best_gbs(params, uav, scenario.gbss)
    if gbs_index != solution.gbs_index:
        violations.append(f"GBS {solution.gbs_index} is not the best backhaul (expected {gbs_index})")
    station = scenario.gbss[solution.gbs_index]
    capacity = backhaul_capacity(params, uav, station.position, station.bandwidth_hz)
    demand = build_demand_table(params, uav, scenario.users, scenario.tiers, station.bandwidth_hz, cfg.bw_tolerance)

    chosen = solution.assignment.chosen
    if set(chosen) != set(solution.per_user_bw):
        violations.append("per-user bandwidths do not match the served users")
    used_rate = math.fsum(scenario.tiers.deltas[k] for k in chosen.values())
    used_bw = 0.0
    for user, tier in sorted(chosen.items()):
        required = demand.required_bw[user][tier]
        if required is None:
            violations.append(f"user {user} tier {tier} is infeasible at this position")
            continue
        if not math.isclose(required, solution.per_user_bw.get(user, -1.0), rel_tol=AUDIT_RTOL):
            violations.append(f"user {user} bandwidth differs from the recomputed demand")
        if data_rate(params, uav, scenario.users[user], required) < scenario.tiers.deltas[tier]:
            violations.append(f"user {user} does not reach tier {tier}")
        used_bw += required
    if _exceeds(used_rate, capacity):
        violations.append(f"rate {used_rate:.1f} bps exceeds backhaul {capacity:.1f} bps")
    if _exceeds(used_bw, station.bandwidth_hz):
        violations.append(f"bandwidth {used_bw:.1f} Hz exceeds access {station.bandwidth_hz:.1f} Hz")
    profit = math.fsum(scenario.willingness[user][tier] for user, tier in sorted(chosen.items()))
    if not math.isclose(profit, solution.profit, rel_tol=AUDIT_RTOL, abs_tol=1e-12):
        violations.append(f"reported profit {solution.profit} differs from recomputed {profit}")
    return violations
