"""
Experiment pipeline: scenario batches, every solver per replication, and the
profit / coverage / pricing-gain metrics written as CSV.

``results.csv`` contains only deterministic columns and is byte-identical for
the same plan and seed. Wall-clock times go to ``timings.csv``.
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from .errors import DomainError, ReportError, ScenarioSchemaError
from .placement import PlacementSolution, SearchConfig, audit_solution, gss_optimize, solve
from .scenario import TIER_SETS, GenSpec, Region, Scenario, degenerate_single_tier, generate

logger = logging.getLogger(__name__)

STUDY_N_VALUES = [50, 75, 100, 125, 150, 175, 200]
SOLVER_ORDER: Tuple[str, ...] = ("gss", "random", "fixed", "oracle")

RESULT_COLUMNS = [
    "instance_id",
    "seed",
    "n",
    "tier_set",
    "solver",
    "profit",
    "normalized_profit",
    "coverage",
    "iterations",
    "knapsack_solves",
    "single_tier_improvement",
]
TIMING_COLUMNS = ["instance_id", "solver", "wall_time_s"]


class ExperimentPlan(BaseModel):
    """Grid of instances to simulate; defaults reproduce the full study."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    n_values: List[int] = Field(default_factory=lambda: list(STUDY_N_VALUES), min_length=1)
    tier_sets: List[int] = Field(default_factory=lambda: sorted(TIER_SETS), min_length=1)
    replications: int = Field(default=10, ge=1)
    solvers: List[Literal["gss", "random", "fixed", "oracle"]] = Field(
        default_factory=lambda: ["gss", "random", "fixed"], min_length=1
    )
    seed: int = 0
    m: int = Field(default=4, ge=1)
    region: Region = Field(default_factory=Region)
    parent_count: Tuple[int, int] = (3, 7)
    clustering_rate: Tuple[float, float] = (0.5, 0.9)
    cluster_spread_m: float = Field(default=50.0, ge=0)
    single_tier: bool = Field(default=True, description="Also solve the single-option variant")
    oracle_lattice_step_m: float = Field(default=100.0, gt=0)
    search: SearchConfig = Field(default_factory=SearchConfig)

    @field_validator("tier_sets")
    @classmethod
    def _known_tier_sets(cls, tier_sets: List[int]) -> List[int]:
        unknown = [t for t in tier_sets if t not in TIER_SETS]
        if unknown:
            raise ValueError(f"unknown tier sets {unknown}")
        return tier_sets

    def cases(self) -> List[Tuple[int, int, int]]:
        return [
            (n, tier_set, rep)
            for n in self.n_values
            for tier_set in self.tier_sets
            for rep in range(self.replications)
        ]


class ReportRow(BaseModel):
    instance_id: str
    seed: int
    n: int
    tier_set: int
    solver: str
    profit: float
    normalized_profit: float = Field(ge=0, le=1)
    coverage: float = Field(ge=0, le=1)
    iterations: int
    knapsack_solves: int
    single_tier_improvement: Optional[float] = None
    wall_time_s: float = 0.0


class FailureRecord(BaseModel):
    instance_id: str
    error_type: str
    error_message: str


class ExperimentReport(BaseModel):
    rows: List[ReportRow] = Field(default_factory=list)
    failures: List[FailureRecord] = Field(default_factory=list)

    def to_frame(self, include_timing: bool = False) -> pd.DataFrame:
        columns = RESULT_COLUMNS + (["wall_time_s"] if include_timing else [])
        frame = pd.DataFrame([row.model_dump() for row in self.rows], columns=columns)
        frame["single_tier_improvement"] = frame["single_tier_improvement"].astype(float)
        return frame


class SingleTierComparison(BaseModel):
    multi_profit: float
    single_profit: float
    single_rate_bps: float
    improvement: Optional[float] = Field(default=None, description="None when the single-tier profit is 0")


def replication_seed(plan_seed: int, n: int, tier_set: int, rep: int) -> int:
    """32-bit seed of one replication, derived from the plan seed and its coordinates."""
    return int(np.random.SeedSequence([plan_seed, n, tier_set, rep]).generate_state(1)[0])


def coverage_metric(scenario: Scenario, solution: PlacementSolution) -> float:
    """Delivered tier rates over n times the top tier rate."""
    delivered = math.fsum(scenario.tiers.deltas[k] for k in solution.assignment.chosen.values())
    return delivered / (scenario.n * scenario.tiers.top)


def normalized_profit(scenario: Scenario, profit: float) -> float:
    """Profit relative to serving everyone at the top tier."""
    ceiling = scenario.max_profit()
    return profit / ceiling if ceiling > 0 else 0.0


def single_tier_comparison(
    scenario: Scenario, cfg: SearchConfig, multi: Optional[PlacementSolution] = None
) -> SingleTierComparison:
    """Relative profit gain of the tiered offer over one mean-rate offer at mean willingness."""
    if scenario.tiers.s < 2:
        raise DomainError("single-tier comparison needs at least two tiers")
    multi = gss_optimize(scenario, cfg) if multi is None else multi
    single_scenario = degenerate_single_tier(scenario)
    single = gss_optimize(single_scenario, cfg)
    improvement = None
    if single.profit > 0:
        improvement = (multi.profit - single.profit) / single.profit
    else:
        logger.warning(f"Single-tier profit is zero for scenario seed={scenario.seed}; improvement undefined")
    return SingleTierComparison(
        multi_profit=multi.profit,
        single_profit=single.profit,
        single_rate_bps=single_scenario.tiers.deltas[0],
        improvement=improvement,
    )


def _build_scenario(plan: ExperimentPlan, n: int, tier_set: int, seed: int) -> Scenario:
    spec = GenSpec(
        n=n,
        m=plan.m,
        tier_set_id=tier_set,
        parent_count=plan.parent_count,
        clustering_rate=plan.clustering_rate,
        cluster_spread_m=plan.cluster_spread_m,
        seed=seed,
        region=plan.region,
        altitude_bracket=(plan.search.h_l, plan.search.h_u),
    )
    return generate(spec)


def run_case(plan: ExperimentPlan, n: int, tier_set: int, rep: int) -> List[ReportRow]:
    """Generate one replication and run every enabled solver on it."""
    seed = replication_seed(plan.seed, n, tier_set, rep)
    instance_id = f"n{n}-t{tier_set}-r{rep}"
    scenario = _build_scenario(plan, n, tier_set, seed)
    cfg = plan.search.model_copy(update={"seed": seed})
    rows = []
    for solver in plan.solvers:
        started = time.perf_counter()
        solution = solve(scenario, solver, cfg, plan.oracle_lattice_step_m)
        violations = audit_solution(scenario, solution, cfg)
        if violations:
            raise DomainError(f"{solver} solution failed the constraint audit: {violations}")
        improvement = None
        if solver == "gss" and plan.single_tier and scenario.tiers.s >= 2:
            improvement = single_tier_comparison(scenario, cfg, multi=solution).improvement
        rows.append(ReportRow(
            instance_id=instance_id,
            seed=seed,
            n=n,
            tier_set=tier_set,
            solver=solver,
            profit=solution.profit,
            normalized_profit=normalized_profit(scenario, solution.profit),
            coverage=coverage_metric(scenario, solution),
            iterations=solution.iterations,
            knapsack_solves=solution.evaluations,
            single_tier_improvement=improvement,
            wall_time_s=time.perf_counter() - started,
        ))
    return rows


def _run_case_safely(
    plan: ExperimentPlan, case: Tuple[int, int, int]
) -> Tuple[List[ReportRow], Optional[FailureRecord]]:
    n, tier_set, rep = case
    try:
        rows = run_case(plan, n, tier_set, rep)
        logger.info(f"Finished n={n} tier_set={tier_set} rep={rep}")
        return rows, None
    except Exception as e:
        instance_id = f"n{n}-t{tier_set}-r{rep}"
        logger.error(f"Replication {instance_id} failed: {e}")
        return [], FailureRecord(instance_id=instance_id, error_type=type(e).__name__, error_message=str(e))


def _row_key(row: ReportRow) -> Tuple[int, int, str, int]:
    return (row.n, row.tier_set, row.instance_id, SOLVER_ORDER.index(row.solver))


def run_experiment(
    plan: ExperimentPlan, out_dir: Union[str, Path], workers: int = 1
) -> ExperimentReport:
    """Run every replication of the plan and write results.csv and timings.csv."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cases = plan.cases()
    logger.info(f"Running {len(cases)} replications with solvers {plan.solvers} on {workers} worker(s)")

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_case_safely, [plan] * len(cases), cases))
    else:
        outcomes = [_run_case_safely(plan, case) for case in cases]

    rows = sorted((row for case_rows, _ in outcomes for row in case_rows), key=_row_key)
    failures = sorted((f for _, f in outcomes if f is not None), key=lambda f: f.instance_id)
    report = ExperimentReport(rows=rows, failures=failures)
    write_report(report, out_dir)
    if failures:
        logger.error(f"{len(failures)} of {len(cases)} replications failed")
    return report


def write_report(report: ExperimentReport, out_dir: Union[str, Path]) -> Dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    results = out_dir / "results.csv"
    timings = out_dir / "timings.csv"
    report.to_frame().to_csv(results, index=False, lineterminator="\n")
    report.to_frame(include_timing=True)[TIMING_COLUMNS].to_csv(timings, index=False, lineterminator="\n")
    logger.info(f"Wrote {results} and {timings}")
    return {"results": results, "timings": timings}


def load_report(csv_path: Union[str, Path]) -> ExperimentReport:
    """Read results.csv (and timings.csv next to it when present) back into a report."""
    csv_path = Path(csv_path)
    frame = pd.read_csv(csv_path)
    missing = [c for c in RESULT_COLUMNS if c not in frame.columns]
    if missing:
        raise ReportError(f"{csv_path} is missing columns {missing}")
    timings = csv_path.with_name("timings.csv")
    if timings.exists():
        frame = frame.merge(pd.read_csv(timings), on=["instance_id", "solver"], how="left")
    frame = frame.astype(object).where(frame.notna(), None)
    try:
        rows = [ReportRow.model_validate({k: v for k, v in record.items() if v is not None})
                for record in frame.to_dict(orient="records")]
    except ValidationError as e:
        raise ScenarioSchemaError.from_validation_error(f"report {csv_path}", e) from e
    return ExperimentReport(rows=rows)


def summarize(report: ExperimentReport) -> pd.DataFrame:
    """Mean metrics per (tier set, n, solver)."""
    if not report.rows:
        raise ReportError("report has no rows")
    frame = report.to_frame(include_timing=True)
    return (
        frame.groupby(["tier_set", "n", "solver"], sort=True)[
            ["profit", "normalized_profit", "coverage", "single_tier_improvement", "wall_time_s"]
        ]
        .mean()
        .reset_index()
    )


def load_plan(path: Union[str, Path]) -> ExperimentPlan:
    path = Path(path)
    try:
        return ExperimentPlan.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise ScenarioSchemaError.from_validation_error(f"experiment plan {path}", e) from e
