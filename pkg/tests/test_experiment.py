"""
Tests for the experiment pipeline, report files and figures
"""

import xml.etree.ElementTree as ET

import pytest
from pydantic import ValidationError

from uavbs_planner.channel import Point3
from uavbs_planner.errors import DomainError, ReportError, ScenarioSchemaError
from uavbs_planner.experiment import (
    RESULT_COLUMNS,
    ExperimentPlan,
    ExperimentReport,
    ReportRow,
    coverage_metric,
    load_plan,
    load_report,
    normalized_profit,
    replication_seed,
    run_experiment,
    single_tier_comparison,
    summarize,
    write_report,
)
from uavbs_planner.knapsack import Assignment
from uavbs_planner.placement import PlacementSolution, SearchConfig
from uavbs_planner.plots import render_plots
from uavbs_planner.rate_inversion import RateTiers
from uavbs_planner.scenario import GenSpec, Region, generate

GOLDEN_HEADER = (
    "instance_id,seed,n,tier_set,solver,profit,normalized_profit,coverage,"
    "iterations,knapsack_solves,single_tier_improvement"
)


@pytest.fixture
def small_plan() -> ExperimentPlan:
    return ExperimentPlan(
        n_values=[8],
        tier_sets=[1],
        replications=2,
        solvers=["gss", "fixed"],
        seed=42,
        region=Region(width=400.0, height=400.0),
        search=SearchConfig(grid_rows=2, grid_cols=2, epsilon_g=50.0, replications_random=3),
    )


def solution_with(chosen, profit=0.0) -> PlacementSolution:
    return PlacementSolution(
        uav=Point3(x=0.0, y=0.0, h=100.0),
        gbs_index=0,
        assignment=Assignment(chosen=chosen, total_profit=profit),
        profit=profit,
        backhaul_capacity=1e7,
        access_capacity=1e7,
    )


def report_row(n, tier_set, solver, profit, improvement=None) -> ReportRow:
    return ReportRow(
        instance_id=f"n{n}-t{tier_set}-r0",
        seed=1,
        n=n,
        tier_set=tier_set,
        solver=solver,
        profit=profit,
        normalized_profit=profit / 10.0,
        coverage=0.5,
        iterations=3,
        knapsack_solves=12,
        single_tier_improvement=improvement,
    )


class TestMetrics:
    """Test report metrics."""

    def test_coverage_partial(self):
        """Test 3 of 5 users at tiers (1, 2, 4) Mbps."""
        scenario = generate(GenSpec(n=5, tier_set_id=2, seed=0))
        assert coverage_metric(scenario, solution_with({0: 0, 1: 1, 2: 2})) == pytest.approx(0.35)

    def test_coverage_extremes(self):
        """Test nobody and everybody at the top tier."""
        scenario = generate(GenSpec(n=4, tier_set_id=1, seed=0))
        assert coverage_metric(scenario, solution_with({})) == 0.0
        assert coverage_metric(scenario, solution_with({i: 1 for i in range(4)})) == pytest.approx(1.0)

    def test_normalized_profit(self, tiny_scenario):
        """Test normalization by the top-tier willingness sum."""
        assert normalized_profit(tiny_scenario, 2.8) == pytest.approx(0.5)
        assert normalized_profit(tiny_scenario, tiny_scenario.max_profit()) == pytest.approx(1.0)

    def test_replication_seed(self):
        """Test per-replication seeds are stable 32-bit values."""
        seed = replication_seed(0, 50, 1, 0)
        assert seed == replication_seed(0, 50, 1, 0)
        assert 0 <= seed < 2**32
        assert seed != replication_seed(0, 50, 1, 1)
        assert seed != replication_seed(1, 50, 1, 0)


class TestSingleTierComparison:
    """Test the single-option pricing comparison."""

    def test_flat_willingness_gives_no_gain(self, tiny_scenario, small_cfg):
        """Test identical prices across tiers leave nothing to gain."""
        flat = tiny_scenario.model_copy(update={"willingness": [[row[1], row[1]] for row in tiny_scenario.willingness]})
        comparison = single_tier_comparison(flat, small_cfg)
        assert comparison.single_rate_bps == pytest.approx(1.5e6)
        assert comparison.improvement == pytest.approx(0.0, abs=1e-12)

    def test_requires_two_tiers(self, tiny_scenario, small_cfg):
        """Test a single-tier scenario cannot be compared."""
        single = tiny_scenario.model_copy(update={
            "tiers": RateTiers(deltas=[1e6]),
            "willingness": [[row[0]] for row in tiny_scenario.willingness],
        })
        with pytest.raises(DomainError):
            single_tier_comparison(single, small_cfg)

    def test_zero_single_profit_is_undefined(self, tiny_scenario, small_cfg, mocker):
        """Test a zero single-tier profit yields no ratio instead of failing."""
        mocker.patch("uavbs_planner.experiment.gss_optimize", return_value=solution_with({}))
        comparison = single_tier_comparison(tiny_scenario, small_cfg, multi=solution_with({0: 1}, profit=1.0))
        assert comparison.improvement is None
        assert comparison.multi_profit == 1.0

    @pytest.mark.slow
    def test_tiered_gain_positive_and_growing(self, tmp_path):
        """Test 10 scenarios with 1, 2, 4 Mbps: mean gain over one offer is positive and larger at n=100 than n=50."""
        plan = ExperimentPlan(
            n_values=[50, 100],
            tier_sets=[2],
            replications=10,
            solvers=["gss"],
            search=SearchConfig(rate_unit=1e6, bw_unit=5e4),
        )
        report = run_experiment(plan, tmp_path, workers=4)
        assert not report.failures
        gains = report.to_frame().groupby("n")["single_tier_improvement"].mean()
        assert gains[50] > 0
        assert gains[100] > gains[50]


class TestExperimentPlan:
    """Test plan validation and files."""

    def test_default_plan_is_the_full_study(self):
        """Test 7 user counts, 3 tier sets and 10 replications."""
        plan = ExperimentPlan()
        assert len(plan.cases()) == 210

    def test_unknown_tier_set(self):
        """Test plan tier sets must exist."""
        with pytest.raises(ValidationError):
            ExperimentPlan(tier_sets=[4])

    def test_load_plan(self, tmp_path, small_plan):
        """Test a plan file round trip."""
        path = tmp_path / "plan.json"
        path.write_text(small_plan.model_dump_json())
        assert load_plan(path).model_dump() == small_plan.model_dump()

    def test_load_plan_error_path(self, tmp_path):
        """Test plan schema errors name the field."""
        path = tmp_path / "plan.json"
        path.write_text('{"replications": 0}')
        with pytest.raises(ScenarioSchemaError) as excinfo:
            load_plan(path)
        assert "replications" in [p for p, _ in excinfo.value.errors]


class TestRunExperiment:
    """Test the experiment runner."""

    def test_rows_and_files(self, tmp_path, small_plan):
        """Test one row per replication and solver plus both CSV files."""
        report = run_experiment(small_plan, tmp_path)
        assert len(report.rows) == 4
        assert not report.failures
        assert [row.solver for row in report.rows] == ["gss", "fixed", "gss", "fixed"]
        header = (tmp_path / "results.csv").read_text().splitlines()[0]
        assert header == GOLDEN_HEADER
        assert (tmp_path / "timings.csv").read_text().splitlines()[0] == "instance_id,solver,wall_time_s"
        for row in report.rows:
            assert 0.0 <= row.coverage <= 1.0
            assert 0.0 <= row.normalized_profit <= 1.0
            if row.solver == "fixed":
                assert row.single_tier_improvement is None

    def test_gss_iterations_recorded(self, tmp_path, small_plan):
        """Test GSS rows carry iteration and knapsack counts."""
        report = run_experiment(small_plan.model_copy(update={"replications": 1, "solvers": ["gss"]}), tmp_path)
        (row,) = report.rows
        assert row.iterations == 5
        assert row.knapsack_solves == (2 * 5 + 1 + 2) * 4

    def test_byte_identical_reruns(self, tmp_path, small_plan):
        """Test the same plan and seed reproduce results.csv exactly."""
        run_experiment(small_plan, tmp_path / "a")
        run_experiment(small_plan, tmp_path / "b")
        assert (tmp_path / "a" / "results.csv").read_bytes() == (tmp_path / "b" / "results.csv").read_bytes()

    def test_worker_pool_matches_serial(self, tmp_path, small_plan):
        """Test parallel replications write the same results."""
        run_experiment(small_plan, tmp_path / "serial", workers=1)
        run_experiment(small_plan, tmp_path / "pool", workers=2)
        serial = (tmp_path / "serial" / "results.csv").read_bytes()
        assert (tmp_path / "pool" / "results.csv").read_bytes() == serial

    def test_failures_are_isolated(self, tmp_path, small_plan, mocker):
        """Test one failing replication does not stop the run."""
        from uavbs_planner import experiment

        real_build = experiment._build_scenario
        calls = {"count": 0}

        def flaky_build(*args):
            calls["count"] += 1
            if calls["count"] == 1:
                raise RuntimeError("generator exploded")
            return real_build(*args)

        mocker.patch("uavbs_planner.experiment._build_scenario", side_effect=flaky_build)
        report = run_experiment(small_plan, tmp_path)
        assert len(report.failures) == 1
        assert report.failures[0].error_type == "RuntimeError"
        assert report.failures[0].instance_id == "n8-t1-r0"
        assert len(report.rows) == 2


class TestReportFiles:
    """Test report CSV reading and summaries."""

    def test_load_report(self, tmp_path):
        """Test a written report reads back."""
        report = ExperimentReport(rows=[report_row(50, 1, "gss", 4.0, 0.25), report_row(50, 1, "fixed", 3.0)])
        paths = write_report(report, tmp_path)
        loaded = load_report(paths["results"])
        assert [r.model_dump() for r in loaded.rows] == [r.model_dump() for r in report.rows]

    def test_missing_column(self, tmp_path):
        """Test a CSV without the report columns."""
        path = tmp_path / "results.csv"
        path.write_text("instance_id,profit\nx,1.0\n")
        with pytest.raises(ReportError):
            load_report(path)

    def test_summary_means(self):
        """Test mean metrics per group."""
        report = ExperimentReport(rows=[
            report_row(50, 1, "gss", 4.0, 0.2),
            report_row(50, 1, "gss", 6.0, 0.4).model_copy(update={"instance_id": "n50-t1-r1"}),
        ])
        summary = summarize(report)
        assert len(summary) == 1
        assert summary.iloc[0]["profit"] == pytest.approx(5.0)
        assert summary.iloc[0]["single_tier_improvement"] == pytest.approx(0.3)

    def test_summary_of_empty_report(self):
        """Test summarizing nothing."""
        with pytest.raises(ReportError):
            summarize(ExperimentReport())

    def test_columns_constant(self):
        """Test the report column order."""
        assert ",".join(RESULT_COLUMNS) == GOLDEN_HEADER


class TestPlots:
    """Test SVG figure rendering."""

    def test_figure_inventory(self, tmp_path):
        """Test one profit figure per tier set plus coverage and gain figures."""
        rows = [
            report_row(n, tier_set, solver, 5.0, 0.3 if solver == "gss" else None)
            for n in (50, 75)
            for tier_set in (1, 2)
            for solver in ("gss", "random", "fixed")
        ]
        written = render_plots(ExperimentReport(rows=rows), tmp_path)
        assert sorted(p.name for p in written) == [
            "coverage_vs_n.svg",
            "profit_vs_n_tierset1.svg",
            "profit_vs_n_tierset2.svg",
            "single_tier_gain.svg",
        ]
        for path in written:
            assert ET.parse(path).getroot().tag.endswith("svg")

    def test_rerender_byte_identical(self, tmp_path):
        """Test rendering the same report twice writes the same bytes."""
        rows = [
            report_row(n, 1, solver, 4.0 + n / 100, 0.2 if solver == "gss" else None)
            for n in (50, 75)
            for solver in ("gss", "fixed")
        ]
        first = render_plots(ExperimentReport(rows=rows), tmp_path / "a")
        second = render_plots(ExperimentReport(rows=rows), tmp_path / "b")
        for a, b in zip(first, second):
            assert a.name == b.name
            assert a.read_bytes() == b.read_bytes()

    def test_single_row(self, tmp_path):
        """Test a one-row report renders single-point series."""
        written = render_plots(ExperimentReport(rows=[report_row(50, 1, "fixed", 2.0)]), tmp_path)
        assert [p.name for p in written] == ["profit_vs_n_tierset1.svg", "coverage_vs_n.svg"]

    def test_empty_report(self, tmp_path):
        """Test plotting nothing."""
        with pytest.raises(ReportError):
            render_plots(ExperimentReport(), tmp_path)
