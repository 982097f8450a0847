#!/usr/bin/env python3
"""
UAV Base Station Planner CLI

Generate scenarios, solve them, run the experiment grid and render reports.
"""

import argparse
import json
import logging
import sys
from typing import Any, Dict, List, Optional, Tuple

from .errors import DomainError, handle_error_inline
from .experiment import ExperimentPlan, load_plan, load_report, run_experiment, summarize
from .plots import render_plots
from .server import generate_scenario, solve_scenario
from .settings import RuntimeSettings

logger = logging.getLogger(__name__)


def parse_grid(value: str) -> Tuple[int, int]:
    """Parse ``ROWSxCOLS`` into positive integers."""
    try:
        rows, cols = (int(part) for part in value.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like ROWSxCOLS, got '{value}'") from None
    if rows < 1 or cols < 1:
        raise argparse.ArgumentTypeError("grid rows and columns must be positive")
    return rows, cols


class PlannerCLI:
    """Command-line interface for the planner."""

    def __init__(self, settings: Optional[RuntimeSettings] = None):
        self.settings = settings or RuntimeSettings.from_env()
        self.parser = self._create_parser()

    def _create_parser(self) -> argparse.ArgumentParser:
        """Create the argument parser."""
        parser = argparse.ArgumentParser(
            description='UAV base station placement and tiered rate allocation planner',
            formatter_class=argparse.RawDescriptionHelpFormatter,
            epilog="""
Examples:
  %(prog)s generate --n 50 --tier-set 2 --count 10 --out-dir scenarios/
  %(prog)s solve --scenario scenarios/scenario_0.json --solver gss --out solution.json
  %(prog)s experiment --plan plan.json --out-dir results/
  %(prog)s report --csv results/results.csv --plots figures/
            """
        )

        parser.add_argument(
            '--output',
            choices=['json', 'table'],
            default='json',
            help='Output format (default: json)'
        )

        parser.add_argument(
            '--verbose', '-v',
            action='store_true',
            help='Enable verbose logging'
        )

        subparsers = parser.add_subparsers(dest='command', help='Available commands')

        # Generate scenarios
        gen_parser = subparsers.add_parser('generate', help='Generate random scenarios')
        gen_parser.add_argument('--n', type=int, default=50, help='Number of users (default: 50)')
        gen_parser.add_argument('--m', type=int, default=4, help='Number of ground base stations (default: 4)')
        gen_parser.add_argument('--tier-set', type=int, default=1, choices=[1, 2, 3], help='Rate tier set')
        gen_parser.add_argument('--seed', type=int, default=0, help='Seed of the first scenario')
        gen_parser.add_argument('--count', type=int, default=1, help='Number of scenarios')
        gen_parser.add_argument('--width', type=float, default=1500.0, help='Region width in meters')
        gen_parser.add_argument('--height', type=float, default=1500.0, help='Region height in meters')
        gen_parser.add_argument('--out-dir', required=True, help='Directory for scenario files')

        # Solve one scenario
        solve_parser = subparsers.add_parser('solve', help='Place the UAV for one scenario')
        solve_parser.add_argument('--scenario', required=True, help='Scenario JSON file')
        solve_parser.add_argument('--solver', choices=['gss', 'random', 'fixed', 'oracle'], default='gss')
        solve_parser.add_argument('--out', help='Write the solution JSON here')
        solve_parser.add_argument('--grid', type=parse_grid, default=(5, 10), help='Grid as ROWSxCOLS (default: 5x10)')
        solve_parser.add_argument('--eps-g', type=float, default=1.0, help='GSS stop width in meters')
        solve_parser.add_argument('--refine', type=int, default=2, help='Grid zooms around the final GSS cell (0: plain search)')
        solve_parser.add_argument('--rate-unit', type=float, default=0.5, help='Knapsack rate unit in Mbps')
        solve_parser.add_argument('--bw-unit', type=float, default=10.0, help='Knapsack bandwidth unit in kHz')
        solve_parser.add_argument('--seed', type=int, default=0, help='Seed for the random heuristic')
        solve_parser.add_argument('--lattice-step', type=float, help='Oracle lattice spacing in meters')

        # Experiment grid
        exp_parser = subparsers.add_parser('experiment', help='Run the experiment grid')
        exp_parser.add_argument('--plan', help='Experiment plan JSON (default: the full study)')
        exp_parser.add_argument('--out-dir', default='results', help='Directory for results.csv and timings.csv')
        exp_parser.add_argument('--workers', type=int, help='Worker processes (default: UAVBS_WORKERS or 1)')
        exp_parser.add_argument('--plots', help='Also render SVG figures into this directory')

        # Report from CSV
        report_parser = subparsers.add_parser('report', help='Summarize results.csv and render figures')
        report_parser.add_argument('--csv', required=True, help='results.csv written by experiment')
        report_parser.add_argument('--plots', help='Directory for SVG figures')

        return parser

    def run(self, args: Optional[List[str]] = None) -> int:
        """Run the CLI with the given arguments."""
        parsed_args = self.parser.parse_args(args)

        if parsed_args.verbose:
            logging.getLogger().setLevel(logging.DEBUG)

        try:
            if parsed_args.command == 'generate':
                return self._generate(parsed_args)
            elif parsed_args.command == 'solve':
                return self._solve(parsed_args)
            elif parsed_args.command == 'experiment':
                return self._experiment(parsed_args)
            elif parsed_args.command == 'report':
                return self._report(parsed_args)
            else:
                self.parser.print_help()
                return 1

        except KeyboardInterrupt:
            print("\nOperation cancelled by user")
            return 1
        except Exception as e:
            self._output_result(handle_error_inline(parsed_args.command, e), parsed_args.output)
            if parsed_args.verbose:
                import traceback
                traceback.print_exc()
            return 1

    def _generate(self, args) -> int:
        """Generate scenario files."""
        result = generate_scenario(
            n=args.n,
            m=args.m,
            tier_set=args.tier_set,
            seed=args.seed,
            count=args.count,
            width_m=args.width,
            height_m=args.height,
            out_dir=args.out_dir,
        )
        self._output_result(result, args.output)
        return 0 if result.get('success') else 1

    def _solve(self, args) -> int:
        """Solve one scenario file."""
        rows, cols = args.grid
        result = solve_scenario(
            scenario_path=args.scenario,
            solver=args.solver,
            grid_rows=rows,
            grid_cols=cols,
            epsilon_g=args.eps_g,
            rate_unit_mbps=args.rate_unit,
            bw_unit_khz=args.bw_unit,
            seed=args.seed,
            lattice_step_m=args.lattice_step,
            refine_levels=args.refine,
            out_path=args.out,
        )
        self._output_result(result, args.output)
        if not result.get('success'):
            return 1
        return 1 if result['audit_violations'] else 0

    def _experiment(self, args) -> int:
        """Run the experiment grid."""
        plan = load_plan(args.plan) if args.plan else ExperimentPlan()
        workers = args.workers if args.workers is not None else self.settings.workers
        if workers < 1:
            raise DomainError("--workers must be at least 1")
        report = run_experiment(plan, args.out_dir, workers=workers)
        result: Dict[str, Any] = {
            "success": not report.failures,
            "rows": len(report.rows),
            "failures": [f.model_dump() for f in report.failures],
            "out_dir": args.out_dir,
        }
        if args.plots and report.rows:
            result["plots"] = [str(p) for p in render_plots(report, args.plots)]
        if report.rows:
            result["summary"] = summarize(report).to_dict(orient="records")
        self._output_result(result, args.output)
        if report.failures:
            print(f"{len(report.failures)} replication(s) failed", file=sys.stderr)
            return 1
        return 0

    def _report(self, args) -> int:
        """Summarize an existing results.csv."""
        report = load_report(args.csv)
        result: Dict[str, Any] = {
            "success": True,
            "rows": len(report.rows),
            "summary": summarize(report).to_dict(orient="records"),
        }
        if args.plots:
            result["plots"] = [str(p) for p in render_plots(report, args.plots)]
        self._output_result(result, args.output)
        return 0

    def _output_result(self, result: Dict[str, Any], output_format: str):
        """Output result in the specified format."""
        if output_format == 'table':
            self._output_table(result)
        else:
            print(json.dumps(result, indent=2, default=str))

    def _output_table(self, result: Dict[str, Any]):
        """Output result in table format."""
        if result.get('error'):
            print(f"Error: {result.get('error_message', 'Unknown error')}")
            for detail in result.get('details', []):
                print(f"  {detail['field']}: {detail['message']}")
            return

        if 'solution' in result:
            self._print_solution_table(result['solution'])
        elif 'summary' in result:
            self._print_summary_table(result['summary'])
        elif 'scenarios' in result:
            for entry in result['scenarios']:
                summary = entry['summary']
                print(f"seed={summary['seed']:<12} n={summary['n']:<5} m={summary['m']:<3} "
                      f"tiers={summary['tiers_mbps']}  {entry.get('path', '')}")
        else:
            print(json.dumps(result, indent=2, default=str))

    def _print_solution_table(self, solution: Dict[str, Any]):
        """Print a solution in table format."""
        uav = solution['uav']
        print(f"{'Solver':<20} {solution['solver']}")
        print(f"{'UAV position (m)':<20} ({uav['x']:.1f}, {uav['y']:.1f}, {uav['h']:.2f})")
        print(f"{'Anchoring GBS':<20} {solution['gbs_index']}")
        print(f"{'Profit':<20} {solution['profit']:.4f}")
        print(f"{'Normalized profit':<20} {solution['normalized_profit']:.4f}")
        print(f"{'Coverage':<20} {solution['coverage']:.4f}")
        print(f"{'Served users':<20} {solution['served_users']}")
        print(f"{'Knapsack solves':<20} {solution['knapsack_solves']}")

    def _print_summary_table(self, summary: List[Dict[str, Any]]):
        """Print mean metrics per tier set, n and solver."""
        print(f"{'Set':<5} {'n':<6} {'Solver':<8} {'Profit':<12} {'Norm.':<8} {'Coverage':<10} {'Gain':<8}")
        print("-" * 62)
        for row in summary:
            gain = row.get('single_tier_improvement')
            gain_text = f"{100 * gain:.1f}%" if gain is not None and gain == gain else "-"
            print(f"{row['tier_set']:<5} {row['n']:<6} {row['solver']:<8} {row['profit']:<12.4f} "
                  f"{row['normalized_profit']:<8.4f} {row['coverage']:<10.4f} {gain_text:<8}")


def main():
    """Main entry point."""
    settings = RuntimeSettings.from_env()
    logging.basicConfig(
        level=getattr(logging, settings.log_level),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    cli = PlannerCLI(settings)
    sys.exit(cli.run())


if __name__ == "__main__":
    main()
