#!/usr/bin/env python3
"""
UAV Base Station Planner - Setup Validation Script

This script validates the installation: Python version, project layout,
dependencies, MCP tool registration and a small end-to-end CLI solve.
"""

import importlib.util
import json
import subprocess
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict


# Color codes for output
class Colors:
    GREEN = '\033[92m'
    RED = '\033[91m'
    YELLOW = '\033[93m'
    BLUE = '\033[94m'
    BOLD = '\033[1m'
    END = '\033[0m'


def print_header(text: str):
    """Print a formatted header."""
    print(f"\n{Colors.BLUE}{Colors.BOLD}{'=' * 60}{Colors.END}")
    print(f"{Colors.BLUE}{Colors.BOLD}{text.center(60)}{Colors.END}")
    print(f"{Colors.BLUE}{Colors.BOLD}{'=' * 60}{Colors.END}\n")


def print_success(text: str):
    print(f"{Colors.GREEN}[ok] {text}{Colors.END}")


def print_error(text: str):
    print(f"{Colors.RED}[error] {text}{Colors.END}")


def print_warning(text: str):
    print(f"{Colors.YELLOW}[warn] {text}{Colors.END}")


def print_info(text: str):
    print(f"{Colors.BLUE}[info] {text}{Colors.END}")


class SetupValidator:
    """Validates the planner setup."""

    EXPECTED_TOOLS = {"generate_scenario", "solve_scenario", "evaluate_link", "compare_single_tier"}

    def __init__(self):
        self.errors = []
        self.warnings = []
        self.project_root = Path(__file__).parent.parent

    def run_validation(self) -> bool:
        """Run all validation checks."""
        print_header("UAV Base Station Planner - Setup Validation")

        checks = [
            ("Python Environment", self.check_python_environment),
            ("Project Structure", self.check_project_structure),
            ("Dependencies", self.check_dependencies),
            ("MCP Server", self.check_mcp_server),
            ("CLI Tool", self.check_cli_tool),
            ("Documentation", self.check_documentation),
        ]

        for check_name, check_func in checks:
            print_info(f"Running {check_name} check...")
            try:
                check_func()
                print_success(f"{check_name} check passed")
            except Exception as e:
                self.errors.append(f"{check_name}: {str(e)}")
                print_error(f"{check_name} check failed: {str(e)}")

        self.print_summary()
        return len(self.errors) == 0

    def check_python_environment(self):
        """Check Python version and the uv package manager."""
        if sys.version_info < (3, 10):
            raise Exception(f"Python 3.10+ required, found {sys.version_info.major}.{sys.version_info.minor}")

        try:
            result = subprocess.run(['uv', '--version'], capture_output=True, text=True)
            if result.returncode != 0:
                self.warnings.append("uv package manager not found")
        except FileNotFoundError:
            self.warnings.append("uv package manager not found")

    def check_project_structure(self):
        """Check project directory structure."""
        package = 'src/uavbs_planner'
        required_files = [
            'pyproject.toml',
            'README.md',
            f'{package}/__init__.py',
            f'{package}/channel.py',
            f'{package}/rate_inversion.py',
            f'{package}/knapsack.py',
            f'{package}/placement.py',
            f'{package}/scenario.py',
            f'{package}/experiment.py',
            f'{package}/plots.py',
            f'{package}/server.py',
            f'{package}/cli.py',
            'tests/conftest.py',
            'docs/scenario_schema.md',
        ]

        missing_files = [p for p in required_files if not (self.project_root / p).exists()]
        if missing_files:
            raise Exception(f"Missing required files: {', '.join(missing_files)}")

    def check_dependencies(self):
        """Check if required dependencies are installed."""
        required_packages = ['fastmcp', 'pydantic', 'numpy', 'pandas', 'matplotlib']

        missing_packages = [p for p in required_packages if importlib.util.find_spec(p) is None]
        if missing_packages:
            raise Exception(f"Missing required packages: {', '.join(missing_packages)}. Run 'uv sync' to install.")

    def check_mcp_server(self):
        """Check the MCP tools are registered and answer."""
        import asyncio

        sys.path.insert(0, str(self.project_root / 'src'))
        try:
            from fastmcp import Client

            from uavbs_planner.server import evaluate_link, mcp
        except ImportError as e:
            raise Exception(f"Cannot import MCP server: {e}")

        result = evaluate_link(0.0, 0.0, 100.0, 100.0, 0.0, 1e6)
        if not result.get('success'):
            raise Exception(f"evaluate_link failed: {result.get('error_message')}")

        async def list_names():
            async with Client(mcp) as client:
                return {tool.name for tool in await client.list_tools()}

        names = asyncio.run(list_names())
        missing = self.EXPECTED_TOOLS - names
        if missing:
            raise Exception(f"MCP server is missing tools: {', '.join(sorted(missing))}")
        print_info(f"MCP server has {len(names)} tools registered")

    def check_cli_tool(self):
        """Generate and solve a small scenario through the CLI."""
        with tempfile.TemporaryDirectory() as workdir:
            base = [sys.executable, '-m', 'uavbs_planner.cli']
            steps = [
                ['generate', '--n', '10', '--seed', '0', '--out-dir', workdir],
                ['solve', '--scenario', str(Path(workdir) / 'scenario_0.json'), '--grid', '2x3', '--eps-g', '50'],
            ]
            for step in steps:
                result = subprocess.run(base + step, capture_output=True, text=True, cwd=self.project_root)
                if result.returncode != 0:
                    raise Exception(f"'{step[0]}' failed: {result.stdout or result.stderr}")
            solution = json.loads(result.stdout)['solution']
            print_info(f"Smoke solve profit {solution['profit']:.3f}, coverage {solution['coverage']:.3f}")

    def check_documentation(self):
        """Check documentation completeness."""
        doc_files = [
            ('README', 'README.md'),
            ('Scenario schema', 'docs/scenario_schema.md'),
            ('Design notes', 'DESIGN.md'),
        ]

        missing_docs = []
        for doc_name, doc_path in doc_files:
            full_path = self.project_root / doc_path
            if not full_path.exists():
                missing_docs.append(doc_name)
            elif full_path.stat().st_size < 1000:
                self.warnings.append(f"{doc_name} documentation seems incomplete")

        if missing_docs:
            raise Exception(f"Missing documentation: {', '.join(missing_docs)}")

    def print_summary(self):
        """Print validation summary."""
        print_header("Validation Summary")

        if not self.errors and not self.warnings:
            print_success("All checks passed! Your setup is ready to use.")
            print_info("You can now:")
            print_info("  - Run the MCP server: uv run uavbs-planner-mcp")
            print_info("  - Solve a scenario: uv run uavbs-planner solve --scenario scenario.json")
            print_info("  - Run the experiment grid: uv run uavbs-planner experiment --out-dir results/")
        else:
            if self.errors:
                print_error(f"Found {len(self.errors)} error(s):")
                for error in self.errors:
                    print(f"  - {error}")

            if self.warnings:
                print_warning(f"Found {len(self.warnings)} warning(s):")
                for warning in self.warnings:
                    print(f"  - {warning}")

            if self.errors:
                print_error("Setup validation failed. Please fix the errors above.")
            else:
                print_warning("Setup validation completed with warnings.")

    def generate_report(self) -> Dict[str, Any]:
        """Generate a detailed validation report."""
        return {
            'timestamp': datetime.now(timezone.utc).isoformat(),
            'python_version': f"{sys.version_info.major}.{sys.version_info.minor}.{sys.version_info.micro}",
            'project_root': str(self.project_root),
            'errors': self.errors,
            'warnings': self.warnings,
            'status': 'PASSED' if not self.errors else 'FAILED',
        }


def main():
    """Main entry point."""
    validator = SetupValidator()
    success = validator.run_validation()

    if '--report' in sys.argv:
        report = validator.generate_report()
        report_file = validator.project_root / 'validation_report.json'
        with open(report_file, 'w') as f:
            json.dump(report, f, indent=2)
        print_info(f"Detailed report saved to: {report_file}")

    return 0 if success else 1


if __name__ == '__main__':
    sys.exit(main())
