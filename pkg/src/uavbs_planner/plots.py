"""SVG figures for an experiment report."""

import logging
from pathlib import Path
from typing import List, Union

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .errors import ReportError  # noqa: E402
from .experiment import ExperimentReport, summarize  # noqa: E402

logger = logging.getLogger(__name__)

SVG_HASH_SALT = "uavbs-planner"

SOLVER_LABELS = {
    "gss": "GSS + grid search",
    "random": "Random placement",
    "fixed": "Centroid, fixed altitudes",
    "oracle": "Lattice oracle",
}


def _save(fig: plt.Figure, path: Path) -> Path:
    fig.tight_layout()
    # Fixed salt and no date: element ids and header are the same on every run.
    with plt.rc_context({"svg.hashsalt": SVG_HASH_SALT}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info(f"Wrote {path}")
    return path


def render_plots(report: ExperimentReport, out_dir: Union[str, Path]) -> List[Path]:
    """Write profit_vs_n_tierset{t}.svg, coverage_vs_n.svg and, when available, single_tier_gain.svg."""
    if not report.rows:
        raise ReportError("cannot plot an empty report")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    means = summarize(report)
    written = []

    for tier_set, frame in means.groupby("tier_set", sort=True):
        fig, ax = plt.subplots(figsize=(6, 4))
        for solver, series in frame.groupby("solver", sort=True):
            ax.plot(series["n"], series["normalized_profit"], marker="o", label=SOLVER_LABELS.get(solver, solver))
        ax.set_xlabel("Number of users")
        ax.set_ylabel("Normalized profit")
        ax.set_title(f"Tier set {tier_set}")
        ax.set_ylim(0, 1)
        ax.grid(True, alpha=0.3)
        ax.legend()
        written.append(_save(fig, out_dir / f"profit_vs_n_tierset{tier_set}.svg"))

    fig, (cov_ax, profit_ax) = plt.subplots(1, 2, figsize=(10, 4))
    for (tier_set, solver), series in means.groupby(["tier_set", "solver"], sort=True):
        label = f"{SOLVER_LABELS.get(solver, solver)}, set {tier_set}"
        cov_ax.plot(series["n"], series["coverage"], marker=".", label=label)
        profit_ax.plot(series["n"], series["profit"], marker=".", label=label)
    cov_ax.set_xlabel("Number of users")
    cov_ax.set_ylabel("Coverage")
    profit_ax.set_xlabel("Number of users")
    profit_ax.set_ylabel("Profit")
    profit_ax.legend(fontsize="small")
    written.append(_save(fig, out_dir / "coverage_vs_n.svg"))

    gains = means[(means["solver"] == "gss") & means["single_tier_improvement"].notna()]
    if gains.empty:
        logger.warning("No single-tier improvements in the report; skipping single_tier_gain.svg")
        return written
    fig, ax = plt.subplots(figsize=(6, 4))
    for tier_set, series in gains.groupby("tier_set", sort=True):
        ax.plot(series["n"], 100.0 * series["single_tier_improvement"], marker="s", label=f"Tier set {tier_set}")
    ax.axhline(0.0, color="grey", linewidth=0.8)
    ax.set_xlabel("Number of users")
    ax.set_ylabel("Profit gain over single tier (%)")
    ax.legend()
    written.append(_save(fig, out_dir / "single_tier_gain.svg"))
    return written
