"""
Tier allocation at a fixed UAV position as a grouped two-dimensional knapsack.

Items are (user, tier) pairs. Each user is a group from which at most one item
may be taken; every item consumes backhaul rate (its tier's rate) and access
bandwidth (its required bandwidth). ``solve_dp`` runs the pseudo-polynomial
dynamic program over users with state (rate used, bandwidth used) on a
discretised grid; ``solve_bruteforce`` enumerates every joint choice and is
the verification oracle.

Tie-break, shared by both solvers: users are decided in ascending id and the
options of a user are tried as unserved, tier 0, tier 1, ...; a later choice
only replaces an earlier one when it is strictly more profitable.
"""

import itertools
import logging
import math
from collections import defaultdict
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import DimensionError, DomainError, ResourceLimitError, ScenarioSchemaError
from .rate_inversion import DemandTable, RateTiers

logger = logging.getLogger(__name__)

DEFAULT_RATE_UNIT_BPS = 0.5e6
DEFAULT_BW_UNIT_HZ = 1e4
DEFAULT_CELL_BUDGET = 250_000_000
DEFAULT_STATE_CAP = 3_000_000

_GRID_SLACK = 1e-9


class MckpItem(BaseModel):
    """One (user, tier) pair with its profit and two weights."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    user_id: int = Field(ge=0)
    tier_id: int = Field(ge=0)
    profit: float = Field(ge=0)
    rate_weight: float = Field(gt=0, description="Tier rate (bps)")
    bw_weight: float = Field(gt=0, description="Required bandwidth (Hz)")


class MckpInstance(BaseModel):
    """Items plus the backhaul rate capacity (bps) and access bandwidth capacity (Hz)."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    items: List[MckpItem] = Field(default_factory=list)
    rate_capacity: float = Field(ge=0)
    bw_capacity: float = Field(ge=0)

    @model_validator(mode="after")
    def _check_groups(self) -> "MckpInstance":
        for user_id, group in self.groups().items():
            tier_ids = [item.tier_id for item in group]
            if len(set(tier_ids)) != len(tier_ids):
                raise ValueError(f"user {user_id} has duplicate tier ids")
            weights = [item.rate_weight for item in group]
            if any(b <= a for a, b in zip(weights, weights[1:])):
                raise ValueError(f"user {user_id}: rate weights must ascend with tier id")
        return self

    def groups(self) -> Dict[int, List[MckpItem]]:
        """Items per user, users and tiers in ascending order."""
        grouped: Dict[int, List[MckpItem]] = defaultdict(list)
        for item in sorted(self.items, key=lambda it: (it.user_id, it.tier_id)):
            grouped[item.user_id].append(item)
        return dict(sorted(grouped.items()))


class Assignment(BaseModel):
    """Chosen tier per served user and the resulting totals."""
    model_config = ConfigDict(frozen=True)

    chosen: Dict[int, int] = Field(default_factory=dict)
    total_profit: float = 0.0
    used_rate: float = 0.0
    used_bw: float = 0.0

    @property
    def served(self) -> int:
        return len(self.chosen)


def build_instance(
    demand: DemandTable,
    willingness: Sequence[Sequence[float]],
    tiers: RateTiers,
    rate_capacity: float,
    bw_capacity: float,
) -> MckpInstance:
    """Turn a demand table into knapsack items; infeasible entries become absent items."""
    if len(willingness) != demand.n:
        raise DimensionError(f"willingness has {len(willingness)} rows, demand table has {demand.n}")
    items = []
    for i, (bw_row, phi_row) in enumerate(zip(demand.required_bw, willingness)):
        if len(bw_row) != tiers.s or len(phi_row) != tiers.s:
            raise DimensionError(f"row {i} does not have {tiers.s} tiers")
        for k, required in enumerate(bw_row):
            if required is None:
                continue
            items.append(MckpItem(
                user_id=i,
                tier_id=k,
                profit=float(phi_row[k]),
                rate_weight=tiers.deltas[k],
                bw_weight=required,
            ))
    return MckpInstance(items=items, rate_capacity=rate_capacity, bw_capacity=bw_capacity)


def _units_up(value: float, unit: float) -> int:
    q = value / unit
    nearest = round(q)
    if abs(q - nearest) <= _GRID_SLACK * max(1.0, abs(q)):
        return int(nearest)
    return math.ceil(q)


def _units_down(value: float, unit: float) -> int:
    q = value / unit
    nearest = round(q)
    if abs(q - nearest) <= _GRID_SLACK * max(1.0, abs(q)):
        return int(nearest)
    return math.floor(q)


def _assemble(chosen_items: Sequence[MckpItem]) -> Assignment:
    chosen_items = sorted(chosen_items, key=lambda it: it.user_id)
    return Assignment(
        chosen={it.user_id: it.tier_id for it in chosen_items},
        total_profit=math.fsum(it.profit for it in chosen_items),
        used_rate=math.fsum(it.rate_weight for it in chosen_items),
        used_bw=math.fsum(it.bw_weight for it in chosen_items),
    )


def solve_dp(
    inst: MckpInstance,
    rate_unit: float = DEFAULT_RATE_UNIT_BPS,
    bw_unit: float = DEFAULT_BW_UNIT_HZ,
    cell_budget: int = DEFAULT_CELL_BUDGET,
) -> Assignment:
    """Optimal assignment on the discretised instance.

    Weights are rounded up to whole units and capacities down, so every
    returned assignment also fits the continuous capacities.
    """
    if not rate_unit > 0 or not bw_unit > 0:
        raise DomainError("rate_unit and bw_unit must be positive")

    groups = []
    for group in inst.groups().values():
        options = [
            (_units_up(it.rate_weight, rate_unit), _units_up(it.bw_weight, bw_unit), it)
            for it in group
        ]
        groups.append(options)
    if not groups:
        return Assignment()

    # Capacity beyond what every user's largest item could use changes nothing.
    rate_cap = min(
        _units_down(inst.rate_capacity, rate_unit),
        sum(max(a for a, _, _ in options) for options in groups),
    )
    bw_cap = min(
        _units_down(inst.bw_capacity, bw_unit),
        sum(max(b for _, b, _ in options) for options in groups),
    )
    rows, cols = rate_cap + 1, bw_cap + 1
    if rows * cols * len(groups) > cell_budget:
        raise ResourceLimitError(
            f"DP table of {rows}x{cols} cells for {len(groups)} users exceeds the budget "
            f"of {cell_budget}; use coarser rate/bandwidth units"
        )

    table = np.zeros((rows, cols))
    choices = []
    for options in groups:
        updated = table.copy()
        choice = np.zeros((rows, cols), dtype=np.int16)
        for index, (a, b, item) in enumerate(options, start=1):
            if a >= rows or b >= cols:
                continue
            candidate = table[: rows - a, : cols - b] + item.profit
            target = updated[a:, b:]
            better = candidate > target
            target[better] = candidate[better]
            choice[a:, b:][better] = index
        choices.append(choice)
        table = updated

    picked = []
    r, w = rows - 1, cols - 1
    for options, choice in zip(reversed(groups), reversed(choices)):
        index = int(choice[r, w])
        if index:
            a, b, item = options[index - 1]
            picked.append(item)
            r -= a
            w -= b
    assignment = _assemble(picked)
    logger.debug(
        f"DP solved {len(groups)} users on {rows}x{cols} grid: "
        f"profit={assignment.total_profit:.4f} served={assignment.served}"
    )
    return assignment


def solve_bruteforce(inst: MckpInstance, state_cap: int = DEFAULT_STATE_CAP) -> Assignment:
    """Exact optimum over continuous weights by enumerating every joint choice."""
    groups = list(inst.groups().values())
    states = math.prod(len(group) + 1 for group in groups)
    if states > state_cap:
        raise ResourceLimitError(f"{states} joint choices exceed the state cap of {state_cap}")

    best: Tuple[MckpItem, ...] = ()
    best_profit = 0.0
    for combo in itertools.product(*[(None, *group) for group in groups]):
        chosen = tuple(item for item in combo if item is not None)
        if sum(it.rate_weight for it in chosen) > inst.rate_capacity:
            continue
        if sum(it.bw_weight for it in chosen) > inst.bw_capacity:
            continue
        profit = math.fsum(it.profit for it in chosen)
        if profit > best_profit:
            best, best_profit = chosen, profit
    return _assemble(best)


def evaluate_profit(assignment: Assignment, willingness: Sequence[Sequence[float]]) -> float:
    """Total willingness collected by an assignment; unserved users add nothing."""
    return math.fsum(willingness[user][tier] for user, tier in sorted(assignment.chosen.items()))


def utility(rate: float, tiers: RateTiers, willingness_row: Sequence[float]) -> float:
    """Piecewise pricing: profit of the highest tier whose rate is reached, 0 below the first."""
    reached = [k for k, delta in enumerate(tiers.deltas) if rate >= delta]
    return float(willingness_row[reached[-1]]) if reached else 0.0


def save_instance(inst: MckpInstance, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.write_text(inst.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return path


def load_instance(path: Union[str, Path]) -> MckpInstance:
    path = Path(path)
    try:
        return MckpInstance.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise ScenarioSchemaError.from_validation_error(f"knapsack instance {path}", e) from e

