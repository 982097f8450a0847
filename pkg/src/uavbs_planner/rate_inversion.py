"""
Minimum bandwidth per (user, tier) at a fixed UAV position.

The Shannon rate has no closed-form inverse in bandwidth, but it is strictly
increasing and concave with supremum Theta / ln 2, so a bisection on
[0, bw_cap] finds the smallest bandwidth that meets a tier. All entries of a
demand table share the bracket and therefore the iteration count, which lets
the whole table be bisected at once.
"""

import logging
import math
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .channel import (
    LN2,
    ChannelParams,
    Point3,
    rate_from_snr_bandwidth,
    user_snr_bandwidth,
)
from .errors import DomainError

logger = logging.getLogger(__name__)

DEFAULT_BW_TOLERANCE_HZ = 100.0
MBPS = 1e6

# Marker stored in a DemandTable for a tier that cannot be delivered.
INFEASIBLE = None


class RateTiers(BaseModel):
    """Offered data rates in bps, strictly ascending."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    deltas: List[float] = Field(min_length=1, description="Data rates (bps)")

    @field_validator("deltas")
    @classmethod
    def _ascending(cls, deltas: List[float]) -> List[float]:
        if any(d <= 0 for d in deltas):
            raise ValueError("tier rates must be positive")
        if any(b <= a for a, b in zip(deltas, deltas[1:])):
            raise ValueError("tier rates must be strictly ascending")
        return deltas

    @classmethod
    def from_mbps(cls, rates_mbps: Sequence[float]) -> "RateTiers":
        return cls(deltas=[float(r) * MBPS for r in rates_mbps])

    @property
    def s(self) -> int:
        return len(self.deltas)

    @property
    def top(self) -> float:
        return self.deltas[-1]

    @property
    def mbps(self) -> List[float]:
        return [d / MBPS for d in self.deltas]


class DemandTable(BaseModel):
    """Required bandwidth (Hz) for every user and tier at ``uav``; ``None`` is infeasible."""
    model_config = ConfigDict(frozen=True)

    required_bw: List[List[Optional[float]]]
    uav: Point3

    @model_validator(mode="after")
    def _rows_monotone(self) -> "DemandTable":
        for i, row in enumerate(self.required_bw):
            previous = 0.0
            for k, value in enumerate(row):
                if value is None:
                    if any(v is not None for v in row[k:]):
                        raise ValueError(f"row {i}: feasible tier above an infeasible one")
                    break
                if value < previous:
                    raise ValueError(f"row {i}: required bandwidth decreases at tier {k}")
                previous = value
        return self

    @property
    def n(self) -> int:
        return len(self.required_bw)

    def entry(self, user: int, tier: int) -> Optional[float]:
        return self.required_bw[user][tier]

    def feasible_count(self) -> int:
        return sum(v is not None for row in self.required_bw for v in row)


def bisection_steps(bw_cap: float, tol: float) -> int:
    """Halvings needed to shrink [0, bw_cap] to width <= tol."""
    return max(0, math.ceil(math.log2(bw_cap / tol)))


def _check_bracket(bw_cap: float, tol: float) -> None:
    if not bw_cap > 0:
        raise DomainError(f"bw_cap must be positive, got {bw_cap}")
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")


def _bisect(theta: np.ndarray, delta: np.ndarray, bw_cap: float, tol: float) -> np.ndarray:
    """Smallest-bandwidth upper bracket end for each (theta, delta) pair.

    Keeps rate(lo) < delta <= rate(hi); returns ``hi``.
    """
    theta, delta = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(delta, dtype=float))
    lo = np.zeros(theta.shape)
    hi = np.full(theta.shape, float(bw_cap))
    for _ in range(bisection_steps(bw_cap, tol)):
        mid = 0.5 * (lo + hi)
        meets = rate_from_snr_bandwidth(theta, mid) >= delta
        hi = np.where(meets, mid, hi)
        lo = np.where(meets, lo, mid)
    return hi


def _feasible(theta: np.ndarray, delta: np.ndarray, bw_cap: float) -> np.ndarray:
    return (delta < theta / LN2) & (rate_from_snr_bandwidth(theta, bw_cap) >= delta)


def rate_ceiling(params: ChannelParams, uav: Point3, user: Point3) -> float:
    """Supremum of the user's rate as bandwidth grows without bound (Theta / ln 2)."""
    theta = user_snr_bandwidth(params, uav, np.array([user.x]), np.array([user.y]))
    return float(theta[0] / LN2)


def required_bandwidth(
    params: ChannelParams,
    uav: Point3,
    user: Point3,
    delta: float,
    bw_cap: float,
    tol: float = DEFAULT_BW_TOLERANCE_HZ,
) -> Optional[float]:
    """Smallest bandwidth (rounded up to the bracket) that delivers ``delta`` bps.

    Returns ``INFEASIBLE`` when ``delta`` is at or above the rate ceiling or
    not reachable within ``bw_cap``.
    """
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    _check_bracket(bw_cap, tol)
    theta = user_snr_bandwidth(params, uav, np.array([user.x]), np.array([user.y]))
    target = np.array([float(delta)])
    if not _feasible(theta, target, bw_cap)[0]:
        return INFEASIBLE
    return float(_bisect(theta, target, bw_cap, tol)[0])


def build_demand_table(
    params: ChannelParams,
    uav: Point3,
    users: Sequence[Point3],
    tiers: RateTiers,
    bw_cap: float,
    tol: float = DEFAULT_BW_TOLERANCE_HZ,
) -> DemandTable:
    """Required bandwidth of every (user, tier) pair at ``uav``."""
    if not users:
        raise DomainError("build_demand_table needs at least one user")
    _check_bracket(bw_cap, tol)
    xs = np.array([u.x for u in users])
    ys = np.array([u.y for u in users])
    theta = user_snr_bandwidth(params, uav, xs, ys)[:, np.newaxis]
    deltas = np.asarray(tiers.deltas)[np.newaxis, :]
    feasible = _feasible(theta, deltas, bw_cap)
    bandwidth = _bisect(theta, deltas, bw_cap, tol)
    rows = [
        [float(b) if ok else INFEASIBLE for b, ok in zip(b_row, ok_row)]
        for b_row, ok_row in zip(bandwidth, feasible)
    ]
    return DemandTable(required_bw=rows, uav=uav)
