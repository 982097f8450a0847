"""
Problem instances: generation, validation and the JSON file format.

Random streams come from ``numpy.random.SeedSequence(seed).spawn(2)``: child 0
drives scenario generation (parent points, clustering draws, positions,
willingness, in that order) and child 1 drives the random-placement
heuristic. Both use the PCG64 bit generator.
"""

import logging
import math
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .channel import ChannelParams, GroundStation, Point3
from .errors import DomainError, ScenarioSchemaError
from .rate_inversion import RateTiers

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1

TIER_SETS: Dict[int, Tuple[float, ...]] = {
    1: (1.0, 2.0),
    2: (1.0, 2.0, 4.0),
    3: (1.0, 2.0, 4.0, 8.0),
}

SCENARIO_STREAM = 0
HEURISTIC_STREAM = 1


def tiers_for_set(tier_set_id: int) -> RateTiers:
    """Rate tiers of one of the predefined option sets (Mbps values)."""
    try:
        return RateTiers.from_mbps(TIER_SETS[tier_set_id])
    except KeyError:
        raise DomainError(f"Unknown tier set {tier_set_id}, expected one of {sorted(TIER_SETS)}") from None


def _stream(seed: int, index: int) -> np.random.Generator:
    children = np.random.SeedSequence(seed).spawn(2)
    return np.random.Generator(np.random.PCG64(children[index]))


def scenario_rng(seed: int) -> np.random.Generator:
    return _stream(seed, SCENARIO_STREAM)


def heuristic_rng(seed: int) -> np.random.Generator:
    return _stream(seed, HEURISTIC_STREAM)


class Region(BaseModel):
    """Rectangular service area [0, width] x [0, height] in meters."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    width: float = Field(default=1500.0, gt=0)
    height: float = Field(default=1500.0, gt=0)

    def contains(self, point: Point3) -> bool:
        return 0.0 <= point.x <= self.width and 0.0 <= point.y <= self.height

    @property
    def center(self) -> Tuple[float, float]:
        return self.width / 2.0, self.height / 2.0


class ScenarioMetadata(BaseModel):
    model_config = ConfigDict(frozen=True)

    parent_count: Optional[int] = None
    clustering_rate: Optional[float] = None
    cluster_spread_m: Optional[float] = None
    tier_set_id: Optional[int] = None


class Scenario(BaseModel):
    """Users, ground stations, tiers and willingness for one planning problem."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    region: Region = Field(default_factory=Region)
    users: List[Point3] = Field(min_length=1)
    gbss: List[GroundStation] = Field(min_length=1)
    tiers: RateTiers
    willingness: List[List[float]]
    channel: ChannelParams = Field(default_factory=ChannelParams)
    altitude_bracket: Tuple[float, float] = (50.0, 500.0)
    seed: int = 0
    metadata: ScenarioMetadata = Field(default_factory=ScenarioMetadata)

    @model_validator(mode="after")
    def _check_consistency(self) -> "Scenario":
        for i, user in enumerate(self.users):
            if user.h != 0.0 or not self.region.contains(user):
                raise ValueError(f"user {i} must lie on the ground inside the region")
        for j, station in enumerate(self.gbss):
            if station.position.h != 0.0 or not self.region.contains(station.position):
                raise ValueError(f"gbs {j} must lie on the ground inside the region")
        if len(self.willingness) != len(self.users):
            raise ValueError(
                f"willingness has {len(self.willingness)} rows for {len(self.users)} users"
            )
        for i, row in enumerate(self.willingness):
            if len(row) != self.tiers.s:
                raise ValueError(f"willingness row {i} has {len(row)} entries, expected {self.tiers.s}")
            if any(v < 0 for v in row):
                raise ValueError(f"willingness row {i} has a negative entry")
            if any(b < a for a, b in zip(row, row[1:])):
                raise ValueError(f"willingness row {i} must be nondecreasing across tiers")
        low, high = self.altitude_bracket
        if not 0.0 < low < high:
            raise ValueError("altitude bracket must satisfy 0 < low < high")
        return self

    @property
    def n(self) -> int:
        return len(self.users)

    @property
    def m(self) -> int:
        return len(self.gbss)

    def max_profit(self) -> float:
        """Profit if every user were served at the top tier."""
        return math.fsum(row[-1] for row in self.willingness)


class GenSpec(BaseModel):
    """Parameters for drawing a random scenario."""
    model_config = ConfigDict(frozen=True, allow_inf_nan=False)

    n: int = Field(default=50, ge=1)
    m: int = Field(default=4, ge=1)
    tier_set_id: int = Field(default=1)
    parent_count: Tuple[int, int] = Field(default=(3, 7), description="Inclusive range")
    clustering_rate: Tuple[float, float] = Field(default=(0.5, 0.9), description="Uniform range")
    cluster_spread_m: float = Field(default=50.0, ge=0)
    seed: int = 0
    region: Region = Field(default_factory=Region)
    gbs_bandwidth_hz: float = Field(default=10e6, gt=0)
    altitude_bracket: Tuple[float, float] = (50.0, 500.0)
    channel: ChannelParams = Field(default_factory=ChannelParams)

    @model_validator(mode="after")
    def _check_ranges(self) -> "GenSpec":
        low, high = self.parent_count
        if not 1 <= low <= high:
            raise ValueError("parent_count range must satisfy 1 <= low <= high")
        low_rate, high_rate = self.clustering_rate
        if not 0.0 <= low_rate <= high_rate <= 1.0:
            raise ValueError("clustering_rate range must lie within [0, 1]")
        if self.tier_set_id not in TIER_SETS:
            raise ValueError(f"tier_set_id must be one of {sorted(TIER_SETS)}")
        return self


def gen_willingness(
    spec: GenSpec, tiers: RateTiers, rng: Optional[np.random.Generator] = None
) -> List[List[float]]:
    """Willingness rows phi_i1 = d_1 U, phi_ik = phi_i,k-1 + (d_k - d_k-1) U with d in Mbps."""
    rng = scenario_rng(spec.seed) if rng is None else rng
    steps = np.diff(np.asarray(tiers.mbps), prepend=0.0)
    draws = rng.random((spec.n, tiers.s))
    return np.cumsum(draws * steps, axis=1).tolist()


def generate(spec: GenSpec) -> Scenario:
    """Clustered users around uniform parent points plus a uniform remainder; uniform GBSs."""
    rng = scenario_rng(spec.seed)
    width, height = spec.region.width, spec.region.height

    parent_count = int(rng.integers(spec.parent_count[0], spec.parent_count[1] + 1))
    clustering_rate = float(rng.uniform(*spec.clustering_rate))
    clustered = min(spec.n, math.floor(clustering_rate * spec.n + 1e-9))

    parents = rng.uniform((0.0, 0.0), (width, height), size=(parent_count, 2))
    owners = rng.integers(0, parent_count, size=clustered)
    offsets = rng.normal(0.0, spec.cluster_spread_m, size=(clustered, 2))
    cluster_xy = np.clip(parents[owners] + offsets, (0.0, 0.0), (width, height))
    uniform_xy = rng.uniform((0.0, 0.0), (width, height), size=(spec.n - clustered, 2))
    gbs_xy = rng.uniform((0.0, 0.0), (width, height), size=(spec.m, 2))

    tiers = tiers_for_set(spec.tier_set_id)
    willingness = gen_willingness(spec, tiers, rng)

    users = [Point3(x=float(x), y=float(y)) for x, y in np.vstack([cluster_xy, uniform_xy])]
    gbss = [
        GroundStation(position=Point3(x=float(x), y=float(y)), bandwidth_hz=spec.gbs_bandwidth_hz)
        for x, y in gbs_xy
    ]
    scenario = Scenario(
        region=spec.region,
        users=users,
        gbss=gbss,
        tiers=tiers,
        willingness=willingness,
        channel=spec.channel,
        altitude_bracket=spec.altitude_bracket,
        seed=spec.seed,
        metadata=ScenarioMetadata(
            parent_count=parent_count,
            clustering_rate=clustering_rate,
            cluster_spread_m=spec.cluster_spread_m,
            tier_set_id=spec.tier_set_id,
        ),
    )
    logger.debug(
        f"Generated scenario seed={spec.seed}: n={spec.n} ({clustered} clustered around "
        f"{parent_count} parents), m={spec.m}, tiers={tiers.mbps}"
    )
    return scenario


def generate_batch(spec: GenSpec, count: int) -> List[Scenario]:
    """``count`` scenarios with seeds spec.seed, spec.seed + 1, ..."""
    return [generate(spec.model_copy(update={"seed": spec.seed + k})) for k in range(count)]


# ---------------------------------------------------------------------------
# File format
# ---------------------------------------------------------------------------

class RegionDocument(BaseModel):
    model_config = ConfigDict(extra="forbid")

    width_m: float
    height_m: float


class ScenarioDocument(BaseModel):
    """On-disk layout of a scenario (see docs/scenario_schema.md)."""
    model_config = ConfigDict(extra="forbid")

    schema_version: int = SCHEMA_VERSION
    region: RegionDocument
    channel: ChannelParams
    users: List[Tuple[float, float]]
    gbss: List[Tuple[float, float, float]]
    tiers_bps: List[float]
    willingness: List[List[float]]
    altitude_bracket_m: Tuple[float, float]
    seed: int
    metadata: ScenarioMetadata = Field(default_factory=ScenarioMetadata)

    @classmethod
    def from_scenario(cls, scenario: Scenario) -> "ScenarioDocument":
        return cls(
            region=RegionDocument(width_m=scenario.region.width, height_m=scenario.region.height),
            channel=scenario.channel,
            users=[(u.x, u.y) for u in scenario.users],
            gbss=[(g.position.x, g.position.y, g.bandwidth_hz) for g in scenario.gbss],
            tiers_bps=list(scenario.tiers.deltas),
            willingness=scenario.willingness,
            altitude_bracket_m=scenario.altitude_bracket,
            seed=scenario.seed,
            metadata=scenario.metadata,
        )

    def to_scenario(self) -> Scenario:
        if self.schema_version != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {self.schema_version}")
        try:
            tiers = RateTiers(deltas=self.tiers_bps)
        except ValidationError as e:
            raise ScenarioSchemaError.from_validation_error("scenario document", e, field="tiers_bps") from e
        return Scenario(
            region=Region(width=self.region.width_m, height=self.region.height_m),
            users=[Point3(x=x, y=y) for x, y in self.users],
            gbss=[
                GroundStation(position=Point3(x=x, y=y), bandwidth_hz=b)
                for x, y, b in self.gbss
            ],
            tiers=tiers,
            willingness=self.willingness,
            channel=self.channel,
            altitude_bracket=self.altitude_bracket_m,
            seed=self.seed,
            metadata=self.metadata,
        )


def dumps(scenario: Scenario) -> str:
    return ScenarioDocument.from_scenario(scenario).model_dump_json(indent=2) + "\n"


def loads(text: str, source: str = "scenario") -> Scenario:
    """Parse and validate scenario JSON; errors name the offending field paths."""
    try:
        document = ScenarioDocument.model_validate_json(text)
    except ValidationError as e:
        raise ScenarioSchemaError.from_validation_error(source, e) from e
    try:
        return document.to_scenario()
    except ScenarioSchemaError as e:
        raise ScenarioSchemaError(source, e.errors) from e
    except ValidationError as e:
        raise ScenarioSchemaError.from_validation_error(source, e) from e
    except ValueError as e:
        raise ScenarioSchemaError(source, [("schema_version", str(e))]) from e


def save_scenario(scenario: Scenario, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps(scenario), encoding="utf-8")
    logger.info(f"Wrote scenario {path}")
    return path


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    return loads(path.read_text(encoding="utf-8"), source=f"scenario {path}")


def scenario_summary(scenario: Scenario) -> Dict[str, object]:
    return {
        "n": scenario.n,
        "m": scenario.m,
        "tiers_mbps": scenario.tiers.mbps,
        "region_m": [scenario.region.width, scenario.region.height],
        "altitude_bracket_m": list(scenario.altitude_bracket),
        "seed": scenario.seed,
        "max_profit": scenario.max_profit(),
        **{k: v for k, v in scenario.metadata.model_dump().items() if v is not None},
    }


def degenerate_single_tier(scenario: Scenario) -> Scenario:
    """One tier at the mean offered rate, each user's willingness set to their row mean."""
    mean_rate = float(np.mean(scenario.tiers.deltas))
    return scenario.model_copy(update={
        "tiers": RateTiers(deltas=[mean_rate]),
        "willingness": [[math.fsum(row) / len(row)] for row in scenario.willingness],
    })

