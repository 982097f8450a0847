"""Shared fixtures: a hand-built scenario small enough for every solver."""

import pytest

from uavbs_planner.channel import ChannelParams, GroundStation, Point3
from uavbs_planner.placement import SearchConfig
from uavbs_planner.rate_inversion import RateTiers
from uavbs_planner.scenario import Region, Scenario

USER_XY = [(100.0, 100.0), (120.0, 80.0), (300.0, 300.0), (320.0, 310.0), (200.0, 200.0), (50.0, 350.0)]
WILLINGNESS = [[0.5, 1.0], [0.3, 0.9], [0.8, 1.2], [0.2, 0.4], [0.6, 0.6], [0.1, 1.5]]


@pytest.fixture
def params() -> ChannelParams:
    return ChannelParams()


@pytest.fixture
def tiny_scenario() -> Scenario:
    return Scenario(
        region=Region(width=400.0, height=400.0),
        users=[Point3(x=x, y=y) for x, y in USER_XY],
        gbss=[
            GroundStation(position=Point3(x=0.0, y=0.0), bandwidth_hz=10e6),
            GroundStation(position=Point3(x=400.0, y=400.0), bandwidth_hz=10e6),
        ],
        tiers=RateTiers.from_mbps([1.0, 2.0]),
        willingness=WILLINGNESS,
        seed=7,
    )


@pytest.fixture
def small_cfg() -> SearchConfig:
    return SearchConfig(grid_rows=2, grid_cols=3, epsilon_g=20.0, replications_random=5, seed=7)


@pytest.fixture
def tight_scenario(tiny_scenario) -> Scenario:
    """The shared scenario with GBS bandwidth scarce enough that allocation binds."""
    return tiny_scenario.model_copy(update={
        "gbss": [
            GroundStation(position=g.position, bandwidth_hz=0.5e6) for g in tiny_scenario.gbss
        ],
    })
