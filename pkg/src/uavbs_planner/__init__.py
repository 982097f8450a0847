"""UAV base station placement and tiered data-rate allocation planner."""

__version__ = "0.1.0"
