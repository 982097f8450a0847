"""Runtime settings read from the environment."""

import os
from typing import Literal, Mapping, Optional

from pydantic import BaseModel, Field

WORKERS_ENV = "UAVBS_WORKERS"
LOG_LEVEL_ENV = "UAVBS_LOG_LEVEL"

LogLevel = Literal["DEBUG", "INFO", "WARNING", "ERROR"]


class RuntimeSettings(BaseModel):
    """Process-level knobs that do not belong to a scenario or a plan."""
    workers: int = Field(default=1, ge=1, description="Worker processes for experiment replications")
    log_level: LogLevel = Field(default="INFO", description="Default root log level")

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> "RuntimeSettings":
        env = os.environ if environ is None else environ
        values = {}
        if env.get(WORKERS_ENV):
            values["workers"] = env[WORKERS_ENV]
        if env.get(LOG_LEVEL_ENV):
            values["log_level"] = env[LOG_LEVEL_ENV].upper()
        return cls.model_validate(values)
