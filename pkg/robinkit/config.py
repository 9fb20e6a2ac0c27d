"""
Runtime settings for robinkit.
Defaults come from the environment (a local .env file is honoured) and are
overridden by command-line flags.
"""

import os
from functools import lru_cache
from typing import Any, Dict

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field

load_dotenv()

# command-line values layered over the environment
_overrides: Dict[str, Any] = {}


class Settings(BaseModel):
    model_config = ConfigDict(frozen=True)

    tol: float = Field(1e-8, gt=0, description="Solver residual tolerance (max norm)")
    grid_h: float = Field(1.0 / 32.0, gt=0, description="Default voxel spacing")
    max_iter: int = Field(100_000, ge=1, description="Iteration cap for the linear solver")
    seed: int = Field(42, description="Seed for randomized sweeps and searches")
    log_level: str = Field("INFO", description="Logging level name")
    flux_tol: float = Field(1e-2, gt=0, description="Relative discrete flux mismatch allowed for Neumann solves")


def _parse_float(raw: str) -> float:
    # accepts "1/32" as well as plain floats
    if "/" in raw:
        num, den = raw.split("/", 1)
        if float(den) == 0.0:
            raise ValueError(f"zero denominator in '{raw}'")
        return float(num) / float(den)
    return float(raw)


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Build settings from ROBINKIT_* environment variables."""
    values = {}
    if os.getenv("ROBINKIT_TOL"):
        values["tol"] = _parse_float(os.getenv("ROBINKIT_TOL"))
    if os.getenv("ROBINKIT_GRID_H"):
        values["grid_h"] = _parse_float(os.getenv("ROBINKIT_GRID_H"))
    if os.getenv("ROBINKIT_MAX_ITER"):
        values["max_iter"] = int(os.getenv("ROBINKIT_MAX_ITER"))
    if os.getenv("ROBINKIT_SEED"):
        values["seed"] = int(os.getenv("ROBINKIT_SEED"))
    if os.getenv("ROBINKIT_LOG_LEVEL"):
        values["log_level"] = os.getenv("ROBINKIT_LOG_LEVEL").upper()
    if os.getenv("ROBINKIT_FLUX_TOL"):
        values["flux_tol"] = _parse_float(os.getenv("ROBINKIT_FLUX_TOL"))
    values.update(_overrides)
    return Settings(**values)


def override_settings(**values: Any) -> Settings:
    """Layer non-None values over the environment and rebuild the cached settings."""
    _overrides.update({k: v for k, v in values.items() if v is not None})
    get_settings.cache_clear()
    return get_settings()


def reset_settings():
    _overrides.clear()
    get_settings.cache_clear()
