import os
from typing import Optional

from dotenv import load_dotenv

load_dotenv()

WORKERS_ENV = "RDPG_OOS_WORKERS"
EPSILON_ENV = "RDPG_OOS_EPSILON"
SEED_ENV = "RDPG_OOS_SEED"

DEFAULT_EPSILON = 0.05
DEFAULT_SEED = 0


def _env(name: str) -> Optional[str]:
    value = os.getenv(name)
    if value is None or not value.strip():
        return None
    return value.strip()


def get_workers(override: Optional[int] = None) -> int:
    """
    Worker count for parallel trials: explicit override, then RDPG_OOS_WORKERS,
    then the number of CPUs.
    """
    if override is not None:
        value = override
    else:
        raw = _env(WORKERS_ENV)
        try:
            value = int(raw) if raw is not None else (os.cpu_count() or 1)
        except ValueError:
            raise ValueError(f"{WORKERS_ENV} must be a positive integer, got '{raw}'")
    if value < 1:
        raise ValueError(f"worker count must be >= 1, got {value}")
    return value


def get_epsilon(override: Optional[float] = None) -> float:
    """ML constraint margin: explicit override, then RDPG_OOS_EPSILON, then 0.05."""
    if override is not None:
        return float(override)
    raw = _env(EPSILON_ENV)
    if raw is None:
        return DEFAULT_EPSILON
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"{EPSILON_ENV} must be a number, got '{raw}'")


def get_seed(override: Optional[int] = None) -> int:
    """Master seed: explicit override, then RDPG_OOS_SEED, then 0."""
    if override is not None:
        value = int(override)
    else:
        raw = _env(SEED_ENV)
        try:
            value = int(raw) if raw is not None else DEFAULT_SEED
        except ValueError:
            raise ValueError(f"{SEED_ENV} must be an integer, got '{raw}'")
    if value < 0:
        raise ValueError(f"seed must be >= 0, got {value}")
    return value
