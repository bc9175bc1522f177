"""Library configuration using pydantic-settings."""

from functools import lru_cache
from typing import Literal

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Numeric and runtime settings loaded from ``LAWCOLLAPSE_*`` environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="LAWCOLLAPSE_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Comparison tolerances
    tolerance: float = 1e-9
    collapse_tolerance: float = 1e-7  # collapse verdicts

    # Law construction
    probability_sum_tolerance: float = 1e-6
    min_atom_probability: float = 1e-15

    # Size limits for exhaustive work
    oracle_max_atoms: int = 8  # n! permutations
    exhaustive_max_atoms: int = 16  # 2^n subsets
    search_max_atoms: int = 7  # optimiser brute force

    # Run settings
    seed: int = 42
    output: Literal["human", "json"] = "human"
    log_level: str = "WARNING"


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


def resolve_tol(tol: float | None) -> float:
    """Return ``tol`` or the configured global tolerance when it is None."""
    return get_settings().tolerance if tol is None else tol


def resolve_collapse_tol(tol: float | None) -> float:
    """Return ``tol`` or the configured collapse-verdict tolerance when it is None."""
    return get_settings().collapse_tolerance if tol is None else tol
