from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import dotenv_values
from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ConfigError


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="PDQUANT_",
        env_file=".env",
        case_sensitive=False,
        extra="ignore",
    )

    # Application
    app_name: str = "pdquant"
    environment: str = "development"
    debug: bool = False

    # Logging
    log_level: str = "INFO"
    log_file: Optional[str] = None

    # Execution
    threads: int = Field(default=1, ge=1, description="Default worker count for sweeps and batches")
    output_dir: Path = Path("results")
    # Upper bound on pixels rasterized per batch of Monte Carlo draws
    chunk_pixels: int = Field(default=2_000_000, ge=1024)

    # Simulation defaults
    domain_length: float = Field(default=1000.0, gt=0)
    iterations: int = Field(default=20000, ge=1)
    seed: int = Field(default=0, ge=0, lt=2**64)

    @field_validator("log_level")
    @classmethod
    def validate_log_level(cls, v: str) -> str:
        level = v.upper()
        if level not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"Unknown log level: {v}")
        return level


# Global settings instance
settings = Settings()


SIM_CONFIG_KEYS = {
    "domain_length",
    "cell_sizes",
    "radii",
    "iterations",
    "seed",
    "boundary_mode",
}


def load_config_file(path: Path) -> Dict[str, Any]:
    """Read a plain ``key = value`` simulation config file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}", details={"path": str(path)})

    values = {key.strip().lower(): value for key, value in dotenv_values(path).items()}
    unknown = sorted(set(values) - SIM_CONFIG_KEYS)
    if unknown:
        raise ConfigError(
            f"Unknown config keys in {path}: {', '.join(unknown)}",
            details={"unknown": unknown, "allowed": sorted(SIM_CONFIG_KEYS)},
        )
    missing = sorted(key for key, value in values.items() if value is None or value == "")
    if missing:
        raise ConfigError(f"Config keys without a value in {path}: {', '.join(missing)}")
    return values
