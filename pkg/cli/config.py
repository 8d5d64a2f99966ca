"""Configuration management using pydantic-settings."""
import json
import os
from pathlib import Path

from dotenv import load_dotenv
from pydantic import Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from core.dto.config import RunConfig
from core.exceptions import ConfigError

# API keys are read with os.getenv by name, so .env must reach the process environment
load_dotenv()


class Settings(BaseSettings):
    """Process settings."""

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        env_prefix="REPDIFF_",
        case_sensitive=False,
        extra="ignore"
    )

    # Environment
    environment: str = Field(
        default_factory=lambda: os.getenv("ENVIRONMENT", "development"),
        description="Environment: development, ci, production"
    )

    # Logging
    log_level: str = Field("INFO", description="Logging level")
    log_dir: str = Field("logs", description="Directory for rotating log files")

    # Storage
    database_url: str = Field(
        "sqlite+aiosqlite:///runs/cache.db",
        description="Async SQLAlchemy URL of the response cache"
    )
    echo_sql: bool = Field(False, description="Echo SQL statements")

    @field_validator("log_level", mode="before")
    @classmethod
    def normalize_level(cls, v: str) -> str:
        """Accept lowercase level names."""
        return str(v).upper()


# Global settings instance
settings = Settings()


def load_run_config(path: str | Path) -> RunConfig:
    """
    Load and validate a run configuration file.

    Args:
        path: Path to a JSON configuration file

    Returns:
        Validated RunConfig

    Raises:
        ConfigError: If the file is missing, is not JSON or fails validation
    """
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError(f"Config file not found: {config_path}")
    try:
        data = json.loads(config_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ConfigError(f"Config file is not valid JSON: {e}", path=str(config_path))
    return parse_run_config(data)


def parse_run_config(data: dict) -> RunConfig:
    """Validate an already parsed configuration mapping."""
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc'])}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"Invalid configuration: {problems}")


def database_url_for(config: RunConfig) -> str:
    """Cache database URL, with the run config taking precedence over the environment."""
    return config.paths.database_url or settings.database_url
