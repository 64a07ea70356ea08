from pydantic_settings import BaseSettings
from pydantic import Field
from functools import lru_cache


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    # Application
    log_level: str = Field(default="INFO")

    # Filesystem
    data_dir: str = Field(
        default="data",
        description="Directory where generated datasets are written"
    )
    output_dir: str = Field(
        default="runs",
        description="Directory for checkpoints, forecasts and reports"
    )

    # Run configuration
    run_config_path: str | None = Field(
        default=None,
        description="Path to a run config file (defaults to config/run_config.yaml)"
    )

    # Parallelism
    threads: int = Field(
        default=1,
        description="Worker threads for generation and forecasting"
    )

    model_config = {
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "case_sensitive": False,
        "env_prefix": "VIDYN_",
    }


@lru_cache
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()


settings = get_settings()
