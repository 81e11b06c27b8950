"""Application configuration and settings."""

from pathlib import Path

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Runtime settings loaded from environment variables (prefix ROFU_).

    Nothing here changes numerical results: seeds, horizons and algorithm
    knobs belong in the experiment config file.
    """

    model_config = SettingsConfigDict(
        env_prefix="ROFU_",
        env_file=".env",
        env_file_encoding="utf-8",
        extra="ignore",
    )

    # Paths
    base_dir: Path = Path(__file__).parent.parent
    presets_dir: Path = Path(__file__).parent / "presets"
    output_dir: Path = Path("results")

    # Execution
    max_workers: int = Field(default=1, ge=1)
    show_progress: bool = True

    # Logging
    log_level: str = "INFO"


settings = Settings()
