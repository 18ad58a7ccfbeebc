"""
Process-level configuration for the hard/soft constraint controller toolkit
"""

from functools import lru_cache
from typing import Optional

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Logging
    LOG: str = "WARNING"
    LOG_JSON: bool = False

    # Output
    OUT_DIR: str = "runs"
    CSV_SIGNIFICANT_DIGITS: int = 12

    # Batch mode
    BATCH_WORKERS: Optional[int] = None

    # Project
    PROJECT_NAME: str = "hsctrl"
    VERSION: str = "1.0.0"

    model_config = SettingsConfigDict(
        env_prefix="HS_CTRL_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )

    def model_post_init(self, __context) -> None:
        self._validate_settings()

    def _validate_settings(self) -> None:
        """Reject settings that would make every run misbehave"""
        if self.LOG.upper() not in {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}:
            raise ValueError(f"HS_CTRL_LOG must be a logging level name, got {self.LOG!r}")
        if not 1 <= self.CSV_SIGNIFICANT_DIGITS <= 17:
            raise ValueError("HS_CTRL_CSV_SIGNIFICANT_DIGITS must lie in [1, 17]")
        if self.BATCH_WORKERS is not None and self.BATCH_WORKERS < 1:
            raise ValueError("HS_CTRL_BATCH_WORKERS must be a positive integer")

    @property
    def log_level(self) -> str:
        """Upper-cased logging level name"""
        return self.LOG.upper()


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance"""
    return Settings()


# Global settings instance
settings = get_settings()
