"""
Centralized runtime settings for the diarization engine.
Uses pydantic-settings for type-safe configuration from environment variables.

Only knobs that cannot change a diarization result belong here; everything
that does (latency, buffer, model shape, collar...) is passed explicitly.
"""
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    model_config = SettingsConfigDict(
        env_prefix="DIAR_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore"
    )

    # Logging
    log_level: str = "WARNING"
    log_format: str = "<green>{time:HH:mm:ss.SSS}</green> | <level>{level: <8}</level> | {name}:{function} - {message}"
    log_colorize: bool = False


# Global settings instance
settings = Settings()
