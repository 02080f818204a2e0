"""Configuration package."""
from .settings import settings
from .pipeline import FeatureConfig, ModelConfig, SimConfig, StreamConfig

__all__ = ["settings", "FeatureConfig", "ModelConfig", "SimConfig", "StreamConfig"]
