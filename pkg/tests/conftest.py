import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from config.pipeline import FeatureConfig, ModelConfig, SimConfig, StreamConfig  # noqa: E402
from diar_pipeline.io.simulate import simulate_conversation  # noqa: E402
from diar_pipeline.io.weights import random_weights  # noqa: E402


@pytest.fixture(scope="session")
def small_features() -> FeatureConfig:
    # D' = 8 * 5 = 40, 100 ms frames
    return FeatureConfig(n_mels=8, context=2)


@pytest.fixture(scope="session")
def small_model(small_features) -> ModelConfig:
    return ModelConfig(
        input_dim=small_features.feature_dim,
        d_model=16,
        n_heads=2,
        n_encoder_layers=2,
        ff_dim=32,
        max_speakers=3,
    )


@pytest.fixture(scope="session")
def small_bundle(small_model):
    return random_weights(small_model, seed=0)


@pytest.fixture(scope="session")
def small_net(small_bundle):
    return small_bundle.to_network()


@pytest.fixture
def stream_config(small_model, small_features):
    def make(latency: float = 1.0, buffer: float = 1.0, **kwargs) -> StreamConfig:
        return StreamConfig(latency=latency, buffer=buffer, model=small_model, features=small_features, **kwargs)
    return make


@pytest.fixture(scope="session")
def conversation():
    """20 s two-speaker conversation at 8 kHz with its reference."""
    return simulate_conversation(SimConfig(n_speakers=2, duration=20.0, seed=3))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
