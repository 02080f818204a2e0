"""
Typed configuration for the frontend, the network, streaming sessions and the
conversation simulator.

All models are immutable; invalid values raise ``pydantic.ValidationError``
(a ``ValueError``) at construction time.
"""
import math
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

# Whole-frame conversions tolerate float noise such as 0.3 / 0.1.
_FRAME_TOLERANCE = 1e-6


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class FeatureConfig(_Frozen):
    """Log-mel frontend; defaults give D' = 23 * 15 = 345 and 100 ms frames."""

    sample_rate: int = Field(8000, gt=0)
    n_mels: int = Field(23, ge=1)
    window: float = Field(0.025, gt=0)
    hop: float = Field(0.010, gt=0)
    context: int = Field(7, ge=0)
    subsample: int = Field(10, ge=1)
    log_floor: float = Field(1e-10, gt=0)

    @model_validator(mode="after")
    def _check_hop(self) -> "FeatureConfig":
        if self.hop > self.window:
            raise ValueError(f"hop ({self.hop}) must not exceed window ({self.window})")
        if self.window_samples < 1 or self.hop_samples < 1:
            raise ValueError("window and hop must each cover at least one sample")
        return self

    @property
    def window_samples(self) -> int:
        return int(round(self.window * self.sample_rate))

    @property
    def hop_samples(self) -> int:
        return int(round(self.hop * self.sample_rate))

    @property
    def n_fft(self) -> int:
        return 1 << (self.window_samples - 1).bit_length()

    @property
    def splice_width(self) -> int:
        return 2 * self.context + 1

    @property
    def feature_dim(self) -> int:
        return self.n_mels * self.splice_width

    @property
    def frame_period(self) -> float:
        return self.hop * self.subsample


class ModelConfig(_Frozen):
    """Shape of the EEND-EDA backbone, the refinement decoders and the GRU."""

    input_dim: int = Field(345, ge=1)
    d_model: int = Field(256, ge=1)
    n_heads: int = Field(4, ge=1)
    n_encoder_layers: int = Field(4, ge=1)
    ff_dim: int = Field(1024, ge=1)
    max_speakers: int = Field(4, ge=1)
    existence_threshold: float = Field(0.5, gt=0.0, lt=1.0)
    n_decoder_layers_refine: int = Field(1, ge=1, le=1)
    # Architecture ablation: "Base" disables both decoders.
    use_attractor_decoder: bool = True
    use_centroid_decoder: bool = True

    @model_validator(mode="after")
    def _check_heads(self) -> "ModelConfig":
        if self.d_model % self.n_heads:
            raise ValueError(f"d_model ({self.d_model}) must be divisible by n_heads ({self.n_heads})")
        return self

    def architecture(self) -> dict:
        """Fields that determine tensor names and shapes."""
        return self.model_dump(include={
            "input_dim", "d_model", "n_heads", "n_encoder_layers",
            "ff_dim", "n_decoder_layers_refine",
        })


class StreamConfig(_Frozen):
    """Latency/buffer of an online session, in seconds."""

    latency: float = Field(gt=0)
    buffer: float = Field(gt=0)
    # Encoder look-ahead; defaults to the latency.
    mask_latency: Optional[float] = Field(None, gt=0)
    unbounded_buffer: bool = False
    model: ModelConfig = Field(default_factory=ModelConfig)
    features: FeatureConfig = Field(default_factory=FeatureConfig)

    @model_validator(mode="after")
    def _check_stream(self) -> "StreamConfig":
        if self.buffer < self.latency:
            raise ValueError(
                f"buffer ({self.buffer} s) must be greater than or equal to latency ({self.latency} s)"
            )
        checked = (
            ("latency", self.latency),
            ("buffer", self.buffer),
            ("mask_latency", self.encoder_latency),
        )
        for name, seconds in checked:
            frames = seconds / self.features.frame_period
            if abs(frames - round(frames)) > _FRAME_TOLERANCE:
                raise ValueError(
                    f"{name} ({seconds} s) is not a whole number of {self.features.frame_period} s frames"
                )
        if self.model.input_dim != self.features.feature_dim:
            raise ValueError(
                f"model input_dim ({self.model.input_dim}) does not match "
                f"feature dimension ({self.features.feature_dim})"
            )
        return self

    @property
    def frame_period(self) -> float:
        return self.features.frame_period

    @property
    def hop_frames(self) -> int:
        return int(round(self.latency / self.frame_period))

    @property
    def encoder_latency(self) -> float:
        return self.latency if self.mask_latency is None else self.mask_latency

    @property
    def mask_frames(self) -> int:
        """Look-ahead of the encoder mask in frames."""
        return int(round(self.encoder_latency / self.frame_period))

    @property
    def buffer_frames(self) -> Optional[int]:
        """FIFO capacity in frames; ``None`` when the buffer is unbounded."""
        if self.unbounded_buffer:
            return None
        return int(round(self.buffer / self.frame_period))


class SimConfig(_Frozen):
    """Synthetic conversation generator."""

    n_speakers: int = Field(2, ge=1)
    duration: float = Field(60.0, gt=0)
    mean_turn: float = Field(3.0, gt=0)
    overlap_ratio: float = Field(0.1, ge=0.0, lt=1.0)
    silence_ratio: float = Field(0.1, ge=0.0, lt=1.0)
    seed: int = 0
    sample_rate: int = Field(8000, gt=0)

    @model_validator(mode="after")
    def _check_ratios(self) -> "SimConfig":
        if self.overlap_ratio + self.silence_ratio >= 1.0:
            raise ValueError("overlap_ratio + silence_ratio must be below 1")
        if not math.isfinite(self.duration):
            raise ValueError("duration must be finite")
        return self
