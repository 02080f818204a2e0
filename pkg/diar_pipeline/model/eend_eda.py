"""
Chunk-level EEND-EDA inference: latency-masked frame encoder, encoder-decoder
attractors with a stop rule, and sigmoid speaker posteriors.

Orientation follows the maths: embeddings are D x T, attractors D x S,
posteriors S x T. Internally torch works sequence-major.
"""
from dataclasses import dataclass
from typing import Optional, Sequence

import torch

from config.pipeline import ModelConfig
from ..errors import ConfigurationError
from ..features import FeatureSequence
from .network import OnlineDiarizationNetwork

# Largest float32 below 1 and smallest normal float32, for the open (0, 1) bound.
_PROB_MAX = 1.0 - 2.0 ** -24
_PROB_MIN = float(torch.finfo(torch.float32).tiny)


@dataclass(frozen=True)
class AttentionMask:
    """``allowed[t, k]`` is True iff key k may be attended by query t."""

    allowed: torch.Tensor
    latency_frames: int

    @property
    def n_frames(self) -> int:
        return self.allowed.shape[0]

    @property
    def is_full(self) -> bool:
        return self.latency_frames >= self.n_frames - 1


@dataclass(frozen=True)
class FrameEmbeddings:
    data: torch.Tensor  # D x T

    @property
    def n_frames(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class AttractorSet:
    """
    ``vectors`` is D x S_n; ``existence`` holds S_n + 1 probabilities: the
    S_n accepted ones and the first rejected one (or, when the S_max cap was
    hit, one more accepted candidate).
    """

    vectors: torch.Tensor
    existence: torch.Tensor

    @property
    def n_speakers(self) -> int:
        return self.vectors.shape[1]


@dataclass(frozen=True)
class LocalPosteriors:
    data: torch.Tensor  # S_n x T_n

    @property
    def n_speakers(self) -> int:
        return self.data.shape[0]

    @property
    def n_frames(self) -> int:
        return self.data.shape[1]


def build_latency_mask(n_frames: int, latency_frames: int) -> AttentionMask:
    """Band mask allowing key k for query t iff k <= t + latency_frames."""
    if n_frames < 1 or latency_frames < 0:
        raise ValueError(f"invalid mask request: T={n_frames}, latency={latency_frames}")
    t = torch.arange(n_frames)
    allowed = t[None, :] <= t[:, None] + latency_frames
    return AttentionMask(allowed=allowed, latency_frames=latency_frames)


@torch.no_grad()
def encode(x: FeatureSequence, mask: AttentionMask, net: OnlineDiarizationNetwork) -> FrameEmbeddings:
    """
    Run the frame encoder on one chunk.

    The latency mask is applied in the first layer and deeper layers are
    strictly causal, so the whole stack looks at most ``latency_frames``
    ahead. A full mask leaves every layer unmasked (offline behaviour).
    """
    cfg = net.config
    if x.dim != cfg.input_dim:
        raise ConfigurationError(
            f"feature dimension {x.dim} does not match the encoder input ({cfg.input_dim})"
        )
    if mask.n_frames != x.n_frames:
        raise ConfigurationError(f"mask covers {mask.n_frames} frames, chunk has {x.n_frames}")

    enc = net.encoder
    h = enc.input_norm(enc.input(torch.from_numpy(x.data.T.copy())))
    first: Optional[torch.Tensor] = None if mask.is_full else mask.allowed
    deeper: Optional[torch.Tensor] = None if mask.is_full else build_latency_mask(x.n_frames, 0).allowed
    for i, layer in enumerate(enc.layers):
        h = layer(h, first if i == 0 else deeper)
    return FrameEmbeddings(enc.output_norm(h).T.contiguous())


def apply_stop_rule(existence: Sequence[float], threshold: float, max_speakers: int) -> int:
    """Number of attractors before the first probability below ``threshold``, capped at S_max."""
    for i, p in enumerate(existence[:max_speakers]):
        if p < threshold:
            return i
    return min(len(existence), max_speakers)


@torch.no_grad()
def eda_attractors(
    emb: FrameEmbeddings,
    net: OnlineDiarizationNetwork,
    cfg: Optional[ModelConfig] = None,
) -> AttractorSet:
    """
    Estimate attractors: the LSTM encoder reads frames in time order, the
    decoder is fed S_max + 1 zero vectors and every candidate goes through
    the existence head.
    """
    cfg = cfg or net.config
    if emb.n_frames < 1:
        raise ValueError("eda_attractors needs at least one frame")
    frames = emb.data.T.unsqueeze(0)
    _, state = net.eda.encoder(frames)
    zeros = frames.new_zeros(1, cfg.max_speakers + 1, frames.shape[-1])
    candidates, _ = net.eda.decoder(zeros, state)
    candidates = candidates[0]
    existence = torch.sigmoid(net.eda.counter(candidates)).reshape(-1)

    n_speakers = apply_stop_rule(existence.tolist(), cfg.existence_threshold, cfg.max_speakers)
    return AttractorSet(
        vectors=candidates[:n_speakers].T.contiguous(),
        existence=existence[:n_speakers + 1].clone(),
    )


@torch.no_grad()
def speaker_posteriors(attractors: AttractorSet, emb: FrameEmbeddings) -> LocalPosteriors:
    """sigmoid(A^T E), kept strictly inside (0, 1)."""
    logits = attractors.vectors.T @ emb.data
    return LocalPosteriors(torch.sigmoid(logits).clamp(_PROB_MIN, _PROB_MAX))
