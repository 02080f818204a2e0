"""
Container for every trainable tensor of the online diarization model.

The ``state_dict()`` key set of :class:`OnlineDiarizationNetwork` is the
required tensor set of a weight bundle, so tensor names follow module
attribute names (``encoder.layers.0.attn.q.weight``, ``gru.update.W``, ...).
"""
from functools import lru_cache
from typing import Dict, Tuple

import torch
import torch.nn as nn

from config.pipeline import ModelConfig
from .attention import DecoderBlock, EncoderLayer
from .gru import GruCell


class FrameEncoder(nn.Module):
    """Input projection + LayerNorm, pre-norm layers, final LayerNorm. No positional encoding."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.input = nn.Linear(cfg.input_dim, cfg.d_model)
        self.input_norm = nn.LayerNorm(cfg.d_model)
        self.layers = nn.ModuleList(
            EncoderLayer(cfg.d_model, cfg.n_heads, cfg.ff_dim)
            for _ in range(cfg.n_encoder_layers)
        )
        self.output_norm = nn.LayerNorm(cfg.d_model)


class EncoderDecoderAttractor(nn.Module):
    """LSTM encoder over frames, LSTM decoder fed zeros, linear existence head."""

    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.encoder = nn.LSTM(cfg.d_model, cfg.d_model, batch_first=True)
        self.decoder = nn.LSTM(cfg.d_model, cfg.d_model, batch_first=True)
        self.counter = nn.Linear(cfg.d_model, 1)


class OnlineDiarizationNetwork(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        self.config = cfg
        self.encoder = FrameEncoder(cfg)
        self.eda = EncoderDecoderAttractor(cfg)
        self.attractor_decoder = DecoderBlock(cfg.d_model, cfg.n_heads, cfg.ff_dim)
        self.centroid_decoder = DecoderBlock(cfg.d_model, cfg.n_heads, cfg.ff_dim)
        self.gru = GruCell(cfg.d_model, cfg.d_model)
        self.h0 = nn.Parameter(torch.zeros(cfg.d_model))
        self.ghost_speaker = nn.Parameter(torch.zeros(cfg.d_model))
        self.requires_grad_(False)
        self.eval()


@lru_cache(maxsize=16)
def tensor_shapes(cfg: ModelConfig) -> Dict[str, Tuple[int, ...]]:
    """Required tensor names and shapes, in canonical order."""
    net = OnlineDiarizationNetwork(cfg)
    return {name: tuple(t.shape) for name, t in net.state_dict().items()}
