"""
Transformer building blocks shared by the encoder and both refinement decoders.

Everything is written out by hand instead of using ``nn.MultiheadAttention`` so
that masked keys get an exact zero weight and no fused kernel changes the
arithmetic between calls. Tensors are sequence-major: (length, d_model).
"""
import math
from typing import Optional

import torch
import torch.nn as nn
import torch.nn.functional as F


def scaled_dot_product(
    q: torch.Tensor,
    k: torch.Tensor,
    v: torch.Tensor,
    allowed: Optional[torch.Tensor] = None,
) -> torch.Tensor:
    """
    Softmax attention over the last two dims.

    ``allowed`` is a boolean (queries x keys) matrix; disallowed scores are
    replaced by -inf before the softmax, which subtracts the row maximum.
    Every query row is a convex combination of the value rows.
    """
    scores = q @ k.transpose(-2, -1) / math.sqrt(q.shape[-1])
    if allowed is not None:
        scores = scores.masked_fill(~allowed, float("-inf"))
    weights = torch.softmax(scores, dim=-1)
    return weights @ v


class MultiHeadAttention(nn.Module):
    """Multi-head attention with separate q/k/v/out projections."""

    def __init__(self, d_model: int, n_heads: int):
        super().__init__()
        self.n_heads = n_heads
        self.head_dim = d_model // n_heads
        self.q = nn.Linear(d_model, d_model)
        self.k = nn.Linear(d_model, d_model)
        self.v = nn.Linear(d_model, d_model)
        self.out = nn.Linear(d_model, d_model)

    def _split(self, x: torch.Tensor) -> torch.Tensor:
        # (L, D) -> (heads, L, head_dim)
        return x.view(x.shape[0], self.n_heads, self.head_dim).transpose(0, 1)

    def forward(
        self,
        query: torch.Tensor,
        memory: torch.Tensor,
        allowed: Optional[torch.Tensor] = None,
    ) -> torch.Tensor:
        q = self._split(self.q(query))
        k = self._split(self.k(memory))
        v = self._split(self.v(memory))
        ctx = scaled_dot_product(q, k, v, allowed)
        ctx = ctx.transpose(0, 1).reshape(query.shape[0], -1)
        return self.out(ctx)


class FeedForward(nn.Module):
    def __init__(self, d_model: int, ff_dim: int):
        super().__init__()
        self.w1 = nn.Linear(d_model, ff_dim)
        self.w2 = nn.Linear(ff_dim, d_model)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.w2(F.relu(self.w1(x)))


class EncoderLayer(nn.Module):
    """Pre-norm self-attention block."""

    def __init__(self, d_model: int, n_heads: int, ff_dim: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(d_model)
        self.attn = MultiHeadAttention(d_model, n_heads)
        self.norm2 = nn.LayerNorm(d_model)
        self.ff = FeedForward(d_model, ff_dim)

    def forward(self, x: torch.Tensor, allowed: Optional[torch.Tensor] = None) -> torch.Tensor:
        h = self.norm1(x)
        x = x + self.attn(h, h, allowed)
        return x + self.ff(self.norm2(x))


class DecoderBlock(nn.Module):
    """
    One transformer decoder block: self-attention over the queries,
    cross-attention into ``memory`` (keys = values), feed-forward.

    No positional encodings anywhere, so the block is equivariant to
    permutations of the queries and invariant to permutations of memory.
    """

    def __init__(self, d_model: int, n_heads: int, ff_dim: int):
        super().__init__()
        self.norm_self = nn.LayerNorm(d_model)
        self.self_attn = MultiHeadAttention(d_model, n_heads)
        self.norm_cross = nn.LayerNorm(d_model)
        self.cross_attn = MultiHeadAttention(d_model, n_heads)
        self.norm_ff = nn.LayerNorm(d_model)
        self.ff = FeedForward(d_model, ff_dim)

    def forward(self, queries: torch.Tensor, memory: torch.Tensor) -> torch.Tensor:
        h = self.norm_self(queries)
        x = queries + self.self_attn(h, h)
        x = x + self.cross_attn(self.norm_cross(x), memory)
        return x + self.ff(self.norm_ff(x))
