"""
Refinement decoders.

* attractor decoder: attractors attend to each other and to the chunk's own
  frame embeddings (never to past chunks).
* centroid decoder: centroids attend to [ghost speaker, refined attractors].
  The ghost speaker gives centroids of speakers absent from the chunk
  something other than a real attractor to attend to.
"""
from dataclasses import dataclass

import torch

from .eend_eda import AttractorSet, FrameEmbeddings
from .network import OnlineDiarizationNetwork


@dataclass(frozen=True)
class GhostSpeaker:
    embedding: torch.Tensor  # D

    @classmethod
    def from_network(cls, net: OnlineDiarizationNetwork) -> "GhostSpeaker":
        return cls(net.ghost_speaker.detach())


@torch.no_grad()
def refine_attractors(
    attractors: AttractorSet,
    emb: FrameEmbeddings,
    net: OnlineDiarizationNetwork,
) -> torch.Tensor:
    """A' = TransformerDecoder(A, E, E), D x S_n. Empty input gives an empty output."""
    vectors = attractors.vectors
    if vectors.shape[1] == 0 or not net.config.use_attractor_decoder:
        return vectors
    refined = net.attractor_decoder(vectors.T, emb.data.T)
    return refined.T.contiguous()


def augment_with_ghost(refined_attractors: torch.Tensor, ghost: GhostSpeaker) -> torch.Tensor:
    """A+ = [g_spk, A'], D x (S_n + 1), ghost speaker in column 0."""
    return torch.cat([ghost.embedding[:, None], refined_attractors], dim=1)


@torch.no_grad()
def refine_centroids(
    centroids: torch.Tensor,
    a_plus: torch.Tensor,
    net: OnlineDiarizationNetwork,
) -> torch.Tensor:
    """
    H' = TransformerDecoder(H, A+, A+) with one output column per centroid.

    Args:
        centroids: D x C current (unrefined) centroids
        a_plus: D x (S_n + 1), ghost speaker first

    Returns:
        D x C refined centroids; empty when C = 0.
    """
    if centroids.shape[1] == 0 or not net.config.use_centroid_decoder:
        return centroids
    refined = net.centroid_decoder(centroids.T, a_plus.T)
    return refined.T.contiguous()
