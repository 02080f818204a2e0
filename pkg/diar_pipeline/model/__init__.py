"""Neural components: EEND-EDA backbone, refinement decoders, centroid GRU."""
from .network import OnlineDiarizationNetwork, tensor_shapes
from .eend_eda import (
    AttentionMask,
    AttractorSet,
    FrameEmbeddings,
    LocalPosteriors,
    apply_stop_rule,
    build_latency_mask,
    eda_attractors,
    encode,
    speaker_posteriors,
)
from .refine import GhostSpeaker, augment_with_ghost, refine_attractors, refine_centroids

__all__ = [
    "OnlineDiarizationNetwork",
    "tensor_shapes",
    "AttentionMask",
    "AttractorSet",
    "FrameEmbeddings",
    "LocalPosteriors",
    "apply_stop_rule",
    "build_latency_mask",
    "eda_attractors",
    "encode",
    "speaker_posteriors",
    "GhostSpeaker",
    "augment_with_ghost",
    "refine_attractors",
    "refine_centroids",
]
