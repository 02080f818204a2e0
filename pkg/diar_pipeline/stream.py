"""
Online session: FIFO feature buffer, one pipeline step per latency hop, and
the stitched global diarization.

Per step the FIFO (the most recent ``buffer`` of frames) is encoded, the
chunk's attractors are refined and matched against the centroid bank, and
only the newest ``latency`` worth of frames (the innovation) is emitted under
the global speaker numbering. Emitted frames are never revised.
"""
import time
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

import numpy as np
import torch
from loguru import logger

from config.pipeline import StreamConfig
from .cluster import (
    Assignment,
    CentroidBank,
    assignment_probs,
    match,
    permute_local,
    update_centroids,
)
from .errors import ConfigurationError, ContractViolation
from .features import FeatureSequence, OnlineFeaturizer
from .io.weights import WeightBundle
from .model import (
    GhostSpeaker,
    augment_with_ghost,
    build_latency_mask,
    eda_attractors,
    encode,
    refine_attractors,
    refine_centroids,
    speaker_posteriors,
)
from .model.network import OnlineDiarizationNetwork
from .segments import SegmentList, activity_to_segments

ACTIVITY_THRESHOLD = 0.5


@dataclass(frozen=True)
class Emission:
    """Binary activity for frames [start_frame, start_frame + n_frames), one row per global speaker."""

    step: int
    start_frame: int
    activity: np.ndarray

    @property
    def n_frames(self) -> int:
        return self.activity.shape[1]


@dataclass(frozen=True)
class OpCount:
    """Multiply-accumulate count of one pipeline step, by term."""

    terms: Dict[str, int]

    @property
    def total(self) -> int:
        return sum(self.terms.values())

    def __getitem__(self, name: str) -> int:
        return self.terms[name]


@dataclass(frozen=True)
class StepRecord:
    """What one pipeline step saw and decided; ``posteriors`` are the chunk-local S_n x T outputs."""

    step: int
    start_frame: int
    chunk_frames: int
    n_attractors: int
    centroids_before: int
    centroids_after: int
    assignment: Assignment
    ops: OpCount
    wall_time: float
    posteriors: np.ndarray


class GlobalDiarization:
    """Stitched output: activity (and posteriors) of every global speaker per emitted frame."""

    def __init__(self, frame_period: float):
        self.frame_period = frame_period
        self._activity: List[np.ndarray] = []
        self._probs: List[np.ndarray] = []
        self.n_frames = 0
        self.n_speakers = 0

    @property
    def speakers(self) -> List[int]:
        return list(range(self.n_speakers))

    def append(self, activity: np.ndarray, probs: np.ndarray) -> None:
        if activity.shape[0] < self.n_speakers:
            raise ContractViolation("global speakers can only be added, never removed")
        self._activity.append(activity)
        self._probs.append(probs)
        self.n_frames += activity.shape[1]
        self.n_speakers = activity.shape[0]

    def _stack(self, blocks: List[np.ndarray], dtype) -> np.ndarray:
        out = np.zeros((self.n_speakers, self.n_frames), dtype=dtype)
        t = 0
        for block in blocks:
            out[:block.shape[0], t:t + block.shape[1]] = block
            t += block.shape[1]
        return out

    @property
    def activity(self) -> np.ndarray:
        """S x T binary matrix; rows of later speakers are zero before their discovery."""
        return self._stack(self._activity, np.uint8)

    @property
    def probabilities(self) -> np.ndarray:
        """Stitched innovation posteriors, S x T; absent speakers are 0."""
        return self._stack(self._probs, np.float32)

    def to_segments(self, prefix: str = "spk") -> SegmentList:
        labels = [f"{prefix}{i}" for i in self.speakers]
        return activity_to_segments(self.activity, self.frame_period, labels)


def fifo_update(fifo: np.ndarray, new_frames: np.ndarray, buffer_frames: Optional[int]) -> np.ndarray:
    """Append ``new_frames`` (D' x k) and keep the newest ``buffer_frames`` columns."""
    merged = np.concatenate([fifo, new_frames], axis=1)
    if buffer_frames is not None and merged.shape[1] > buffer_frames:
        merged = merged[:, merged.shape[1] - buffer_frames:]
    return merged


def count_step_ops(cfg: StreamConfig, n_centroids: int = 0, n_frames: Optional[int] = None) -> OpCount:
    """
    Closed-form multiply-accumulate count of one pipeline step.

    Depends only on the chunk length (``buffer_frames`` unless given), the
    model size, S_max (worst case) and the current centroid count.
    LayerNorms, activations and softmaxes are not counted.
    """
    m = cfg.model
    if n_frames is None:
        n_frames = cfg.buffer_frames
        if n_frames is None:
            raise ValueError("n_frames is required when the buffer is unbounded")
    T, D, F, S, C, L = n_frames, m.d_model, m.ff_dim, m.max_speakers, n_centroids, m.n_encoder_layers

    terms = {
        "input_projection": T * m.input_dim * D,
        "encoder_projections": L * 4 * T * D * D,
        "encoder_attention": L * 2 * T * T * D,
        "encoder_feedforward": L * 2 * T * D * F,
        "eda_encoder": T * 8 * D * D,
        "eda_decoder": (S + 1) * 8 * D * D + (S + 1) * D,
        "posteriors": S * T * D,
    }
    if m.use_attractor_decoder:
        terms["attractor_decoder"] = (
            4 * S * D * D + 2 * S * S * D            # self-attention
            + 2 * S * D * D + 2 * T * D * D + 2 * S * T * D   # cross-attention over the chunk
            + 2 * S * D * F
        )
    if m.use_centroid_decoder and C > 0:
        terms["centroid_decoder"] = (
            4 * C * D * D + 2 * C * C * D
            + 2 * C * D * D + 2 * (S + 1) * D * D + 2 * C * (S + 1) * D
            + 2 * C * D * F
        )
    terms["assignment"] = S * (C + 1) * D
    terms["gru_update"] = 6 * S * D * D
    return OpCount(terms)


class Session:
    """
    One online diarization stream. Not thread-safe; a network may be shared
    by several sessions since inference never mutates it.
    """

    def __init__(
        self,
        network: OnlineDiarizationNetwork,
        cfg: StreamConfig,
        on_emit: Optional[Callable[[Emission], None]] = None,
    ):
        if network.config.architecture() != cfg.model.architecture():
            raise ConfigurationError("network architecture does not match the stream configuration")
        self.config = cfg
        self.network = network
        self.on_emit = on_emit
        self.featurizer = OnlineFeaturizer(cfg.features)
        self.fifo = np.zeros((cfg.features.feature_dim, 0), dtype=np.float32)
        self.bank = CentroidBank.empty(network)
        self.ghost = GhostSpeaker.from_network(network)
        self.emitted = GlobalDiarization(cfg.frame_period)
        self.history: List[StepRecord] = []
        self._pending = np.zeros((cfg.features.feature_dim, 0), dtype=np.float32)
        self._finalized = False

    @property
    def clock(self) -> int:
        """Frames emitted so far."""
        return self.emitted.n_frames

    @property
    def finalized(self) -> bool:
        return self._finalized

    def push_audio(self, samples) -> List[Emission]:
        """Featurize ``samples`` and run one step per complete hop; partial hops wait."""
        if self._finalized:
            raise ContractViolation("push_audio called after finalize")
        frames = self.featurizer.push(samples)
        self._pending = np.concatenate([self._pending, frames], axis=1)
        return self._drain()

    def finalize(self) -> List[Emission]:
        """Flush the frontend and emit the tail, zero-padded to a hop and truncated back."""
        if self._finalized:
            return []
        self._finalized = True
        self._pending = np.concatenate([self._pending, self.featurizer.flush()], axis=1)
        out = self._drain()
        tail = self._pending.shape[1]
        if tail > 0:
            hop = self.config.hop_frames
            padded = np.zeros((self._pending.shape[0], hop), dtype=np.float32)
            padded[:, :tail] = self._pending
            self._pending = self._pending[:, tail:]
            out.append(self._step(padded, n_emit=tail))
        logger.info(
            "session finalized: {} frames, {} speakers, {} steps",
            self.clock, self.emitted.n_speakers, len(self.history),
        )
        return out

    def _drain(self) -> List[Emission]:
        hop = self.config.hop_frames
        out = []
        while self._pending.shape[1] >= hop:
            chunk, self._pending = self._pending[:, :hop], self._pending[:, hop:]
            out.append(self._step(chunk, n_emit=hop))
        return out

    @torch.no_grad()
    def _step(self, new_frames: np.ndarray, n_emit: int) -> Emission:
        started = time.perf_counter()
        cfg, net, hop = self.config, self.network, self.config.hop_frames
        step = len(self.history)

        self.fifo = fifo_update(self.fifo, new_frames, cfg.buffer_frames)
        n_frames = self.fifo.shape[1]
        # The fifo ends one hop past the emitted clock.
        chunk_start = self.clock + hop - n_frames
        chunk = FeatureSequence(self.fifo, cfg.frame_period, start_time=chunk_start * cfg.frame_period)
        mask = build_latency_mask(n_frames, cfg.mask_frames)
        emb = encode(chunk, mask, net)
        attractors = eda_attractors(emb, net)
        local = speaker_posteriors(attractors, emb)

        before = self.bank.n_centroids
        if attractors.n_speakers == 0:
            assignment = Assignment.empty(before)
            stitched = torch.zeros(before, n_frames)
        else:
            refined = refine_attractors(attractors, emb, net)
            a_plus = augment_with_ghost(refined, self.ghost)
            refined_centroids = refine_centroids(self.bank.centroids, a_plus, net)
            probs = assignment_probs(refined_centroids, self.bank.h0, refined)
            assignment = match(probs)
            stitched = permute_local(local, assignment)
            self.bank = update_centroids(self.bank, refined, assignment)

        innovation = stitched[:, n_frames - hop:n_frames - hop + n_emit].numpy().astype(np.float32)
        activity = (innovation > ACTIVITY_THRESHOLD).astype(np.uint8)
        emission = Emission(step=step, start_frame=self.clock, activity=activity)
        self.emitted.append(activity, innovation)

        record = StepRecord(
            step=step,
            start_frame=chunk_start,
            chunk_frames=n_frames,
            n_attractors=attractors.n_speakers,
            centroids_before=before,
            centroids_after=self.bank.n_centroids,
            assignment=assignment,
            ops=count_step_ops(cfg, before, n_frames),
            wall_time=time.perf_counter() - started,
            posteriors=local.data.numpy().copy(),
        )
        self.history.append(record)
        logger.debug(
            "step {}: T={} S_n={} C {}->{} targets={}",
            step, n_frames, attractors.n_speakers, before, self.bank.n_centroids, assignment.targets,
        )
        if self.on_emit is not None:
            self.on_emit(emission)
        return emission


def new_session(
    weights: WeightBundle,
    cfg: StreamConfig,
    on_emit: Optional[Callable[[Emission], None]] = None,
) -> Session:
    network = weights.to_network(cfg.model)
    logger.info(
        "new session: latency {} s ({} frames), encoder look-ahead {} frames, buffer {}",
        cfg.latency, cfg.hop_frames, cfg.mask_frames,
        "unbounded" if cfg.unbounded_buffer else f"{cfg.buffer} s ({cfg.buffer_frames} frames)",
    )
    return Session(network, cfg, on_emit=on_emit)


def diarize_samples(weights: WeightBundle, cfg: StreamConfig, samples, block_size: Optional[int] = None) -> Session:
    """Run a whole signal through a fresh session, optionally in ``block_size`` pieces."""
    session = new_session(weights, cfg)
    samples = np.asarray(samples)
    if block_size is None:
        session.push_audio(samples)
    else:
        for start in range(0, len(samples), block_size):
            session.push_audio(samples[start:start + block_size])
    session.finalize()
    return session
