"""
Log-mel frontend: PCM -> log-mel frames -> spliced, subsampled feature sequence.

Defaults reproduce the usual EEND configuration: 23 mel bins, 25 ms Hann
window, 10 ms hop, +-7 frames of context (x15 splice, D' = 345) and a 10x
subsampling that gives 100 ms model frames.
"""
from dataclasses import dataclass
from functools import lru_cache
from typing import List

import librosa
import numpy as np

from config.pipeline import FeatureConfig


@dataclass(frozen=True)
class FeatureSequence:
    """Spliced features, ``data`` is D' x T."""

    data: np.ndarray
    frame_period: float
    start_time: float = 0.0

    def __post_init__(self):
        if self.data.ndim != 2:
            raise ValueError(f"feature data must be 2-D, got shape {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise ValueError("feature data contains non-finite entries")

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def n_frames(self) -> int:
        return self.data.shape[1]

    def frame_interval(self, t: int) -> tuple:
        """Audio interval [start, end) covered by output frame ``t``."""
        start = self.start_time + t * self.frame_period
        return start, start + self.frame_period


@lru_cache(maxsize=8)
def _filterbank(cfg: FeatureConfig) -> np.ndarray:
    """Triangular HTK-mel filters from 0 Hz to Nyquist, (n_fft//2+1, n_mels)."""
    fb = librosa.filters.mel(
        sr=cfg.sample_rate,
        n_fft=cfg.n_fft,
        n_mels=cfg.n_mels,
        fmin=0.0,
        fmax=cfg.sample_rate / 2.0,
        htk=True,
        norm=None,
        dtype=np.float32,
    )
    return np.ascontiguousarray(fb.T)


@lru_cache(maxsize=8)
def _window(cfg: FeatureConfig) -> np.ndarray:
    return np.hanning(cfg.window_samples).astype(np.float32)


def _as_float(pcm) -> np.ndarray:
    x = np.asarray(pcm)
    if x.ndim != 1:
        raise ValueError(f"expected mono samples, got shape {x.shape}")
    if np.issubdtype(x.dtype, np.integer):
        return x.astype(np.float32) / 32768.0
    return x.astype(np.float32)


def logmel(pcm, cfg: FeatureConfig) -> np.ndarray:
    """
    Log mel energies of ``pcm``.

    Args:
        pcm: mono samples at ``cfg.sample_rate`` (int16 is scaled to [-1, 1))
        cfg: frontend configuration

    Returns:
        float32 matrix n_mels x F with F = floor((len - window) / hop) + 1,
        or n_mels x 0 when the signal is shorter than one window.
    """
    x = _as_float(pcm)
    win = cfg.window_samples
    if len(x) < win:
        return np.zeros((cfg.n_mels, 0), dtype=np.float32)

    frames = np.lib.stride_tricks.sliding_window_view(x, win)[::cfg.hop_samples]
    spectrum = np.fft.rfft(frames * _window(cfg), n=cfg.n_fft, axis=1)
    power = (spectrum.real ** 2 + spectrum.imag ** 2).astype(np.float32)
    energies = power @ _filterbank(cfg)
    return np.log(np.maximum(energies, np.float32(cfg.log_floor))).T.astype(np.float32)


def _splice_indices(n_available: int, centers: np.ndarray, context: int) -> np.ndarray:
    """Input frame index for each (output frame, context slot), edges replicated."""
    offsets = np.arange(-context, context + 1)
    return np.clip(centers[:, None] + offsets[None, :], 0, n_available - 1)


def splice_subsample(mels: np.ndarray, cfg: FeatureConfig, start_time: float = 0.0) -> FeatureSequence:
    """
    Stack 2*context+1 neighbouring frames and keep every ``subsample``-th one.

    Output frame t is centred on input frame ``subsample * t``; its D' column
    is the concatenation of input frames t-context .. t+context in time order.
    """
    n_mels, n_in = mels.shape
    if n_in < 1:
        raise ValueError("splice_subsample needs at least one input frame")
    centers = np.arange(0, n_in, cfg.subsample)
    cols = _splice_indices(n_in, centers, cfg.context)
    spliced = mels[:, cols]                      # n_mels x T x width
    data = spliced.transpose(2, 0, 1).reshape(cfg.splice_width * n_mels, len(centers))
    return FeatureSequence(
        data=np.ascontiguousarray(data, dtype=np.float32),
        frame_period=cfg.frame_period,
        start_time=start_time,
    )


def featurize(pcm, cfg: FeatureConfig) -> FeatureSequence:
    """Whole-signal frontend: ``splice_subsample(logmel(pcm))``."""
    mels = logmel(pcm, cfg)
    if mels.shape[1] == 0:
        return FeatureSequence(np.zeros((cfg.feature_dim, 0), dtype=np.float32), cfg.frame_period)
    return splice_subsample(mels, cfg)


class OnlineFeaturizer:
    """
    Incremental version of :func:`featurize` for streaming sessions.

    Mel frames are computed one at a time, so results do not depend on how the
    input was split across ``push`` calls. A spliced frame is released once
    its right context exists; ``flush`` releases the tail with edge
    replication, exactly as the batch frontend treats the end of a signal.
    """

    def __init__(self, cfg: FeatureConfig):
        self.cfg = cfg
        self._pending = np.zeros(0, dtype=np.float32)
        self._pending_start = 0      # absolute sample index of _pending[0]
        self._mels: List[np.ndarray] = []
        self._mel_base = 0           # absolute index of _mels[0]
        self._n_mels_total = 0
        self._n_emitted = 0
        self._n_samples = 0
        self._flushed = False

    @property
    def samples_seen(self) -> int:
        return self._n_samples

    @property
    def frames_emitted(self) -> int:
        return self._n_emitted

    def push(self, samples) -> np.ndarray:
        """Consume samples; return the newly complete D' x k frames."""
        if self._flushed:
            raise RuntimeError("featurizer already flushed")
        x = _as_float(samples)
        self._n_samples += len(x)
        self._pending = np.concatenate([self._pending, x])
        self._compute_mels()
        last_ready = self._n_mels_total - 1 - self.cfg.context
        return self._emit(last_center=last_ready)

    def flush(self) -> np.ndarray:
        """Release every remaining frame, replicating the last mel frame."""
        if self._flushed:
            return np.zeros((self.cfg.feature_dim, 0), dtype=np.float32)
        self._flushed = True
        return self._emit(last_center=self._n_mels_total - 1)

    def _compute_mels(self) -> None:
        win, hop = self.cfg.window_samples, self.cfg.hop_samples
        while True:
            start = self._n_mels_total * hop - self._pending_start
            if start + win > len(self._pending):
                break
            frame = logmel(self._pending[start:start + win], self.cfg)
            self._mels.append(frame[:, 0])
            self._n_mels_total += 1
        consumed = self._n_mels_total * hop - self._pending_start
        if consumed > 0:
            self._pending = self._pending[consumed:]
            self._pending_start += consumed

    def _emit(self, last_center: int) -> np.ndarray:
        cfg = self.cfg
        centers = []
        t = self._n_emitted
        while t * cfg.subsample <= last_center and t * cfg.subsample < self._n_mels_total:
            centers.append(t * cfg.subsample)
            t += 1
        if not centers:
            return np.zeros((cfg.feature_dim, 0), dtype=np.float32)

        cols = _splice_indices(self._n_mels_total, np.asarray(centers), cfg.context)
        out = np.empty((cfg.feature_dim, len(centers)), dtype=np.float32)
        for j, row in enumerate(cols):
            out[:, j] = np.concatenate([self._mels[c - self._mel_base] for c in row])
        self._n_emitted = t

        # Keep only what the next frame's left context can still reach.
        keep_from = min(max(0, self._n_emitted * cfg.subsample - cfg.context), self._n_mels_total)
        drop = keep_from - self._mel_base
        if drop > 0:
            del self._mels[:drop]
            self._mel_base = keep_from
        return out
