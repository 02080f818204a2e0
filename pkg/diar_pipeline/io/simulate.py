"""
Synthetic conversations for desk-scale runs.

Each speaker is band-limited noise with its own pass band. Turns alternate
between speakers; a share of the turn transitions overlap and the others are
separated by silence. Overlap and silence totals are drawn so the whole
conversation hits the requested fractions. Silence is exact digital zero.
"""
from typing import List, Tuple

import numpy as np
from loguru import logger
from scipy import signal

from config.pipeline import SimConfig
from ..segments import Segment, SegmentList

# Boundaries are placed on a 10 ms grid.
_GRID = 0.01
# Solo stretches separate consecutive overlaps, so at most two speakers talk at once.
_MIN_SOLO_WEIGHT = 0.1
_FADE = 0.005
_LEVEL = 0.25


def _turn_speakers(n_speakers: int, n_turns: int, rng: np.random.Generator) -> List[int]:
    order = [int(rng.integers(n_speakers))]
    for _ in range(n_turns - 1):
        if n_speakers == 1:
            order.append(0)
        else:
            nxt = int(rng.integers(n_speakers - 1))
            order.append(nxt if nxt < order[-1] else nxt + 1)
    return order


def _split(total: float, n: int, rng: np.random.Generator, floor: float = 0.0) -> np.ndarray:
    """Random split of ``total`` into ``n`` non-negative parts; ``floor`` keeps every part away from zero."""
    if n == 0:
        return np.zeros(0)
    weights = rng.exponential(1.0, n) + floor
    return total * weights / weights.sum()


def _snap(t: float, duration: float) -> float:
    return min(round(round(t / _GRID) * _GRID, 2), duration)


def _layout(cfg: SimConfig, overlap_ratio: float, rng: np.random.Generator) -> List[Tuple[int, float, float]]:
    """
    Lay out turns as solo stretches joined by transitions that are either an
    overlap (both speakers) or a silence gap. Solo, overlap and silence totals
    are fixed up front, so the measured fractions match the targets up to
    grid rounding.
    """
    duration = cfg.duration
    n_turns = max(1, int(round(duration * (1.0 - cfg.silence_ratio + overlap_ratio) / cfg.mean_turn)))
    speakers = _turn_speakers(cfg.n_speakers, n_turns, rng)

    n_transitions = n_turns - 1
    total = overlap_ratio + cfg.silence_ratio
    overlapping = rng.random(n_transitions) < (overlap_ratio / total if total > 0 else 0.0)
    if overlap_ratio > 0 and n_transitions > 0 and not overlapping.any():
        overlapping[rng.integers(n_transitions)] = True
    if not overlapping.any():
        overlap_ratio = 0.0

    solos = _split(duration * (1.0 - overlap_ratio - cfg.silence_ratio), n_turns, rng, floor=_MIN_SOLO_WEIGHT)
    overlaps = np.zeros(n_transitions)
    overlaps[overlapping] = _split(duration * overlap_ratio, int(overlapping.sum()), rng)
    # Silence slots: lead-in, every non-overlapping transition, tail.
    gap_slots = np.concatenate([[True], ~overlapping, [True]])
    gaps = np.zeros(n_turns + 1)
    gaps[gap_slots] = _split(duration * cfg.silence_ratio, int(gap_slots.sum()), rng)

    turns = []
    t = gaps[0]
    start = t
    for k in range(n_turns):
        t += solos[k]
        if k == n_turns - 1:
            end = next_start = t
        elif overlapping[k]:
            next_start = t
            t += overlaps[k]
            end = t
        else:
            end = t
            t += gaps[k + 1]
            next_start = t
        turns.append((speakers[k], _snap(start, duration), _snap(end, duration)))
        start = next_start
    return [(spk, a, b) for spk, a, b in turns if b > a]


def _speaker_noise(index: int, n_speakers: int, n_samples: int, sample_rate: int,
                   rng: np.random.Generator) -> np.ndarray:
    nyquist = sample_rate / 2.0
    centers = np.geomspace(0.08 * nyquist, 0.6 * nyquist, max(n_speakers, 2))
    center = centers[index] * rng.uniform(0.95, 1.05)
    low, high = 0.7 * center, min(1.4 * center, 0.95 * nyquist)
    sos = signal.butter(4, [low, high], btype="bandpass", fs=sample_rate, output="sos")
    noise = signal.sosfilt(sos, rng.standard_normal(n_samples))
    return noise / (np.std(noise) + 1e-12)


def _envelope(segments: List[Tuple[float, float]], n_samples: int, sample_rate: int) -> np.ndarray:
    env = np.zeros(n_samples)
    fade = max(1, int(_FADE * sample_rate))
    for start, end in segments:
        a, b = int(round(start * sample_rate)), min(int(round(end * sample_rate)), n_samples)
        if b <= a:
            continue
        ramp = np.ones(b - a)
        k = min(fade, (b - a) // 2)
        if k > 0:
            ramp[:k] = np.linspace(1.0 / k, 1.0, k)
            ramp[-k:] = np.linspace(1.0, 1.0 / k, k)
        env[a:b] = ramp
    return env


def simulate_conversation(cfg: SimConfig) -> Tuple[np.ndarray, SegmentList]:
    """Return int16 PCM at ``cfg.sample_rate`` and the reference segments (speakers spk0, spk1, ...)."""
    rng = np.random.default_rng(cfg.seed)
    overlap_ratio = cfg.overlap_ratio
    if cfg.n_speakers == 1 and overlap_ratio > 0:
        logger.warning("a single speaker cannot overlap; ignoring overlap_ratio={}", overlap_ratio)
        overlap_ratio = 0.0

    turns = _layout(cfg, overlap_ratio, rng)
    reference = SegmentList([Segment(f"spk{s}", a, b) for s, a, b in turns]).normalized()

    n_samples = int(round(cfg.duration * cfg.sample_rate))
    mix = np.zeros(n_samples)
    by_speaker = reference.by_speaker()
    for index in range(cfg.n_speakers):
        noise = _speaker_noise(index, cfg.n_speakers, n_samples, cfg.sample_rate, rng)
        spans = [(s.start, s.end) for s in by_speaker.get(f"spk{index}", [])]
        mix += _LEVEL * noise * _envelope(spans, n_samples, cfg.sample_rate)

    pcm = np.clip(np.round(mix * 32767.0), -32768, 32767).astype(np.int16)
    logger.debug(
        "simulated {} s, {} speakers, {} segments, {:.1f} s of speech",
        cfg.duration, cfg.n_speakers, len(reference), reference.total_speech,
    )
    return pcm, reference


def measure_ratios(reference: SegmentList, duration: float, resolution: float = 0.01) -> Tuple[float, float]:
    """(overlap fraction, silence fraction) of a reference on a ``resolution`` grid."""
    n = int(round(duration / resolution))
    counts = np.zeros(n, dtype=np.int32)
    for seg in reference.normalized():
        a, b = int(round(seg.start / resolution)), int(round(seg.end / resolution))
        counts[a:min(b, n)] += 1
    return float(np.mean(counts >= 2)), float(np.mean(counts == 0))
