"""Speaker-labelled time segments shared by the stream, RTTM I/O and scoring."""
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Sequence

import numpy as np


class Segment(NamedTuple):
    speaker: str
    start: float
    end: float

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass
class SegmentList:
    """Unordered (speaker, start, end) segments; different speakers may overlap."""

    segments: List[Segment] = field(default_factory=list)

    def __post_init__(self):
        self.segments = [Segment(str(s), float(a), float(b)) for s, a, b in self.segments]
        for seg in self.segments:
            if not seg.end > seg.start:
                raise ValueError(f"segment must have end > start: {seg}")

    def __len__(self) -> int:
        return len(self.segments)

    def __iter__(self):
        return iter(self.segments)

    @property
    def speakers(self) -> List[str]:
        return sorted({s.speaker for s in self.segments})

    def by_speaker(self) -> Dict[str, List[Segment]]:
        out: Dict[str, List[Segment]] = {}
        for seg in self.segments:
            out.setdefault(seg.speaker, []).append(seg)
        return out

    def normalized(self) -> "SegmentList":
        """Merge overlapping or touching segments of the same speaker."""
        merged: List[Segment] = []
        for speaker, segs in sorted(self.by_speaker().items()):
            segs = sorted(segs, key=lambda s: (s.start, s.end))
            cur_start, cur_end = segs[0].start, segs[0].end
            for seg in segs[1:]:
                if seg.start <= cur_end:
                    cur_end = max(cur_end, seg.end)
                else:
                    merged.append(Segment(speaker, cur_start, cur_end))
                    cur_start, cur_end = seg.start, seg.end
            merged.append(Segment(speaker, cur_start, cur_end))
        return SegmentList(merged)

    @property
    def total_speech(self) -> float:
        """Sum of per-speaker speech (overlap counted once per speaker)."""
        return float(sum(s.duration for s in self.normalized()))

    def renamed(self, mapping: Dict[str, str]) -> "SegmentList":
        return SegmentList([Segment(mapping.get(s.speaker, s.speaker), s.start, s.end) for s in self.segments])


def activity_to_segments(
    activity: np.ndarray,
    frame_period: float,
    labels: Sequence[str],
    start_time: float = 0.0,
) -> SegmentList:
    """Merge runs of active frames (S x T binary matrix) into segments."""
    segments: List[Segment] = []
    for row, label in zip(np.asarray(activity, dtype=bool), labels):
        padded = np.concatenate([[False], row, [False]])
        edges = np.flatnonzero(np.diff(padded.astype(np.int8)))
        for on, off in zip(edges[::2], edges[1::2]):
            segments.append(Segment(label, start_time + on * frame_period, start_time + off * frame_period))
    return SegmentList(segments)


def segments_to_activity(
    segments: Iterable[Segment],
    speakers: Sequence[str],
    n_frames: int,
    frame_period: float,
) -> np.ndarray:
    """Rasterize segments on the frame grid; frame t is active if its centre is covered."""
    index = {s: i for i, s in enumerate(speakers)}
    out = np.zeros((len(speakers), n_frames), dtype=np.uint8)
    centers = (np.arange(n_frames) + 0.5) * frame_period
    for seg in segments:
        if seg.speaker in index:
            out[index[seg.speaker], (centers >= seg.start) & (centers < seg.end)] = 1
    return out
