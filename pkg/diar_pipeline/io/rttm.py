"""RTTM reading and writing (SPEAKER lines only)."""
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, List

from ..errors import RttmParseError
from ..segments import Segment, SegmentList

_FIELDS = 10
_NA = "<NA>"


@dataclass(frozen=True)
class RttmRecord:
    file_id: str
    onset: float
    duration: float
    speaker: str

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        if self.onset < 0:
            raise ValueError(f"onset must be non-negative, got {self.onset}")

    @property
    def end(self) -> float:
        return self.onset + self.duration


def _parse_time(token: str, what: str, line_number: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise RttmParseError(line_number, f"{what} '{token}' is not a number") from None
    if value != value or value in (float("inf"), float("-inf")):
        raise RttmParseError(line_number, f"{what} '{token}' is not finite")
    return value


def parse_rttm(text: str) -> List[RttmRecord]:
    """Parse SPEAKER lines; blank lines and ``#``/``;;`` comments are skipped."""
    records = []
    for line_number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#") or stripped.startswith(";;"):
            continue
        fields = stripped.split()
        if len(fields) != _FIELDS:
            raise RttmParseError(line_number, f"expected {_FIELDS} fields, got {len(fields)}")
        if fields[0] != "SPEAKER":
            raise RttmParseError(line_number, f"unsupported record type '{fields[0]}'")
        onset = _parse_time(fields[3], "onset", line_number)
        duration = _parse_time(fields[4], "duration", line_number)
        try:
            records.append(RttmRecord(fields[1], onset, duration, fields[7]))
        except ValueError as exc:
            raise RttmParseError(line_number, str(exc)) from None
    return records


def _fmt(seconds: float) -> str:
    """Three decimals, half away from zero."""
    return str(Decimal(repr(seconds)).quantize(Decimal("0.001"), rounding=ROUND_HALF_UP))


def write_rttm(records: Iterable[RttmRecord]) -> str:
    ordered = sorted(records, key=lambda r: (r.onset, r.speaker))
    lines = [
        f"SPEAKER {r.file_id} 1 {_fmt(r.onset)} {_fmt(r.duration)} {_NA} {_NA} {r.speaker} {_NA} {_NA}"
        for r in ordered
    ]
    return "".join(line + "\n" for line in lines)


def records_to_segments(records: Iterable[RttmRecord]) -> SegmentList:
    return SegmentList([Segment(r.speaker, r.onset, r.end) for r in records])


def segments_to_records(segments: SegmentList, file_id: str) -> List[RttmRecord]:
    return [RttmRecord(file_id, s.start, s.end - s.start, s.speaker) for s in segments]
