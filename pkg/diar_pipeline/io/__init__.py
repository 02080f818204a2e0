"""File formats: RTTM, weight bundles, WAV, and the conversation simulator."""
from .audio import read_wav, write_wav
from .rttm import RttmRecord, parse_rttm, records_to_segments, segments_to_records, write_rttm
from .simulate import measure_ratios, simulate_conversation
from .weights import WeightBundle, load_weights, random_weights, save_weights

__all__ = [
    "read_wav",
    "write_wav",
    "RttmRecord",
    "parse_rttm",
    "records_to_segments",
    "segments_to_records",
    "write_rttm",
    "measure_ratios",
    "simulate_conversation",
    "WeightBundle",
    "load_weights",
    "random_weights",
    "save_weights",
]
