"""Mono 16-bit PCM WAV files through soundfile."""
from pathlib import Path
from typing import Union

import numpy as np
import soundfile as sf

from ..errors import AudioFormatError


def read_wav(path: Union[str, Path], sample_rate: int) -> np.ndarray:
    """Return the samples as int16; anything but mono PCM16 at ``sample_rate`` is rejected."""
    try:
        info = sf.info(str(path))
    except RuntimeError as exc:
        raise AudioFormatError(f"{path}: {exc}") from exc
    if info.channels != 1:
        raise AudioFormatError(f"{path}: expected mono audio, got {info.channels} channels")
    if info.subtype != "PCM_16":
        raise AudioFormatError(f"{path}: expected 16-bit PCM, got {info.subtype}")
    if info.samplerate != sample_rate:
        raise AudioFormatError(f"{path}: expected {sample_rate} Hz, got {info.samplerate} Hz")
    samples, _ = sf.read(str(path), dtype="int16", always_2d=False)
    return samples


def write_wav(path: Union[str, Path], samples: np.ndarray, sample_rate: int) -> None:
    samples = np.asarray(samples)
    if samples.dtype != np.int16:
        raise AudioFormatError(f"expected int16 samples, got {samples.dtype}")
    sf.write(str(path), samples, sample_rate, subtype="PCM_16")
