"""
Portable weight bundle.

Layout (all integers u32 little-endian)::

    b"OEENC1" | version | header length | header JSON
    per tensor: name length | name | rank | dims... | float32 LE payload
    CRC32 of every preceding byte

The header echoes the :class:`ModelConfig` the weights were built for.
"""
import io
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Dict, Optional, Union

import numpy as np
import torch
from loguru import logger
from pydantic import BaseModel, ValidationError

from config.pipeline import ModelConfig
from ..errors import (
    BundleFormatError,
    ChecksumError,
    ConfigurationError,
    IncompleteBundleError,
)
from ..model.network import OnlineDiarizationNetwork, tensor_shapes

MAGIC = b"OEENC1"
FORMAT_VERSION = 1

_U32 = struct.Struct("<I")
_PREAMBLE = len(MAGIC) + 2 * _U32.size

PathOrFile = Union[str, Path, BinaryIO]


class BundleHeader(BaseModel):
    format_version: int = FORMAT_VERSION
    model: ModelConfig
    n_tensors: int


@dataclass(frozen=True)
class WeightBundle:
    """Immutable named float32 tensors plus the model configuration they fit."""

    config: ModelConfig
    tensors: Dict[str, np.ndarray]
    version: int = FORMAT_VERSION

    def __post_init__(self):
        for name, array in self.tensors.items():
            array.setflags(write=False)
            if array.dtype != np.float32:
                raise BundleFormatError(f"tensor '{name}' is {array.dtype}, expected float32")

    def validate(self) -> None:
        """Check the tensor set against the architecture in ``config``."""
        expected = tensor_shapes(self.config)
        for name, shape in expected.items():
            if name not in self.tensors:
                raise IncompleteBundleError(name)
            if tuple(self.tensors[name].shape) != shape:
                raise BundleFormatError(
                    f"tensor '{name}' has shape {self.tensors[name].shape}, expected {shape}"
                )
        extra = set(self.tensors) - set(expected)
        if extra:
            raise BundleFormatError(f"unexpected tensors in bundle: {sorted(extra)}")

    def to_network(self, cfg: Optional[ModelConfig] = None) -> OnlineDiarizationNetwork:
        """
        Instantiate the network. ``cfg`` may change inference-only fields
        (threshold, S_max, decoder switches) but not the architecture.
        """
        cfg = cfg or self.config
        if cfg.architecture() != self.config.architecture():
            raise ConfigurationError(
                f"weights were built for {self.config.architecture()}, "
                f"configuration asks for {cfg.architecture()}"
            )
        self.validate()
        net = OnlineDiarizationNetwork(cfg)
        net.load_state_dict({name: torch.from_numpy(array.copy()) for name, array in self.tensors.items()})
        return net


def random_weights(cfg: ModelConfig, seed: int = 0) -> WeightBundle:
    """Uniform in [-1/sqrt(D), 1/sqrt(D)], drawn in canonical tensor order."""
    rng = np.random.default_rng(seed)
    bound = 1.0 / np.sqrt(cfg.d_model)
    tensors = {
        name: rng.uniform(-bound, bound, size=shape).astype(np.float32)
        for name, shape in tensor_shapes(cfg).items()
    }
    return WeightBundle(config=cfg, tensors=tensors)


def to_bytes(bundle: WeightBundle) -> bytes:
    header = BundleHeader(
        format_version=bundle.version,
        model=bundle.config,
        n_tensors=len(bundle.tensors),
    ).model_dump_json().encode("utf-8")

    out = io.BytesIO()
    out.write(MAGIC)
    out.write(_U32.pack(bundle.version))
    out.write(_U32.pack(len(header)))
    out.write(header)
    for name, array in bundle.tensors.items():
        encoded = name.encode("utf-8")
        out.write(_U32.pack(len(encoded)))
        out.write(encoded)
        out.write(_U32.pack(array.ndim))
        for dim in array.shape:
            out.write(_U32.pack(dim))
        out.write(np.ascontiguousarray(array, dtype="<f4").tobytes())
    body = out.getvalue()
    return body + _U32.pack(zlib.crc32(body))


class _Reader:
    def __init__(self, data: bytes, offset: int):
        self.data = data
        self.offset = offset

    def take(self, n: int) -> bytes:
        end = self.offset + n
        if end > len(self.data):
            raise BundleFormatError("bundle ends in the middle of a record")
        chunk = self.data[self.offset:end]
        self.offset = end
        return chunk

    def u32(self) -> int:
        return _U32.unpack(self.take(_U32.size))[0]


def from_bytes(data: bytes) -> WeightBundle:
    """Checks magic, then version, then CRC32, then parses and validates."""
    if not data.startswith(MAGIC) and not (len(data) < len(MAGIC) and MAGIC.startswith(data)):
        raise BundleFormatError("not a weight bundle (bad magic)")
    if len(data) < _PREAMBLE + _U32.size:
        raise ChecksumError("bundle is truncated")

    version = _U32.unpack_from(data, len(MAGIC))[0]
    if version != FORMAT_VERSION:
        raise BundleFormatError(f"unsupported bundle version {version}")

    body, stored = data[:-_U32.size], _U32.unpack(data[-_U32.size:])[0]
    if zlib.crc32(body) != stored:
        raise ChecksumError("bundle checksum mismatch (corrupted or truncated)")

    reader = _Reader(body, len(MAGIC) + _U32.size)
    header_bytes = reader.take(reader.u32())
    try:
        header = BundleHeader.model_validate_json(header_bytes)
    except ValidationError as exc:
        raise BundleFormatError(f"invalid bundle header: {exc}") from exc

    tensors: Dict[str, np.ndarray] = {}
    for _ in range(header.n_tensors):
        name = reader.take(reader.u32()).decode("utf-8")
        if name in tensors:
            raise BundleFormatError(f"duplicate tensor '{name}'")
        shape = tuple(reader.u32() for _ in range(reader.u32()))
        count = int(np.prod(shape, dtype=np.int64))
        payload = reader.take(4 * count)
        tensors[name] = np.frombuffer(payload, dtype="<f4").astype(np.float32).reshape(shape)
    if reader.offset != len(body):
        raise BundleFormatError(f"{len(body) - reader.offset} trailing bytes after the last tensor")

    bundle = WeightBundle(config=header.model, tensors=tensors, version=version)
    bundle.validate()
    return bundle


def save_weights(bundle: WeightBundle, sink: PathOrFile) -> None:
    data = to_bytes(bundle)
    if isinstance(sink, (str, Path)):
        Path(sink).write_bytes(data)
    else:
        sink.write(data)
    logger.debug("saved weight bundle: {} tensors, {} bytes", len(bundle.tensors), len(data))


def load_weights(source: PathOrFile) -> WeightBundle:
    if isinstance(source, (str, Path)):
        data = Path(source).read_bytes()
    else:
        data = source.read()
    bundle = from_bytes(data)
    logger.debug("loaded weight bundle: {} tensors", len(bundle.tensors))
    return bundle
