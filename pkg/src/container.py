"""
Container - Bit-exact file format for compressed messages
Binds the codec precisions, the model descriptor, the symbol count and the
flattened message. All multi-byte integers are big-endian.

Layout:
    magic        4 bytes  b"rANS"
    version      1 byte   1
    r_s, r_t, r  1 byte each
    model tag    1 byte   1 = static, 2 = adaptive-order0
    alphabet     2 bytes
    weights      4 bytes each, static models only
    n_symbols    8 bytes
    payload      head (r_s / 8 bytes) then tail words top first (r_t / 8 bytes each)
"""
import logging
import struct
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np

from .ans_core import CodecParams, InvalidParamsError, Message
from .models import AdaptiveOrder0Model, ModelError, QuantizedDistribution, StaticModel, SymbolModel


logger = logging.getLogger(__name__)

MAGIC = b"rANS"
FORMAT_VERSION = 1

_PREAMBLE = struct.Struct(">4sBBBB")    # magic, version, r_s, r_t, r
_DESCRIPTOR = struct.Struct(">BH")      # model tag, alphabet size
_WEIGHT = struct.Struct(">I")
_COUNT = struct.Struct(">Q")

# numpy dtypes for word widths it can handle natively
_WORD_DTYPES = {1: ">u1", 2: ">u2", 4: ">u4", 8: ">u8"}


class ContainerError(ValueError):
    """Container bytes or fields are invalid"""


class BadMagicError(ContainerError):
    """File does not start with the container magic"""


class UnsupportedVersionError(ContainerError):
    """Container version is not one this reader understands"""


class TruncatedContainerError(ContainerError):
    """Container ends before a complete field"""


class CorruptPayloadError(ContainerError):
    """Payload does not decode to a valid message"""


class ModelKind(IntEnum):
    """Model tag byte"""
    STATIC = 1
    ADAPTIVE_ORDER0 = 2


@dataclass(frozen=True)
class ModelDescriptor:
    """
    Serializable description of a SymbolModel

    weights is set for static models only.
    """
    kind: ModelKind
    alphabet_size: int
    weights: Optional[Tuple[int, ...]] = None

    @classmethod
    def from_model(cls, model: SymbolModel) -> "ModelDescriptor":
        if isinstance(model, StaticModel):
            return cls(ModelKind.STATIC, model.alphabet_size, model.dist.weights)
        if isinstance(model, AdaptiveOrder0Model):
            return cls(ModelKind.ADAPTIVE_ORDER0, model.alphabet_size)
        raise ContainerError(f"{type(model).__name__} has no container descriptor")

    def build_model(self, r: int, use_lookup_table: bool = False) -> SymbolModel:
        """
        Recreate the model this descriptor describes

        Args:
            r: Probability precision from the container header
            use_lookup_table: Give static models a direct lookup table

        Returns:
            A fresh SymbolModel
        """
        try:
            if self.kind == ModelKind.STATIC:
                dist = QuantizedDistribution.from_weights(self.weights or (), r)
                if use_lookup_table:
                    dist = dist.with_lookup_table()
                return StaticModel(dist)
            return AdaptiveOrder0Model(self.alphabet_size, r)
        except ModelError as e:
            raise ContainerError(f"model descriptor is invalid: {e}") from e

    def to_bytes(self) -> bytes:
        out = bytearray(_DESCRIPTOR.pack(int(self.kind), self.alphabet_size))
        if self.kind == ModelKind.STATIC:
            for weight in self.weights:
                out += _WEIGHT.pack(weight)
        return bytes(out)


@dataclass(frozen=True)
class CompressedContainer:
    """A compressed stream with everything needed to decode it"""
    params: CodecParams
    descriptor: ModelDescriptor
    n_symbols: int
    message: Message
    version: int = FORMAT_VERSION


def _check_aligned(params: CodecParams) -> None:
    if not params.byte_aligned:
        raise ContainerError(
            f"r_s={params.r_s} and r_t={params.r_t} must both be multiples of 8"
        )


def flatten(m: Message, params: CodecParams) -> bytes:
    """
    Serialize a message: head, then tail words from top of stack to bottom

    Args:
        m: Message to serialize
        params: Codec precisions (r_s and r_t byte aligned)

    Returns:
        length(m) / 8 bytes
    """
    _check_aligned(params)
    word_bytes = params.r_t // 8
    head = m.head.to_bytes(params.r_s // 8, "big")
    dtype = _WORD_DTYPES.get(word_bytes)
    if dtype is not None:
        words = np.asarray(m.tail[::-1], dtype=np.uint64).astype(dtype).tobytes()
    else:
        words = b"".join(word.to_bytes(word_bytes, "big") for word in reversed(m.tail))
    return head + words


def unflatten(data: bytes, params: CodecParams) -> Message:
    """
    Rebuild a message from flatten's output

    Raises:
        CorruptPayloadError: length is not a head plus whole tail words, or
            the head is outside [2^(r_s - r_t), 2^r_s)
    """
    _check_aligned(params)
    head_bytes = params.r_s // 8
    word_bytes = params.r_t // 8
    if len(data) < head_bytes or (len(data) - head_bytes) % word_bytes:
        raise CorruptPayloadError(
            f"payload of {len(data)} bytes is not {head_bytes} + k * {word_bytes} bytes"
        )
    head = int.from_bytes(data[:head_bytes], "big")
    if not params.head_lower <= head < params.head_upper:
        raise CorruptPayloadError(
            f"head {head} outside [2^{params.r_s - params.r_t}, 2^{params.r_s})"
        )
    body = data[head_bytes:]
    dtype = _WORD_DTYPES.get(word_bytes)
    if dtype is not None:
        words = np.frombuffer(body, dtype=dtype).tolist()
    else:
        words = [
            int.from_bytes(body[i:i + word_bytes], "big")
            for i in range(0, len(body), word_bytes)
        ]
    words.reverse()
    return Message(head, words)


def pack(container: CompressedContainer) -> bytes:
    """Serialize a container to bytes"""
    params = container.params
    out = bytearray(_PREAMBLE.pack(MAGIC, container.version, params.r_s, params.r_t, params.r))
    out += container.descriptor.to_bytes()
    out += _COUNT.pack(container.n_symbols)
    out += flatten(container.message, params)
    return bytes(out)


def _take(data: bytes, offset: int, size: int, what: str) -> bytes:
    if offset + size > len(data):
        raise TruncatedContainerError(f"container ends inside the {what}")
    return data[offset:offset + size]


def unpack(data: bytes) -> CompressedContainer:
    """
    Parse container bytes

    Args:
        data: Complete container

    Returns:
        CompressedContainer

    Raises:
        ContainerError: bad magic, version, params, descriptor or payload
    """
    magic, version, r_s, r_t, r = _PREAMBLE.unpack(_take(data, 0, _PREAMBLE.size, "header"))
    if magic != MAGIC:
        raise BadMagicError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(f"unsupported container version {version}")
    try:
        params = CodecParams(r_s, r_t, r)
    except InvalidParamsError as e:
        raise ContainerError(f"header params are invalid: {e}") from e
    _check_aligned(params)
    offset = _PREAMBLE.size

    tag, alphabet_size = _DESCRIPTOR.unpack(_take(data, offset, _DESCRIPTOR.size, "model descriptor"))
    offset += _DESCRIPTOR.size
    try:
        kind = ModelKind(tag)
    except ValueError:
        raise ContainerError(f"unknown model tag {tag}") from None
    weights = None
    if kind == ModelKind.STATIC:
        raw = _take(data, offset, alphabet_size * _WEIGHT.size, "static weights")
        weights = tuple(np.frombuffer(raw, dtype=">u4").tolist())
        offset += len(raw)
    descriptor = ModelDescriptor(kind, alphabet_size, weights)

    (n_symbols,) = _COUNT.unpack(_take(data, offset, _COUNT.size, "symbol count"))
    offset += _COUNT.size
    payload = data[offset:]
    if len(payload) < r_s // 8:
        raise TruncatedContainerError("container ends inside the message head")
    message = unflatten(payload, params)
    return CompressedContainer(params, descriptor, n_symbols, message, version)


def write_container(path: Union[str, Path], container: CompressedContainer) -> int:
    """
    Write a container to a file

    Returns:
        Number of bytes written
    """
    data = pack(container)
    Path(path).write_bytes(data)
    logger.debug(f"Wrote {len(data)} byte container to {path}")
    return len(data)


def read_container(path: Union[str, Path]) -> CompressedContainer:
    """Read and parse a container file"""
    data = Path(path).read_bytes()
    logger.debug(f"Read {len(data)} byte container from {path}")
    return unpack(data)
