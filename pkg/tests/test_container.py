"""
Tests for message flattening and the container file format
"""
import tempfile
from pathlib import Path

import numpy as np
import pytest

from src.ans_core import CodecParams, Message
from src.cli import CliConfig, Command, compress_bytes, decompress_container
from src.container import (
    BadMagicError,
    CompressedContainer,
    ContainerError,
    CorruptPayloadError,
    ModelDescriptor,
    ModelKind,
    TruncatedContainerError,
    UnsupportedVersionError,
    flatten,
    pack,
    read_container,
    unflatten,
    unpack,
    write_container,
)
from src.models import AdaptiveOrder0Model, QuantizedDistribution, StaticModel, UniformModel
from src.stream_codec import decode, encode, verify_bound

SMALL = CodecParams(16, 8, 3)
DEFAULT = CodecParams(64, 32, 16)
FIXTURES = Path(__file__).parent / "fixtures"
EXAMPLE = QuantizedDistribution((1, 2, 3, 2), 3)


def _example_container():
    data = [2, 0, 3, 1, 2, 2, 1, 0, 3] * 20
    model = StaticModel(EXAMPLE)
    m, _ = encode(data, model, SMALL)
    return CompressedContainer(SMALL, ModelDescriptor.from_model(model), len(data), m), data


def test_flatten_examples():
    assert flatten(Message(2 ** 32, []), DEFAULT) == bytes.fromhex("0000000100000000")
    assert flatten(Message(684, []), SMALL) == bytes.fromhex("02ac")


def test_flatten_tail_top_first():
    m = Message(300, [0x11, 0x22, 0x33])
    assert flatten(m, SMALL) == bytes.fromhex("012c332211")
    wide = Message(2 ** 40, [1, 2])
    assert flatten(wide, DEFAULT) == bytes.fromhex("0000010000000000" "00000002" "00000001")


def test_flatten_length_matches_message_length():
    rng = np.random.default_rng(4)
    for _ in range(50):
        tail = [int(w) for w in rng.integers(0, 1 << 32, size=int(rng.integers(0, 10)), dtype=np.uint64)]
        m = Message(int(rng.integers(1 << 32, 1 << 63, dtype=np.uint64)), tail)
        flat = flatten(m, DEFAULT)
        assert len(flat) * 8 == 64 + 32 * len(tail)
        assert unflatten(flat, DEFAULT) == m


def test_unflatten_examples():
    assert unflatten(bytes.fromhex("02ac"), SMALL) == Message(684, [])
    with pytest.raises(CorruptPayloadError):
        unflatten(bytes(8), DEFAULT)
    with pytest.raises(CorruptPayloadError):
        unflatten(bytes.fromhex("0000000100000000" "0000"), DEFAULT)
    with pytest.raises(CorruptPayloadError):
        unflatten(bytes.fromhex("000001"), DEFAULT)
    m = unflatten(bytes.fromhex("0000000100000000" "deadbeef"), DEFAULT)
    assert m == Message(2 ** 32, [0xDEADBEEF])


def test_unaligned_params_rejected():
    params = CodecParams(12, 8, 3)
    with pytest.raises(ContainerError):
        flatten(Message(300, []), params)
    with pytest.raises(ContainerError):
        unflatten(bytes(2), params)


def test_odd_word_width():
    # 3-byte words take the int.to_bytes path
    params = CodecParams(48, 24, 16)
    m = Message((1 << 40) + 5, [0xABCDEF, 7])
    flat = flatten(m, params)
    assert flat[6:] == bytes.fromhex("000007abcdef")
    assert unflatten(flat, params) == m


def test_descriptor_bytes():
    descriptor = ModelDescriptor.from_model(StaticModel(EXAMPLE))
    assert descriptor.kind == ModelKind.STATIC
    assert descriptor.to_bytes() == bytes.fromhex("01" "0004" "00000001" "00000002" "00000003" "00000002")
    adaptive = ModelDescriptor.from_model(AdaptiveOrder0Model(256, 16))
    assert adaptive.to_bytes() == bytes.fromhex("020100")
    with pytest.raises(ContainerError):
        ModelDescriptor.from_model(UniformModel(4, 3))


def test_descriptor_build_model():
    model = ModelDescriptor(ModelKind.STATIC, 4, (1, 2, 3, 2)).build_model(3, use_lookup_table=True)
    assert model.distribution() == EXAMPLE
    assert isinstance(ModelDescriptor(ModelKind.ADAPTIVE_ORDER0, 7).build_model(12), AdaptiveOrder0Model)
    with pytest.raises(ContainerError):
        ModelDescriptor(ModelKind.STATIC, 2, (1, 2)).build_model(3)
    with pytest.raises(ContainerError):
        ModelDescriptor(ModelKind.ADAPTIVE_ORDER0, 0).build_model(16)
    with pytest.raises(ContainerError):
        ModelDescriptor(ModelKind.ADAPTIVE_ORDER0, 300).build_model(8)


def test_pack_unpack():
    container, data = _example_container()
    packed = pack(container)
    assert packed[:4] == b"rANS"
    assert packed[4:8] == bytes([1, 16, 8, 3])
    restored = unpack(packed)
    assert restored == container
    model = restored.descriptor.build_model(restored.params.r)
    assert decode(restored.message, restored.n_symbols, model, restored.params, strict=True) == data


def test_write_read_container():
    container, _ = _example_container()
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "example.rans"
        written = write_container(path, container)
        assert written == path.stat().st_size
        assert read_container(path) == container


def test_unpack_errors():
    container, _ = _example_container()
    packed = pack(container)
    with pytest.raises(BadMagicError):
        unpack(b"rANX" + packed[4:])
    with pytest.raises(UnsupportedVersionError):
        unpack(packed[:4] + bytes([2]) + packed[5:])
    with pytest.raises(ContainerError):
        unpack(packed[:5] + bytes([16, 16, 3]) + packed[8:])
    with pytest.raises(ContainerError):
        unpack(packed[:8] + bytes([9]) + packed[9:])
    for cut in (3, 10, 12, 20, 25):
        with pytest.raises(TruncatedContainerError):
            unpack(packed[:cut])
    assert isinstance(TruncatedContainerError("x"), ContainerError)


def test_golden_fixture_decodes():
    plaintext = (FIXTURES / "golden_1k.bin").read_bytes()
    assert plaintext == bytes(range(256)) * 4
    container = read_container(FIXTURES / "golden_1k.rans")
    assert container.params == DEFAULT
    assert container.n_symbols == 1024
    assert container.descriptor.weights == (256,) * 256
    cli = CliConfig(command=Command.DECOMPRESS, strict=True)
    assert decompress_container(container, cli) == plaintext


def test_golden_fixture_is_reproduced():
    plaintext = (FIXTURES / "golden_1k.bin").read_bytes()
    container, report = compress_bytes(plaintext, CliConfig(command=Command.COMPRESS))
    assert pack(container) == (FIXTURES / "golden_1k.rans").read_bytes()
    assert report.shannon_bits == 8 * 1024


def test_skewed_golden_fixture_decodes():
    plaintext = (FIXTURES / "golden_skewed_1k.bin").read_bytes()
    container = read_container(FIXTURES / "golden_skewed_1k.rans")
    assert container.params == DEFAULT
    assert container.n_symbols == len(plaintext) == 1024
    weights = container.descriptor.weights
    assert weights[:4] == (4479, 2303, 1791, 1215)
    assert weights[255] == 128
    # 14 byte values never occur and keep the minimum weight
    assert sum(w == 1 for w in weights) == 14
    assert container.message.head == 5168749131984
    assert len(container.message.tail) == 235
    cli = CliConfig(command=Command.DECOMPRESS, strict=True)
    assert decompress_container(container, cli) == plaintext


def test_skewed_golden_fixture_is_reproduced():
    plaintext = (FIXTURES / "golden_skewed_1k.bin").read_bytes()
    container, report = compress_bytes(plaintext, CliConfig(command=Command.COMPRESS))
    assert pack(container) == (FIXTURES / "golden_skewed_1k.rans").read_bytes()
    assert verify_bound(report).passed
    assert report.actual_bits == 64 + 32 * 235
