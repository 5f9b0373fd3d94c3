"""
Tests for whole-sequence encoding, decoding and the rate bound
"""
import math
from dataclasses import replace

import numpy as np
import pytest

from src.ans_core import CodecParams, Message, PreconditionError, TailUnderflowError, init_message
from src.models import (
    AdaptiveOrder0Model,
    QuantizedDistribution,
    StaticModel,
    UniformModel,
    adaptive_order0_sequence,
    quantize_counts,
    shannon_info,
)
from src.stream_codec import EndStateMismatchError, decode, encode, verify_bound

SMALL = CodecParams(16, 8, 3)
DEFAULT = CodecParams(64, 32, 16)
EXAMPLE = QuantizedDistribution((1, 2, 3, 2), 3)
EXAMPLE_16 = QuantizedDistribution((8192, 16384, 24576, 16384), 16)
A, B, C, D = range(4)


def _random_model(rng, params, kind):
    size = int(rng.integers(2, min(256, 1 << params.r) + 1))
    if kind == "adaptive":
        return AdaptiveOrder0Model(size, params.r), size
    if kind == "uniform":
        size = 1 << int(rng.integers(1, min(8, params.r) + 1))
        return UniformModel(size, params.r), size
    counts = rng.integers(0, 100, size=size)
    counts[0] += 1
    return StaticModel(quantize_counts(counts.tolist(), params.r)), size


def test_empty_sequence():
    m, report = encode([], StaticModel(EXAMPLE_16), DEFAULT)
    assert m == init_message(DEFAULT)
    assert report.actual_bits == 64
    assert report.shannon_bits == 0.0
    check = verify_bound(report)
    assert check.passed
    assert check.flat_margin == 0.0
    assert check.effective_margin == 0.0
    assert decode(m, 0, StaticModel(EXAMPLE_16), DEFAULT, strict=True) == []


def test_single_symbol_small_params():
    m, report = encode([A], StaticModel(EXAMPLE), SMALL)
    assert m == Message(2048, [])
    assert report.actual_bits == 16
    assert report.shannon_bits == 3.0
    assert decode(Message(2048, []), 1, StaticModel(EXAMPLE), SMALL, strict=True) == [A]


def test_decode_leaves_message_untouched():
    data = [C, A, D, B, C, C, A]
    m, _ = encode(data, StaticModel(EXAMPLE), SMALL)
    before = m.copy()
    assert decode(m, len(data), StaticModel(EXAMPLE), SMALL) == data
    assert m == before


def test_random_round_trips_with_invariants():
    rng = np.random.default_rng(2019)
    for params in (SMALL, DEFAULT):
        for trial in range(60):
            kind = ("static", "adaptive", "uniform")[trial % 3]
            model, size = _random_model(rng, params, kind)
            data = rng.integers(0, size, size=int(rng.integers(0, 300))).tolist()
            m, report = encode(data, model, params, check_invariants=True)
            assert decode(m, len(data), model, params, strict=True, check_invariants=True) == data
            assert verify_bound(report).passed
            assert report.actual_bits <= report.bound_bits + 1e-6


def test_iid_overhead_at_default_params():
    rng = np.random.default_rng(42)
    data = rng.choice(4, size=100_000, p=[1 / 8, 2 / 8, 3 / 8, 2 / 8]).tolist()
    m, report = encode(data, StaticModel(EXAMPLE_16), DEFAULT, check_invariants=True)
    assert report.overhead_bits < 67
    assert report.actual_bits <= report.bound_bits
    assert report.effective_bits <= report.effective_bound_bits
    assert decode(m, len(data), StaticModel(EXAMPLE_16), DEFAULT, strict=True) == data


def test_adaptive_information_matches_schedule():
    rng = np.random.default_rng(8)
    data = rng.integers(0, 6, size=400).tolist()
    _, report = encode(data, AdaptiveOrder0Model(6, 12), CodecParams(32, 16, 12))
    expected = shannon_info(adaptive_order0_sequence(data, 6, 12), data)
    assert report.shannon_bits == pytest.approx(expected, abs=1e-9)


def test_rate_report_fields():
    data = [C, C]
    _, report = encode(data, StaticModel(EXAMPLE), SMALL)
    assert report.n_symbols == 2
    assert report.shannon_bits == pytest.approx(2 * math.log2(8 / 3))
    assert report.bound_bits == pytest.approx(report.shannon_bits + 2 * SMALL.epsilon + 16)
    assert report.as_dict()["r_s"] == 16


def test_verify_bound_rejects_inflated_report():
    _, report = encode([A, B, C, D] * 10, StaticModel(EXAMPLE), SMALL)
    assert verify_bound(report).passed
    check = verify_bound(replace(report, actual_bits=report.actual_bits + 1000))
    assert not check.passed
    assert check.flat_margin < 0


def test_missing_tail_words_underflow():
    model = UniformModel(256, 16)
    data = list(range(200))
    m, _ = encode(data, model, DEFAULT)
    assert len(m.tail) >= 2
    # bottom of the stack is the first element
    truncated = Message(m.head, m.tail[2:])
    with pytest.raises(TailUnderflowError):
        decode(truncated, len(data), model, DEFAULT)


def test_strict_end_state():
    data = [B, C, A, D, D, C, B, B, A, C]
    m, _ = encode(data, StaticModel(EXAMPLE), SMALL)
    with pytest.raises(EndStateMismatchError):
        decode(m, len(data) - 1, StaticModel(EXAMPLE), SMALL, strict=True)
    # without strict the symbols still come back
    assert decode(m, len(data) - 1, StaticModel(EXAMPLE), SMALL) == data[:-1]


def test_precondition_errors():
    with pytest.raises(PreconditionError):
        encode([A], StaticModel(EXAMPLE), DEFAULT)
    with pytest.raises(PreconditionError):
        decode(Message(5, []), 1, StaticModel(EXAMPLE), SMALL)
    with pytest.raises(PreconditionError):
        decode(Message(300, [256]), 1, StaticModel(EXAMPLE), SMALL)


def test_fast_paths_match_checked_paths():
    rng = np.random.default_rng(606)
    for params in (SMALL, DEFAULT):
        for trial in range(30):
            kind = ("static", "adaptive", "uniform")[trial % 3]
            model, size = _random_model(rng, params, kind)
            data = rng.integers(0, size, size=int(rng.integers(0, 1500))).tolist()
            fast, fast_report = encode(data, model, params)
            checked, checked_report = encode(data, model, params, check_invariants=True)
            assert fast == checked
            assert fast_report == checked_report
            assert decode(fast, len(data), model, params) == decode(
                checked, len(data), model, params, check_invariants=True
            ) == data


@pytest.mark.slow
def test_rate_bound_1000_trials_at_default_params():
    rng = np.random.default_rng(20190101)
    for trial in range(1000):
        kind = ("static", "adaptive", "uniform")[trial % 3]
        model, size = _random_model(rng, DEFAULT, kind)
        data = rng.integers(0, size, size=int(rng.integers(0, 1025))).tolist()
        # landing interval on every push, per-pop effective-length drop on every pop
        m, report = encode(data, model, DEFAULT, check_invariants=True)
        assert decode(m, len(data), model, DEFAULT, strict=True, check_invariants=True) == data
        assert report.actual_bits <= report.shannon_bits + 1e-6 + len(data) * DEFAULT.epsilon + 64
        assert verify_bound(report).passed


@pytest.mark.slow
def test_lossless_10000_trials():
    rng = np.random.default_rng(4096)
    for trial in range(10_000):
        params = (SMALL, DEFAULT)[trial % 2]
        size = int(rng.integers(2, min(256, 1 << params.r) + 1))
        if trial % 4 < 2:
            counts = rng.integers(0, 100, size=size)
            counts[int(rng.integers(0, size))] += 1
            model = StaticModel(quantize_counts(counts.tolist(), params.r))
        else:
            model = AdaptiveOrder0Model(size, params.r)
        data = rng.integers(0, size, size=int(rng.integers(0, 4097))).tolist()
        m, _ = encode(data, model, params)
        assert decode(m, len(data), model, params, strict=True) == data, f"trial {trial}"
