"""
Self Test - Runs the codec's invariant suites end to end
Used by the `selftest` command; every suite counts the properties it checked
and collects failure messages.
"""
import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List

import numpy as np

from .ans_core import (
    CodecParams,
    DEFAULT_PARAMS,
    Message,
    SymbolSlot,
    d,
    d_inverse,
    pop,
    push,
    renorm_inverse,
)
from .container import CompressedContainer, ModelDescriptor, ModelKind, flatten, pack, unflatten, unpack
from .models import (
    AdaptiveOrder0Model,
    QuantizedDistribution,
    StaticModel,
    UniformModel,
    adaptive_order0_sequence,
    decoded_symbol_counts,
    quantize_counts,
)
from .stream_codec import decode, encode, verify_bound


logger = logging.getLogger(__name__)

SMALL_PARAMS = CodecParams(16, 8, 3)
# P(a)=1/8, P(b)=2/8, P(c)=3/8, P(d)=2/8
EXAMPLE_WEIGHTS = (1, 2, 3, 2)
MAX_FAILURES_PER_SUITE = 10


@dataclass
class SelftestSummary:
    """Counts of properties checked and any failures"""
    checks: Dict[str, int] = field(default_factory=dict)
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    @property
    def total_checks(self) -> int:
        return sum(self.checks.values())

    def record(self, suite: str, ok: bool, detail: str) -> None:
        self.checks[suite] = self.checks.get(suite, 0) + 1
        if not ok:
            suite_failures = sum(1 for f in self.failures if f.startswith(suite + ":"))
            if suite_failures < MAX_FAILURES_PER_SUITE:
                self.failures.append(f"{suite}: {detail}")


DInverse = Callable[[int, SymbolSlot, CodecParams], int]


def _faulty_d_inverse(new_head: int, slot: SymbolSlot, params: CodecParams) -> int:
    """Negative control: off by one"""
    return d_inverse(new_head, slot, params) + 1


def check_bijection(summary: SelftestSummary, d_inv: DInverse = d_inverse) -> None:
    """d_inverse(d(head)) == head for every valid head at the small precisions"""
    params = SMALL_PARAMS
    dist = QuantizedDistribution(EXAMPLE_WEIGHTS, params.r)
    seen = set()
    for head in range(params.head_lower, params.head_upper):
        new_head, symbol = d(head, dist.slot_from_bar, params)
        back = d_inv(new_head, dist.slot_from_symbol(symbol), params)
        ok = back == head and (new_head, symbol) not in seen
        seen.add((new_head, symbol))
        summary.record("bijection", ok, f"head {head} -> ({new_head}, {symbol}) -> {back}")


def check_tiling(summary: SelftestSummary, rng: np.random.Generator, trials: int) -> None:
    """Slot intervals partition [0, 2^r) and f_X agrees with g_X"""
    for _ in range(trials):
        r = int(rng.integers(1, 13))
        size = int(rng.integers(1, min(256, 1 << r) + 1))
        dist = quantize_counts(rng.integers(1, 50, size=size).tolist(), r)
        ok = True
        for bar in range(1 << r):
            slot = dist.slot_from_bar(bar)
            if not slot.cumulative <= bar < slot.cumulative + slot.weight:
                ok = False
                break
        for symbol in range(size):
            slot = dist.slot_from_symbol(symbol)
            ok = ok and dist.slot_from_bar(slot.cumulative).symbol == symbol
        summary.record("tiling", ok, f"weights {dist.weights[:8]}... at r={r}")


def _random_message(rng: np.random.Generator, params: CodecParams, max_tail: int) -> Message:
    head = int(rng.integers(params.head_lower, params.head_upper, dtype=np.uint64))
    tail = [int(w) for w in rng.integers(0, 1 << params.r_t, size=int(rng.integers(0, max_tail + 1)), dtype=np.uint64)]
    return Message(head, tail)


def check_push_pop(summary: SelftestSummary, rng: np.random.Generator, trials: int, d_inv: DInverse) -> None:
    """pop(push(m, x)) == (m, x) on random messages"""
    for params in (SMALL_PARAMS, DEFAULT_PARAMS):
        for _ in range(trials):
            size = int(rng.integers(2, min(256, 1 << params.r) + 1))
            dist = quantize_counts(rng.integers(1, 100, size=size).tolist(), params.r)
            m = _random_message(rng, params, 3)
            original = m.copy()
            symbol = int(rng.integers(0, size))
            slot = dist.slot_from_symbol(symbol)
            if d_inv is d_inverse:
                push(m, symbol, slot, params)
            else:
                head, _ = renorm_inverse(m.head, m.tail, slot.weight, params)
                m.head = d_inv(head, slot, params)
            try:
                m, popped = pop(m, dist.slot_from_bar, params)
                ok = popped == symbol and m == original
            except Exception as e:
                ok, popped = False, repr(e)
            summary.record("push_pop", ok, f"symbol {symbol} popped as {popped} at params {params}")


def _random_model(rng: np.random.Generator, params: CodecParams, kind: str):
    size = int(rng.integers(2, min(256, 1 << params.r) + 1))
    if kind == "adaptive":
        return AdaptiveOrder0Model(size, params.r), size
    if kind == "uniform":
        size = 1 << int(rng.integers(1, min(8, params.r) + 1))
        return UniformModel(size, params.r), size
    counts = rng.integers(0, 1000, size=size)
    counts[int(rng.integers(0, size))] += 1
    return StaticModel(quantize_counts(counts.tolist(), params.r)), size


def check_streams(summary: SelftestSummary, rng: np.random.Generator, trials: int, corrupt_reports: bool) -> None:
    """decode(encode(data)) == data and the rate bound holds, with per-op checks on"""
    for trial in range(trials):
        params = SMALL_PARAMS if trial % 2 else DEFAULT_PARAMS
        kind = ("static", "adaptive", "uniform")[trial % 3]
        model, size = _random_model(rng, params, kind)
        n = int(rng.integers(0, 4097))
        data = rng.integers(0, size, size=n).tolist()
        try:
            m, report = encode(data, model, params, check_invariants=True)
            decoded = decode(m, n, model, params, strict=True, check_invariants=True)
            ok = decoded == data
        except Exception as e:
            summary.record("lossless", False, f"{kind} trial {trial}: {e!r}")
            continue
        summary.record("lossless", ok, f"{kind} trial {trial} did not round trip")
        if corrupt_reports:
            report = replace(report, actual_bits=report.actual_bits + 1000)
        check = verify_bound(report)
        summary.record(
            "rate_bound", check.passed,
            f"{kind} trial {trial}: margins {check.effective_margin:.6f} / {check.flat_margin:.6f}",
        )


def check_quantization(summary: SelftestSummary, rng: np.random.Generator, trials: int) -> None:
    """Weights sum to 2^r, stay at least 1, and ignore a common scale on the counts"""
    for _ in range(trials):
        r = int(rng.integers(1, 17))
        size = int(rng.integers(1, min(256, 1 << r) + 1))
        counts = rng.integers(0, 1000, size=size)
        counts[int(rng.integers(0, size))] += 1
        dist = quantize_counts(counts.tolist(), r)
        scaled = quantize_counts((counts * 7).tolist(), r)
        ok = sum(dist.weights) == 1 << r and min(dist.weights) >= 1 and scaled == dist
        summary.record("quantization", ok, f"counts {counts[:8].tolist()}... at r={r}")


def check_container(summary: SelftestSummary, rng: np.random.Generator, trials: int) -> None:
    """unflatten inverts flatten and unpack inverts pack"""
    for trial in range(trials):
        params = SMALL_PARAMS if trial % 2 else DEFAULT_PARAMS
        m = _random_message(rng, params, 20)
        try:
            ok = unflatten(flatten(m, params), params) == m
        except Exception:
            ok = False
        summary.record("container", ok, f"flatten of a {len(m.tail)}-word message at {params}")

        size = int(rng.integers(1, min(256, 1 << params.r) + 1))
        if trial % 3:
            dist = quantize_counts(rng.integers(1, 100, size=size).tolist(), params.r)
            descriptor = ModelDescriptor(ModelKind.STATIC, size, dist.weights)
        else:
            descriptor = ModelDescriptor(ModelKind.ADAPTIVE_ORDER0, size)
        container = CompressedContainer(params, descriptor, int(rng.integers(0, 1 << 40)), m)
        try:
            ok = unpack(pack(container)) == container
        except Exception:
            ok = False
        summary.record("container", ok, f"pack of a {descriptor.kind.name} container at {params}")


def check_adaptive_schedule(summary: SelftestSummary, rng: np.random.Generator, trials: int) -> None:
    """Encoder and decoder adaptive models follow adaptive_order0_sequence"""
    for trial in range(trials):
        params = SMALL_PARAMS if trial % 2 else DEFAULT_PARAMS
        size = int(rng.integers(1, min(256, 1 << params.r) + 1))
        data = rng.integers(0, size, size=int(rng.integers(0, 513))).tolist()
        reference = adaptive_order0_sequence(data, size, params.r)

        encoder = AdaptiveOrder0Model(size, params.r)
        slots = encoder.slot_schedule(data)
        expected = [dist.slot_from_symbol(x) for dist, x in zip(reference, data)]
        summary.record("adaptive", slots == expected, f"encoder schedule, trial {trial}, alphabet {size}")

        m, _ = encode(data, encoder, params)
        decoder = AdaptiveOrder0Model(size, params.r)
        ok = True
        for dist in reference:
            ok = ok and decoder.distribution() == dist
            m, symbol = pop(m, decoder.slot_from_bar, params)
            decoder.update(symbol)
        summary.record("adaptive", ok, f"decoder schedule, trial {trial}, alphabet {size}")


def check_density(summary: SelftestSummary, max_s: int = 4096) -> None:
    """Counts of n < s decoding to x stay within p_x of s * P(x)"""
    dist = QuantizedDistribution(EXAMPLE_WEIGHTS, SMALL_PARAMS.r)
    scale = 1 << dist.precision
    brute = [0] * dist.alphabet_size
    for s in range(1, max_s + 1):
        brute[dist.slot_from_bar((s - 1) % scale).symbol] += 1
        closed = decoded_symbol_counts(dist, s)
        ok = closed == brute and all(
            abs(count - s * p / scale) <= p for count, p in zip(brute, dist.weights)
        )
        if s >= SMALL_PARAMS.head_lower:
            new_head, symbol = d(s, dist.slot_from_bar, SMALL_PARAMS)
            ok = ok and new_head == closed[symbol]
        summary.record("density", ok, f"s={s}: counts {brute} vs closed form {closed}")


def run_selftest(trials: int = 200, seed: int = 20190101, inject_fault: bool = False) -> SelftestSummary:
    """
    Run every invariant suite

    Args:
        trials: Randomized trials per suite
        seed: Seed for the random generator
        inject_fault: Negative control; swaps in a broken d_inverse and
            inflates rate reports so the run must fail

    Returns:
        SelftestSummary
    """
    rng = np.random.default_rng(seed)
    summary = SelftestSummary()
    d_inv = _faulty_d_inverse if inject_fault else d_inverse
    if inject_fault:
        logger.warning("Fault injection enabled: this self test is expected to fail")

    check_bijection(summary, d_inv)
    check_tiling(summary, rng, max(1, trials // 10))
    check_quantization(summary, rng, trials)
    check_push_pop(summary, rng, trials, d_inv)
    check_streams(summary, rng, trials, corrupt_reports=inject_fault)
    check_adaptive_schedule(summary, rng, max(1, trials // 10))
    check_container(summary, rng, trials)
    check_density(summary)

    for suite, count in summary.checks.items():
        logger.info(f"{suite}: {count} checks")
    if summary.failures:
        logger.error(f"{len(summary.failures)} failures recorded")
    return summary
