"""
Stream Codec - Whole-sequence encode and decode over a SymbolModel
Symbols are pushed last-first so that decoding pops them in their original
order, and every encode reports its size against the rate bound.
"""
import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .ans_core import (
    CodecError,
    CodecParams,
    DEFAULT_PARAMS,
    Message,
    PreconditionError,
    SymbolSlot,
    TailUnderflowError,
    d,
    d_inverse,
    effective_length,
    init_message,
    length,
    renorm,
    renorm_inverse,
)
from .models import SymbolModel


logger = logging.getLogger(__name__)

# Absolute slack on real-valued bound checks
PER_OP_SLACK = 1e-9
RATE_SLACK = 1e-6


class InvariantViolation(CodecError):
    """An instrumented push or pop broke one of the codec's guarantees"""


class EndStateMismatchError(CodecError):
    """Decoding finished somewhere other than the initial message"""


@dataclass(frozen=True)
class RateReport:
    """
    Size of an encoded message against its information content

    bound_bits is shannon_bits + n_symbols * epsilon + r_s; actual_bits can
    never exceed it.
    """
    n_symbols: int
    shannon_bits: float
    actual_bits: int
    effective_bits: float
    epsilon: float
    bound_bits: float
    r_s: int
    r_t: int

    @property
    def effective_bound_bits(self) -> float:
        """Bound on the effective length: bound_bits - r_t"""
        return self.bound_bits - self.r_t

    @property
    def overhead_bits(self) -> float:
        return self.actual_bits - self.shannon_bits

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class BoundCheck:
    """Result of verify_bound; margins are bound minus measured, in bits"""
    passed: bool
    effective_margin: float
    flat_margin: float


def _check_model(model: SymbolModel, params: CodecParams) -> None:
    if model.precision != params.r:
        raise PreconditionError(
            f"model precision {model.precision} does not match codec precision r={params.r}"
        )


def _checked_push(m: Message, slot: SymbolSlot, params: CodecParams) -> None:
    """push with the landing interval and head range asserted"""
    tail_before = len(m.tail)
    head, _ = renorm_inverse(m.head, m.tail, slot.weight, params)
    low = slot.weight << params.headroom
    high = slot.weight << (params.r_s - params.r)
    if not low <= head < high:
        raise InvariantViolation(f"renorm_inverse left head {head} outside [{low}, {high})")
    if len(m.tail) > tail_before:
        # one fewer iteration must still have been at or above the threshold
        undone = (head << params.r_t) | m.tail[-1]
        if undone < high:
            raise InvariantViolation(f"renorm_inverse ran past the landing interval at head {undone}")
    m.head = d_inverse(head, slot, params)
    if not params.head_lower <= m.head < params.head_upper:
        raise InvariantViolation(f"push left head {m.head} outside the head range")


def _checked_pop(m: Message, model: SymbolModel, params: CodecParams) -> int:
    """pop with the per-operation information bounds asserted"""
    looked_up: List[SymbolSlot] = []

    def lookup(bar_s: int) -> SymbolSlot:
        slot = model.slot_from_bar(bar_s)
        looked_up.append(slot)
        return slot

    head_before = m.head
    tail_before = len(m.tail)
    head, symbol = d(head_before, lookup, params)
    info = params.r - math.log2(looked_up[-1].weight)
    if math.log2(head_before) - math.log2(head) > info + params.epsilon + PER_OP_SLACK:
        raise InvariantViolation(f"d dropped more than h(x) + epsilon at head {head_before}")
    m.head, _ = renorm(head, m.tail, params)
    if not params.head_lower <= m.head < params.head_upper:
        raise InvariantViolation(f"pop left head {m.head} outside the head range")
    # difference taken term by term so long tails do not eat the float slack
    drop = math.log2(head_before) - math.log2(m.head) + params.r_t * (tail_before - len(m.tail))
    if drop > info + params.epsilon + PER_OP_SLACK:
        raise InvariantViolation(f"effective length dropped more than h(x) + epsilon at head {head_before}")
    return symbol


def _push_schedule(m: Message, schedule: Sequence[SymbolSlot], params: CodecParams) -> None:
    """push for every slot, last slot first, with the per-push checks hoisted"""
    if not params.head_lower <= m.head < params.head_upper:
        raise PreconditionError(f"head {m.head} outside [{params.head_lower}, {params.head_upper})")
    r, r_t = params.r, params.r_t
    shift = params.r_s - r
    mask = (1 << r_t) - 1
    head = m.head
    append = m.tail.append
    for _, weight, cumulative in reversed(schedule):
        threshold = weight << shift
        while head >= threshold:
            append(head & mask)
            head >>= r_t
        quotient, remainder = divmod(head, weight)
        head = (quotient << r) + remainder + cumulative
    m.head = head


def _pop_run(m: Message, n_symbols: int, model: SymbolModel, params: CodecParams) -> List[int]:
    """pop and update n_symbols times with the model lookups hoisted"""
    r, r_t = params.r, params.r_t
    bar_mask = params.prob_scale - 1
    lower = params.head_lower
    slot_from_bar = model.slot_from_bar
    update = model.update
    head, tail = m.head, m.tail
    symbols: List[int] = []
    append = symbols.append
    for _ in range(n_symbols):
        bar_s = head & bar_mask
        symbol, weight, cumulative = slot_from_bar(bar_s)
        head = weight * (head >> r) + bar_s - cumulative
        while head < lower:
            if not tail:
                m.head = head
                raise TailUnderflowError(
                    "tail exhausted during renormalization; stream is truncated or over-read"
                )
            head = (head << r_t) | tail.pop()
        update(symbol)
        append(symbol)
    m.head = head
    return symbols


def _shannon_bits(schedule: Sequence[SymbolSlot], r: int) -> float:
    if not schedule:
        return 0.0
    weights = np.fromiter((slot.weight for slot in schedule), dtype=np.float64, count=len(schedule))
    return len(schedule) * r - math.fsum(np.log2(weights).tolist())


def encode(
    data: Sequence[int],
    model: SymbolModel,
    params: CodecParams = DEFAULT_PARAMS,
    check_invariants: bool = False,
) -> Tuple[Message, RateReport]:
    """
    Encode a symbol sequence into a message

    The model is run forward to build each position's slot, then the slots
    are pushed from last to first starting at init_message.

    Args:
        data: Symbols to encode
        model: Model shared with the decoder
        params: Codec precisions
        check_invariants: Assert the landing interval and head range on every push

    Returns:
        Tuple of (message, rate report)
    """
    _check_model(model, params)
    model.reset()
    schedule = model.slot_schedule(data)

    m = init_message(params)
    if check_invariants:
        for slot in reversed(schedule):
            _checked_push(m, slot, params)
    else:
        _push_schedule(m, schedule, params)

    n_symbols = len(schedule)
    shannon_bits = _shannon_bits(schedule, params.r)
    report = RateReport(
        n_symbols=n_symbols,
        shannon_bits=shannon_bits,
        actual_bits=length(m, params),
        effective_bits=effective_length(m, params),
        epsilon=params.epsilon,
        bound_bits=shannon_bits + n_symbols * params.epsilon + params.r_s,
        r_s=params.r_s,
        r_t=params.r_t,
    )
    logger.debug(
        f"Encoded {n_symbols} symbols into {report.actual_bits} bits "
        f"(information {shannon_bits:.3f} bits)"
    )
    return m, report


def decode(
    m: Message,
    n_symbols: int,
    model: SymbolModel,
    params: CodecParams = DEFAULT_PARAMS,
    strict: bool = False,
    check_invariants: bool = False,
) -> List[int]:
    """
    Decode n_symbols symbols from a message, first symbol first

    The caller's message is left untouched.

    Args:
        m: Message produced by encode
        n_symbols: Number of symbols to pop
        model: Model matching the encoder's
        params: Codec precisions
        strict: Raise EndStateMismatchError instead of warning when the
            message does not end at init_message
        check_invariants: Assert the information bounds on every pop

    Returns:
        Decoded symbols
    """
    _check_model(model, params)
    if not m.is_valid(params):
        raise PreconditionError("message violates the head range or tail word width")
    m = m.copy()
    model.reset()
    if check_invariants:
        symbols = []
        for _ in range(n_symbols):
            symbol = _checked_pop(m, model, params)
            model.update(symbol)
            symbols.append(symbol)
    else:
        symbols = _pop_run(m, n_symbols, model, params)

    if m != init_message(params):
        message = (
            f"decoder finished at head={m.head} with {len(m.tail)} tail words left, "
            f"not the initial message"
        )
        if strict:
            raise EndStateMismatchError(message)
        logger.warning(message)
    logger.debug(f"Decoded {len(symbols)} symbols")
    return symbols


def verify_bound(report: RateReport) -> BoundCheck:
    """
    Check a report against the effective-length and flat-length bounds

    Args:
        report: Report from a completed encode

    Returns:
        BoundCheck with both margins; passed is False if either is negative
    """
    effective_margin = report.effective_bound_bits - report.effective_bits
    flat_margin = report.bound_bits - report.actual_bits
    passed = effective_margin >= -RATE_SLACK and flat_margin >= -RATE_SLACK
    if not passed:
        logger.warning(
            f"Rate bound failed: effective margin {effective_margin:.6f}, flat margin {flat_margin:.6f}"
        )
    return BoundCheck(passed=passed, effective_margin=effective_margin, flat_margin=flat_margin)
