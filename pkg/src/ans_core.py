"""
ANS Core - The push/pop stack codec over a single message
This module holds the bijection d, its pseudo-inverse and renormalization
in both directions, all parameterized by a CodecParams precision triple.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, List, NamedTuple, Tuple


logger = logging.getLogger(__name__)


class CodecError(Exception):
    """Base class for codec errors"""


class InvalidParamsError(CodecError, ValueError):
    """Precision triple violates the codec constraints"""


class PreconditionError(CodecError, ValueError):
    """An operation was called with state it does not accept (caller bug)"""


class TailUnderflowError(CodecError):
    """Renormalization needed a word but the tail is empty"""


@dataclass(frozen=True)
class CodecParams:
    """
    Precision triple of the codec

    r_s is the head width, r_t the tail word width and r the probability
    precision, all in bits.
    """
    r_s: int = 64
    r_t: int = 32
    r: int = 16

    def __post_init__(self):
        for name in ("r_s", "r_t", "r"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise InvalidParamsError(f"{name} must be an integer, got {value!r}")
        if not 0 < self.r_t < self.r_s:
            raise InvalidParamsError(
                f"need 0 < r_t < r_s, got r_s={self.r_s}, r_t={self.r_t}"
            )
        if self.r < 1:
            raise InvalidParamsError(f"r must be at least 1, got {self.r}")
        if self.headroom < 1:
            raise InvalidParamsError(
                f"need r_s - r_t - r >= 1, got {self.r_s} - {self.r_t} - {self.r} = {self.headroom}"
            )

    @property
    def headroom(self) -> int:
        """r_s - r_t - r, the exponent that fixes epsilon"""
        return self.r_s - self.r_t - self.r

    @cached_property
    def epsilon(self) -> float:
        """Per-symbol overhead bound log2(1 / (1 - 2^-(r_s - r_t - r)))"""
        return -math.log1p(-math.ldexp(1.0, -self.headroom)) / math.log(2)

    @property
    def head_lower(self) -> int:
        return 1 << (self.r_s - self.r_t)

    @property
    def head_upper(self) -> int:
        return 1 << self.r_s

    @property
    def prob_scale(self) -> int:
        return 1 << self.r

    @property
    def byte_aligned(self) -> bool:
        """True when head and tail words serialize to whole bytes"""
        return self.r_s % 8 == 0 and self.r_t % 8 == 0


DEFAULT_PARAMS = CodecParams(64, 32, 16)


class SymbolSlot(NamedTuple):
    """A symbol with its quantized weight p and cumulative c"""
    symbol: int
    weight: int
    cumulative: int


@dataclass
class Message:
    """
    Codec state m = (head, tail)

    The tail is a list used as a stack; its top is the last element.
    A Message has a single owner: push and pop modify it in place.
    """
    head: int
    tail: List[int] = field(default_factory=list)

    def copy(self) -> "Message":
        return Message(self.head, list(self.tail))

    def is_valid(self, params: CodecParams) -> bool:
        """Check the head constraint and tail word widths"""
        if not params.head_lower <= self.head < params.head_upper:
            return False
        word_limit = 1 << params.r_t
        return all(0 <= word < word_limit for word in self.tail)


SlotLookup = Callable[[int], SymbolSlot]


def init_message(params: CodecParams = DEFAULT_PARAMS) -> Message:
    """
    Build the initial message, which has the smallest effective length

    Args:
        params: Codec precisions

    Returns:
        Message with head 2^(r_s - r_t) and an empty tail
    """
    return Message(params.head_lower, [])


def d(head: int, slot_lookup: SlotLookup, params: CodecParams = DEFAULT_PARAMS) -> Tuple[int, int]:
    """
    The decode bijection head -> (new_head, symbol)

    Args:
        head: Current head, at least 2^(r_s - r_t)
        slot_lookup: f_X, maps head mod 2^r to the slot whose interval holds it
        params: Codec precisions

    Returns:
        Tuple of (new_head, symbol)
    """
    if not params.head_lower <= head < params.head_upper:
        raise PreconditionError(
            f"head {head} outside [{params.head_lower}, {params.head_upper})"
        )
    bar_s = head & (params.prob_scale - 1)
    symbol, weight, cumulative = slot_lookup(bar_s)
    return weight * (head >> params.r) + bar_s - cumulative, symbol


def d_inverse(new_head: int, slot: SymbolSlot, params: CodecParams = DEFAULT_PARAMS) -> int:
    """
    Inverse of d with the symbol held fixed

    Args:
        new_head: Head after renorm_inverse, inside the slot's landing interval
        slot: Slot of the symbol being pushed
        params: Codec precisions

    Returns:
        The head that d maps to (new_head, slot.symbol)
    """
    low = slot.weight << params.headroom
    if not low <= new_head < low << params.r_t:
        raise PreconditionError(
            f"head {new_head} outside landing interval [{low}, {low << params.r_t}) "
            f"for weight {slot.weight}"
        )
    quotient, remainder = divmod(new_head, slot.weight)
    return (quotient << params.r) + remainder + slot.cumulative


def renorm(head: int, tail: List[int], params: CodecParams = DEFAULT_PARAMS) -> Tuple[int, List[int]]:
    """
    Move words from the tail into the low bits of head until head is in range

    The tail list is modified in place and returned.

    Raises:
        TailUnderflowError: head still too small and the tail is empty
    """
    if head >= params.head_upper:
        raise PreconditionError(f"head {head} is not below 2^{params.r_s}")
    lower = params.head_lower
    r_t = params.r_t
    while head < lower:
        if not tail:
            raise TailUnderflowError(
                "tail exhausted during renormalization; stream is truncated or over-read"
            )
        head = (head << r_t) | tail.pop()
    return head, tail


def renorm_inverse(
    head: int, tail: List[int], weight: int, params: CodecParams = DEFAULT_PARAMS
) -> Tuple[int, List[int]]:
    """
    Move low words of head onto the tail until head fits the landing
    interval [weight * 2^(r_s - r_t - r), weight * 2^(r_s - r)) of d_inverse

    The tail list is modified in place and returned.
    """
    threshold = weight << (params.r_s - params.r)
    r_t = params.r_t
    mask = (1 << r_t) - 1
    while head >= threshold:
        tail.append(head & mask)
        head >>= r_t
    return head, tail


def pop(m: Message, slot_lookup: SlotLookup, params: CodecParams = DEFAULT_PARAMS) -> Tuple[Message, int]:
    """
    Decode one symbol from the message (in place)

    Args:
        m: Message to pop from
        slot_lookup: f_X for this position's distribution
        params: Codec precisions

    Returns:
        Tuple of (m, symbol)
    """
    head, symbol = d(m.head, slot_lookup, params)
    m.head, _ = renorm(head, m.tail, params)
    return m, symbol


def push(m: Message, symbol: int, slot_for_symbol: SymbolSlot, params: CodecParams = DEFAULT_PARAMS) -> Message:
    """
    Encode one symbol onto the message (in place); the inverse of pop

    Args:
        m: Message to push onto
        symbol: Symbol being encoded
        slot_for_symbol: g_X(symbol)
        params: Codec precisions

    Returns:
        The same message, updated
    """
    if slot_for_symbol.symbol != symbol:
        raise PreconditionError(
            f"slot is for symbol {slot_for_symbol.symbol}, not {symbol}"
        )
    if not params.head_lower <= m.head < params.head_upper:
        raise PreconditionError(
            f"head {m.head} outside [{params.head_lower}, {params.head_upper})"
        )
    head, _ = renorm_inverse(m.head, m.tail, slot_for_symbol.weight, params)
    m.head = d_inverse(head, slot_for_symbol, params)
    return m


def length(m: Message, params: CodecParams = DEFAULT_PARAMS) -> int:
    """Flattened length in bits: r_s + r_t * |tail|"""
    return params.r_s + params.r_t * len(m.tail)


def effective_length(m: Message, params: CodecParams = DEFAULT_PARAMS) -> float:
    """Effective length in bits: log2(head) + r_t * |tail|"""
    return math.log2(m.head) + params.r_t * len(m.tail)


def demo_small_codec():
    """Walk the 8-slot example distribution at precisions (16, 8, 3)"""
    params = CodecParams(16, 8, 3)
    slots = [SymbolSlot(0, 1, 0), SymbolSlot(1, 2, 1), SymbolSlot(2, 3, 3), SymbolSlot(3, 2, 6)]

    def lookup(bar_s: int) -> SymbolSlot:
        for slot in reversed(slots):
            if slot.cumulative <= bar_s:
                return slot
        raise PreconditionError(bar_s)

    m = init_message(params)
    print(f"Initial: head={m.head} tail={m.tail} l*={effective_length(m, params):.3f}")
    for symbol in (0, 2, 3, 1):
        push(m, symbol, slots[symbol], params)
        print(f"  push {'abcd'[symbol]} -> head={m.head} tail={m.tail}")
    while m.head != params.head_lower or m.tail:
        m, symbol = pop(m, lookup, params)
        print(f"  pop  {'abcd'[symbol]} -> head={m.head} tail={m.tail}")


if __name__ == "__main__":
    demo_small_codec()
