"""
Symbol Models - Quantized probability models for the codec
This module supplies f_X (bar_s -> slot) and g_X (symbol -> slot) for each
position, quantizes raw counts to integer weights and tracks adaptive
order-0 statistics.
"""
import bisect
import logging
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .ans_core import SymbolSlot


logger = logging.getLogger(__name__)

# Largest precision for which a direct bar_s -> symbol table is built
MAX_LOOKUP_TABLE_PRECISION = 16


class ModelError(ValueError):
    """Invalid counts, weights or symbols for a model"""


@dataclass(frozen=True)
class QuantizedDistribution:
    """
    Distribution over symbols 0..I-1 with integer weights summing to 2^r

    Symbol i owns the interval [c_i, c_i + p_i) of [0, 2^r).
    """
    weights: Tuple[int, ...]
    precision: int
    cumulatives: Tuple[int, ...] = field(init=False)
    lookup_table: Optional[List[int]] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        weights = tuple(int(w) for w in self.weights)
        if not weights:
            raise ModelError("distribution needs at least one symbol")
        if min(weights) < 1:
            raise ModelError("every weight must be at least 1")
        total = sum(weights)
        if total != 1 << self.precision:
            raise ModelError(f"weights sum to {total}, expected 2^{self.precision}")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "cumulatives", tuple(np.cumsum((0,) + weights[:-1]).tolist()))

    @classmethod
    def from_weights(cls, weights: Sequence[int], r: int) -> "QuantizedDistribution":
        return cls(tuple(weights), r)

    @property
    def alphabet_size(self) -> int:
        return len(self.weights)

    def with_lookup_table(self) -> "QuantizedDistribution":
        """
        Copy of this distribution carrying a direct 2^r-entry symbol table

        Returns:
            New QuantizedDistribution whose slot_from_bar indexes the table
        """
        if self.precision > MAX_LOOKUP_TABLE_PRECISION:
            raise ModelError(
                f"lookup table needs r <= {MAX_LOOKUP_TABLE_PRECISION}, got {self.precision}"
            )
        table = np.repeat(np.arange(self.alphabet_size), self.weights).tolist()
        logger.debug(f"Built {len(table)}-entry lookup table for {self.alphabet_size} symbols")
        return QuantizedDistribution(self.weights, self.precision, lookup_table=table)

    def slot_from_bar(self, bar_s: int) -> SymbolSlot:
        """f_X: the slot whose interval contains bar_s"""
        if not 0 <= bar_s < 1 << self.precision:
            raise ModelError(f"bar_s {bar_s} outside [0, 2^{self.precision})")
        if self.lookup_table is not None:
            symbol = self.lookup_table[bar_s]
        else:
            symbol = bisect.bisect_right(self.cumulatives, bar_s) - 1
        return SymbolSlot(symbol, self.weights[symbol], self.cumulatives[symbol])

    def slot_from_symbol(self, symbol: int) -> SymbolSlot:
        """g_X: the slot of a symbol"""
        if not 0 <= symbol < len(self.weights):
            raise ModelError(f"symbol {symbol} not in alphabet of size {len(self.weights)}")
        return SymbolSlot(symbol, self.weights[symbol], self.cumulatives[symbol])


def slot_from_bar(dist: QuantizedDistribution, bar_s: int) -> SymbolSlot:
    return dist.slot_from_bar(bar_s)


def slot_from_symbol(dist: QuantizedDistribution, symbol: int) -> SymbolSlot:
    return dist.slot_from_symbol(symbol)


def quantize_counts(counts: Sequence[int], r: int) -> QuantizedDistribution:
    """
    Apportion 2^r among symbols in proportion to counts

    Each symbol starts from the floor of its exact share, clamped to 1. A
    positive residual goes one unit at a time to the largest fractional
    remainders; a negative residual is taken one unit at a time from symbols
    above weight 1, smallest fractional remainder first. Ties go to the
    lowest symbol index.

    Args:
        counts: Nonnegative count per symbol, at least one positive
        r: Probability precision in bits

    Returns:
        QuantizedDistribution with every weight >= 1
    """
    size = len(counts)
    if size == 0:
        raise ModelError("counts must not be empty")
    if size > 1 << r:
        raise ModelError(f"alphabet of {size} symbols cannot fit in 2^{r} slots")
    total = int(sum(int(c) for c in counts))
    if total <= 0 or min(int(c) for c in counts) < 0:
        raise ModelError("counts must be nonnegative with at least one positive")

    dtype = np.int64 if _int64_exact(total, r) else object
    scaled = np.asarray([int(c) for c in counts], dtype=dtype) << r
    return QuantizedDistribution(tuple(_apportion(scaled, total, r).tolist()), r)


def _int64_exact(total: int, r: int) -> bool:
    """int64 is exact while counts * 2^r stays below 2^63"""
    return total.bit_length() + r < 63


def _apportion(scaled: np.ndarray, total: int, r: int) -> np.ndarray:
    """Largest-remainder weights from counts already shifted left by r"""
    weights = np.maximum(scaled // total, 1)
    remainders = scaled % total
    residual = (1 << r) - int(weights.sum())

    if residual > 0:
        order = np.argsort(-remainders, kind="stable")
        while residual > 0:
            step = order[:residual]
            weights[step] += 1
            residual -= len(step)
    elif residual < 0:
        order = np.argsort(remainders, kind="stable")
        while residual < 0:
            eligible = order[weights[order] > 1][:-residual]
            weights[eligible] -= 1
            residual += len(eligible)
    return weights


def _apportion_rows(scaled: np.ndarray, totals: np.ndarray, r: int) -> np.ndarray:
    """
    _apportion applied to every row of a 2-D int64 array

    A positive residual is always smaller than the alphabet, so one ranked
    pass settles it; rows with a negative residual go through _apportion.
    """
    weights = np.maximum(scaled // totals[:, None], 1)
    remainders = scaled % totals[:, None]
    residual = (1 << r) - weights.sum(axis=1)

    order = np.argsort(-remainders, axis=1, kind="stable")
    ranks = np.empty_like(order)
    np.put_along_axis(ranks, order, np.arange(order.shape[1])[None, :], axis=1)
    weights += ranks < np.maximum(residual, 0)[:, None]
    for row in np.flatnonzero(residual < 0):
        weights[row] = _apportion(scaled[row], int(totals[row]), r)
    return weights


def uniform_distribution(alphabet_size: int, r: int) -> QuantizedDistribution:
    """Quantized uniform distribution (alphabet size must divide 2^r evenly)"""
    if alphabet_size < 1 or (1 << r) % alphabet_size:
        raise ModelError(f"alphabet size {alphabet_size} does not divide 2^{r}")
    return QuantizedDistribution(((1 << r) // alphabet_size,) * alphabet_size, r)


def entropy(dist: QuantizedDistribution) -> float:
    """Entropy of a quantized distribution in bits per symbol"""
    weights = np.asarray(dist.weights, dtype=np.float64)
    probs = weights / float(1 << dist.precision)
    return float(-(probs * np.log2(probs)).sum())


def decoded_symbol_counts(dist: QuantizedDistribution, s: int) -> List[int]:
    """
    Count, per symbol x, the integers n < s whose low r bits fall in x's interval

    Args:
        dist: Distribution defining the intervals
        s: Upper bound (exclusive)

    Returns:
        List of counts indexed by symbol
    """
    whole, partial = divmod(s, 1 << dist.precision)
    return [
        whole * p + min(max(partial - c, 0), p)
        for p, c in zip(dist.weights, dist.cumulatives)
    ]


def _symbol_array(data: Sequence[int], alphabet_size: int) -> np.ndarray:
    """Symbols as an int64 array, all checked against the alphabet"""
    symbols = np.fromiter(data, dtype=np.int64, count=len(data))
    if len(symbols) and (symbols.min() < 0 or symbols.max() >= alphabet_size):
        bad = symbols[(symbols < 0) | (symbols >= alphabet_size)][0]
        raise ModelError(f"symbol {int(bad)} not in alphabet of size {alphabet_size}")
    return symbols


class SymbolModel(ABC):
    """
    Per-position distribution source shared by encoder and decoder

    Both sides call reset(), then for every position distribution() followed
    by update(symbol). Identical histories must give identical distributions.
    """

    def __init__(self, alphabet_size: int, precision: int):
        self.alphabet_size = alphabet_size
        self.precision = precision

    def reset(self) -> None:
        """Return to the state before the first symbol"""

    @abstractmethod
    def distribution(self) -> QuantizedDistribution:
        """Distribution for the next position given the history so far"""

    def update(self, symbol: int) -> None:
        """Record a symbol that was just coded"""

    def slot_from_bar(self, bar_s: int) -> SymbolSlot:
        """f_X for the next position"""
        return self.distribution().slot_from_bar(bar_s)

    def slot_from_symbol(self, symbol: int) -> SymbolSlot:
        """g_X for the next position"""
        return self.distribution().slot_from_symbol(symbol)

    def slot_schedule(self, data: Sequence[int]) -> List[SymbolSlot]:
        """
        Slot of every symbol of data, starting from the current state

        The model ends in the state it has after seeing all of data.
        """
        schedule = []
        for symbol in data:
            schedule.append(self.slot_from_symbol(symbol))
            self.update(symbol)
        return schedule


class StaticModel(SymbolModel):
    """Same distribution at every position"""

    def __init__(self, dist: QuantizedDistribution):
        super().__init__(dist.alphabet_size, dist.precision)
        self.dist = dist

    @classmethod
    def from_counts(cls, counts: Sequence[int], r: int, use_lookup_table: bool = False) -> "StaticModel":
        dist = quantize_counts(counts, r)
        if use_lookup_table:
            dist = dist.with_lookup_table()
        return cls(dist)

    def distribution(self) -> QuantizedDistribution:
        return self.dist

    def slot_from_bar(self, bar_s: int) -> SymbolSlot:
        return self.dist.slot_from_bar(bar_s)

    def slot_schedule(self, data: Sequence[int]) -> List[SymbolSlot]:
        slots = [self.dist.slot_from_symbol(x) for x in range(self.alphabet_size)]
        return [slots[x] for x in _symbol_array(data, self.alphabet_size).tolist()]


class AdaptiveOrder0Model(SymbolModel):
    """
    Order-0 adaptive model: add-one initial counts, re-quantized each position

    Counts live in an int64 array. The decoder side re-quantizes once per
    position with numpy; slot_schedule quantizes whole blocks of positions
    at once for the encoder.
    """

    # cells per block of the batched schedule (positions x alphabet)
    SCHEDULE_CELLS = 1 << 18

    def __init__(self, alphabet_size: int, precision: int):
        if alphabet_size < 1:
            raise ModelError(f"alphabet size must be at least 1, got {alphabet_size}")
        if alphabet_size > 1 << precision:
            raise ModelError(f"alphabet of {alphabet_size} symbols cannot fit in 2^{precision} slots")
        super().__init__(alphabet_size, precision)
        self.reset()

    def reset(self) -> None:
        self._counts = np.ones(self.alphabet_size, dtype=np.int64)
        self._total = self.alphabet_size
        self._invalidate()

    def _invalidate(self) -> None:
        self._weights: Optional[np.ndarray] = None
        self._ends: Optional[np.ndarray] = None
        self._cached: Optional[QuantizedDistribution] = None

    @property
    def counts(self) -> List[int]:
        return self._counts.tolist()

    def _quantize(self) -> None:
        r = self.precision
        if _int64_exact(self._total, r):
            weights = _apportion(self._counts << r, self._total, r)
        else:
            weights = np.asarray(quantize_counts(self.counts, r).weights, dtype=object)
        self._weights = weights
        self._ends = np.cumsum(weights)

    def distribution(self) -> QuantizedDistribution:
        if self._cached is None:
            if self._weights is None:
                self._quantize()
            self._cached = QuantizedDistribution(tuple(self._weights.tolist()), self.precision)
        return self._cached

    def slot_from_bar(self, bar_s: int) -> SymbolSlot:
        if not 0 <= bar_s < 1 << self.precision:
            raise ModelError(f"bar_s {bar_s} outside [0, 2^{self.precision})")
        if self._weights is None:
            self._quantize()
        symbol = int(np.searchsorted(self._ends, bar_s, side="right"))
        weight = int(self._weights[symbol])
        return SymbolSlot(symbol, weight, int(self._ends[symbol]) - weight)

    def slot_from_symbol(self, symbol: int) -> SymbolSlot:
        if not 0 <= symbol < self.alphabet_size:
            raise ModelError(f"symbol {symbol} not in alphabet of size {self.alphabet_size}")
        if self._weights is None:
            self._quantize()
        weight = int(self._weights[symbol])
        return SymbolSlot(symbol, weight, int(self._ends[symbol]) - weight)

    def update(self, symbol: int) -> None:
        if not 0 <= symbol < self.alphabet_size:
            raise ModelError(f"symbol {symbol} not in alphabet of size {self.alphabet_size}")
        self._counts[symbol] += 1
        self._total += 1
        self._invalidate()

    def slot_schedule(self, data: Sequence[int]) -> List[SymbolSlot]:
        symbols = _symbol_array(data, self.alphabet_size)
        r = self.precision
        alphabet = np.arange(self.alphabet_size)
        block_size = max(1, self.SCHEDULE_CELLS // self.alphabet_size)
        schedule: List[SymbolSlot] = []
        for start in range(0, len(symbols), block_size):
            block = symbols[start:start + block_size]
            if not _int64_exact(self._total + len(block), r):
                schedule.extend(super().slot_schedule(block.tolist()))
                continue
            onehot = (block[:, None] == alphabet).astype(np.int64)
            # counts seen before each position of the block
            counts = self._counts + np.cumsum(onehot, axis=0) - onehot
            totals = self._total + np.arange(len(block), dtype=np.int64)
            weights = _apportion_rows(counts << r, totals, r)
            cumulatives = np.cumsum(weights, axis=1) - weights
            rows = np.arange(len(block))
            schedule.extend(map(
                SymbolSlot,
                block.tolist(),
                weights[rows, block].tolist(),
                cumulatives[rows, block].tolist(),
            ))
            self._counts += onehot.sum(axis=0)
            self._total += len(block)
            self._invalidate()
        logger.debug(f"Built adaptive schedule for {len(symbols)} symbols")
        return schedule


class UniformModel(SymbolModel):
    """
    Uniform model over 2^k symbols with closed-form f_X and g_X

    No tables or searches: slots are computed with shifts.
    """

    def __init__(self, alphabet_size: int, precision: int):
        if alphabet_size < 1 or alphabet_size & (alphabet_size - 1):
            raise ModelError(f"alphabet size {alphabet_size} is not a power of two")
        bits = alphabet_size.bit_length() - 1
        if bits > precision:
            raise ModelError(f"alphabet of {alphabet_size} symbols cannot fit in 2^{precision} slots")
        super().__init__(alphabet_size, precision)
        self.shift = precision - bits
        self.weight = 1 << self.shift
        self._dist: Optional[QuantizedDistribution] = None

    def distribution(self) -> QuantizedDistribution:
        if self._dist is None:
            self._dist = uniform_distribution(self.alphabet_size, self.precision)
        return self._dist

    def slot_from_bar(self, bar_s: int) -> SymbolSlot:
        symbol = bar_s >> self.shift
        return SymbolSlot(symbol, self.weight, symbol << self.shift)

    def slot_from_symbol(self, symbol: int) -> SymbolSlot:
        if not 0 <= symbol < self.alphabet_size:
            raise ModelError(f"symbol {symbol} not in alphabet of size {self.alphabet_size}")
        return SymbolSlot(symbol, self.weight, symbol << self.shift)


def adaptive_order0_sequence(data: Sequence[int], alphabet_size: int, r: int) -> List[QuantizedDistribution]:
    """
    Per-position distribution schedule of the adaptive order-0 model

    Computed straight from running counts with quantize_counts, one position
    at a time, so it can be checked against AdaptiveOrder0Model.

    Args:
        data: Symbol sequence
        alphabet_size: Number of symbols
        r: Probability precision in bits

    Returns:
        One QuantizedDistribution per position of data
    """
    if alphabet_size < 1:
        raise ModelError(f"alphabet size must be at least 1, got {alphabet_size}")
    counts = [1] * alphabet_size
    schedule = []
    for symbol in data:
        if not 0 <= symbol < alphabet_size:
            raise ModelError(f"symbol {symbol} not in alphabet of size {alphabet_size}")
        schedule.append(quantize_counts(counts, r))
        counts[symbol] += 1
    return schedule


def shannon_info(schedule: Sequence[QuantizedDistribution], data: Sequence[int]) -> float:
    """
    Joint Shannon information of data under a per-position schedule, in bits

    Args:
        schedule: Distribution for each position
        data: Observed symbols

    Returns:
        Sum of log2(2^r / p(x_n)) over positions
    """
    if len(schedule) != len(data):
        raise ModelError(f"schedule has {len(schedule)} positions but data has {len(data)}")
    return math.fsum(
        dist.precision - math.log2(dist.weights[symbol])
        for dist, symbol in zip(schedule, data)
    )
