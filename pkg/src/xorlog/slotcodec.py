"""Bit-level model of a single log slot.

A slot is a 64-bit two's-complement word.  Zero means empty, a negative word
is invalid and a positive word is valid.  The low ``m`` bits are contention
bits: recording an item xors in ``(item << m) | (2**m - 1)``, so up to
``2**m - 1 >= n_max`` later decrements borrow only from the contention field
and never reach the item bits or the sign bit.

The all-ones item is not accepted.  Its encoding is ``2**63 - 1``; xored
into a slot already decremented once it yields ``-2**63``, and one more
decrement from a second sealer wraps the word to a positive value.  Every
smaller item keeps at least ``2**m - n_max + 1`` of headroom below the sign
flip, so the largest legal item is ``2**item_bits - 2``.

Everything here is pure and works on Python ints; :func:`apply_xor` and
:func:`apply_dec` are the reference algebra the concurrent code is checked
against.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .errors import ConfigError, ItemTooLarge

WORD_BITS = 64
_WORD_MASK = (1 << WORD_BITS) - 1


def to_signed64(value: int) -> int:
    """Reduce an int to the 64-bit two's-complement range."""
    value &= _WORD_MASK
    return value - (1 << WORD_BITS) if value >> (WORD_BITS - 1) else value


@dataclass(frozen=True)
class Params:
    n_max: int
    capacity: int
    m: int
    item_bits: int
    word_bits: int = field(default=WORD_BITS)

    def __post_init__(self):
        if self.n_max < 1:
            raise ConfigError(f"n_max must be >= 1, got {self.n_max}")
        if self.capacity < 1:
            raise ConfigError(f"capacity must be >= 1, got {self.capacity}")
        if self.m != (self.n_max).bit_length():
            raise ConfigError("m must equal ceil(log2(n_max + 1))")
        if (1 << self.m) - 1 < self.n_max:
            raise ConfigError("contention field too narrow for n_max")
        if self.item_bits != self.word_bits - self.m - 1 or self.item_bits < 1:
            raise ConfigError("item_bits must equal 64 - m - 1 and be positive")

    @property
    def contention_mask(self) -> int:
        return (1 << self.m) - 1

    @property
    def item_mask(self) -> int:
        return (1 << self.item_bits) - 1

    @property
    def max_item(self) -> int:
        return self.item_mask - 1


def derive_params(n_max: int, capacity: int) -> Params:
    """Build :class:`Params` for ``n_max`` writers over ``capacity`` slots.

    ``m = ceil(log2(n_max + 1))`` is exactly ``n_max.bit_length()`` for
    positive ints, which avoids float log rounding.
    """
    if n_max < 1:
        raise ConfigError(f"n_max must be >= 1, got {n_max}")
    if capacity < 1:
        raise ConfigError(f"capacity must be >= 1, got {capacity}")
    m = n_max.bit_length()
    item_bits = WORD_BITS - m - 1
    if item_bits < 1:
        raise ConfigError(f"n_max={n_max} leaves no room for item bits")
    return Params(n_max=n_max, capacity=capacity, m=m, item_bits=item_bits)


@dataclass(frozen=True)
class Empty:
    def __repr__(self):
        return "Empty"


@dataclass(frozen=True)
class Invalid:
    def __repr__(self):
        return "Invalid"


@dataclass(frozen=True)
class Valid:
    item: int


SlotState = Union[Empty, Valid, Invalid]

EMPTY = Empty()
INVALID = Invalid()


def check_item(item: int, p: Params) -> int:
    if not 0 <= item <= p.max_item:
        raise ItemTooLarge(f"item {item} outside 0..{p.max_item} ({p.item_bits} item bits, "
                           f"all-ones reserved)")
    return item


def encode(item: int, p: Params) -> int:
    check_item(item, p)
    return raw_encode(item, p)


def raw_encode(item: int, p: Params) -> int:
    """Encoding without the range check; only for probing the reserved item."""
    return (item << p.m) | p.contention_mask


def extract_item(word: int, p: Params) -> int:
    """Item bits of ``word``, ignoring the sign bit.

    Also meaningful for an invalid word that received the owner's xor after a
    decrement, which is what the model checker inspects.
    """
    return (word >> p.m) & p.item_mask


def classify(word: int, p: Params) -> SlotState:
    if word == 0:
        return EMPTY
    if word < 0:
        return INVALID
    return Valid(extract_item(word, p))


def apply_xor(word: int, enc: int) -> int:
    """Effect of an atomic xor of ``enc`` on ``word``."""
    return to_signed64(word ^ enc)


def apply_dec(word: int) -> int:
    """Effect of an atomic decrement on ``word``."""
    return to_signed64(word - 1)


def replay(ops, enc: int) -> list[int]:
    """Apply a sequence of ``"xor"``/``"dec"`` ops to an empty slot.

    Returns the word after each op (the initial zero is not included).
    """
    word = 0
    out = []
    for op in ops:
        if op == "xor":
            word = apply_xor(word, enc)
        elif op == "dec":
            word = apply_dec(word)
        else:
            raise ValueError(f"unknown slot op {op!r}")
        out.append(word)
    return out


def check_slot_sequence(ops, item: int, p: Params) -> list[str]:
    """Check the three slot properties on one op sequence from an empty slot.

    Returns a list of violation descriptions; empty means all hold.  The
    sequence must contain at most one ``"xor"``.
    """
    words = replay(ops, raw_encode(item, p))
    problems = []
    for k, w in enumerate(words):
        if w == 0:
            problems.append(f"P1: word is 0 after op {k} ({ops[k]})")
    if not ops:
        return problems
    if ops[0] == "xor":
        for k, w in enumerate(words):
            if classify(w, p) != Valid(item):
                problems.append(f"P2: after op {k} classify({w}) != Valid({item})")
    else:
        for k, w in enumerate(words):
            if w >= 0:
                problems.append(f"P3: after op {k} word {w} is not invalid")
    return problems
