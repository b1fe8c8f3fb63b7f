import numpy as np
import pytest
from hypothesis import given, strategies as st

from xorlog.errors import ConfigError, ItemTooLarge
from xorlog.slotcodec import (EMPTY, INVALID, Valid, apply_dec, apply_xor, check_slot_sequence,
                              classify, derive_params, encode, replay, to_signed64)


def np_xor(a, b):
    # Independent route: native int64 bitwise xor.
    return int(np.int64(a) ^ np.int64(b))


def np_dec(a):
    with np.errstate(over="ignore"):
        return int(np.array([a], np.int64)[0] - np.int64(1))


@pytest.mark.parametrize("n_max,capacity,m,item_bits", [
    (3, 16, 2, 61),
    (32, 1024, 6, 57),
    (1, 1, 1, 62),
])
def test_derive_params_examples(n_max, capacity, m, item_bits):
    p = derive_params(n_max, capacity)
    assert (p.m, p.item_bits, p.capacity, p.word_bits) == (m, item_bits, capacity, 64)
    assert (1 << p.m) - 1 >= p.n_max


@pytest.mark.parametrize("n_max", range(1, 300))
def test_m_is_ceil_log2(n_max):
    p = derive_params(n_max, 1)
    assert 2 ** (p.m - 1) < n_max + 1 <= 2 ** p.m


@pytest.mark.parametrize("n_max,capacity", [(0, 4), (-1, 4), (2, 0), (1 << 62, 4)])
def test_derive_params_rejects(n_max, capacity):
    with pytest.raises(ConfigError):
        derive_params(n_max, capacity)


def test_derive_params_largest_writer_count():
    p = derive_params((1 << 62) - 1, 1)
    assert p.item_bits == 1


def test_encode_examples():
    p2 = derive_params(3, 4)
    p1 = derive_params(1, 4)
    assert encode(5, p2) == 23
    assert encode(0, p2) == 3
    assert encode(0, p1) == 1


def test_encode_rejects_wide_items():
    p = derive_params(3, 4)
    assert encode(p.max_item, p) > 0
    with pytest.raises(ItemTooLarge):
        encode(p.max_item + 1, p)
    with pytest.raises(ItemTooLarge):
        encode(-1, p)


def test_classify_examples():
    p = derive_params(3, 4)
    assert classify(23, p) == Valid(5)
    assert classify(0, p) is EMPTY
    assert classify(-1, p) is INVALID
    twice = replay(["xor", "dec", "dec"], encode(5, p))[-1]
    assert twice == 21
    assert classify(21, p) == Valid(5)


@pytest.mark.parametrize("w,e,expected", [(0, 23, 23), (-2, 23, -23), (-1, 23, -24)])
def test_apply_xor_examples(w, e, expected):
    assert np_xor(w, e) == expected
    assert apply_xor(w, e) == expected


@pytest.mark.parametrize("w,expected", [(0, -1), (23, 22), (-22, -23)])
def test_apply_dec_examples(w, expected):
    assert apply_dec(w) == expected


words = st.integers(-(1 << 63), (1 << 63) - 1)


@given(words, words)
def test_apply_xor_matches_int64(a, b):
    assert apply_xor(a, b) == np_xor(a, b)


@given(words)
def test_apply_dec_matches_int64(a):
    assert apply_dec(a) == np_dec(a)


@given(st.integers(1, 64), st.data())
def test_round_trip(n_max, data):
    p = derive_params(n_max, 1)
    item = data.draw(st.integers(0, p.max_item))
    assert classify(encode(item, p), p) == Valid(item)


@given(st.integers(1, 64), st.data())
def test_sign_bit_stability(n_max, data):
    p = derive_params(n_max, 1)
    e = encode(data.draw(st.integers(0, p.max_item)), p)
    w = data.draw(words.filter(lambda v: v != 0))
    assert (apply_xor(w, e) < 0) == (w < 0)


@pytest.mark.parametrize("n_max", range(1, 17))
def test_contention_budget(n_max):
    p = derive_params(n_max, 1)
    for item in (0, 1, p.max_item):
        w = encode(item, p)
        for _ in range(n_max - 1):
            w = apply_dec(w)
        assert w >= 1
        assert w & p.contention_mask >= 1
        assert classify(w, p) == Valid(item)


def exhaustive_sequences(max_n=8):
    for n_max in range(1, max_n + 1):
        p = derive_params(n_max, 1)
        for k in range(n_max):
            for item in (0, 1, p.max_item):
                for pos in range(k + 1):
                    ops = ["dec"] * k
                    ops.insert(pos, "xor")
                    yield p, item, ops


def test_exhaustive_slot_properties():
    count = 0
    for p, item, ops in exhaustive_sequences():
        assert check_slot_sequence(ops, item, p) == [], (p.n_max, item, ops)
        count += 1
    # sum over n of 3 * n(n+1)/2
    assert count == 3 * sum(n * (n + 1) // 2 for n in range(1, 9))


def test_slot_property_checker_detects_missing_contention_bits():
    p = derive_params(3, 1)
    # dec-only and xor-only sequences are fine; a fourth decrement would not be.
    assert check_slot_sequence(["xor", "dec", "dec", "dec"], 0, p) != []


def test_to_signed64_wraps():
    assert to_signed64(1 << 63) == -(1 << 63)
    assert to_signed64(-1) == -1
    assert to_signed64((1 << 64) - 1) == -1


def test_all_ones_item_is_reserved():
    p = derive_params(3, 4)
    assert p.max_item == p.item_mask - 1
    with pytest.raises(ItemTooLarge):
        encode(p.item_mask, p)


@pytest.mark.parametrize("n_max", range(3, 41))
def test_all_ones_item_would_break_invalid_slots(n_max):
    # Two sealers around the owner's xor wrap the sign bit.
    p = derive_params(n_max, 1)
    problems = check_slot_sequence(["dec", "xor", "dec"], p.item_mask, p)
    assert any(s.startswith("P3") for s in problems)
    assert check_slot_sequence(["dec", "xor", "dec"], p.max_item, p) == []
