import pytest
from hypothesis import given, strategies as st

from xorlog.checker.history import (APPEND, INV, POLL, RESP, SNAPSHOT, Event, History,
                                    HistoryError, check_history)


def seq_history(items):
    h = History()
    t = 0
    for x in items:
        h.add_append(0, x, t, t + 1)
        t += 2
    return h, t


def test_sequential_history_passes():
    h, t = seq_history([1, 2, 3])
    h.add_read(1, SNAPSHOT, t, t + 1, [1, 2, 3])
    v = check_history(h, [1, 2, 3])
    assert v.passed and v.report() == "PASS"


def test_r1_missing_duplicate_ghost_unknown():
    h, _ = seq_history([1, 2])
    assert check_history(h, [1]).rule == "R1"
    assert check_history(h, [1, 2, 2]).rule == "R1"
    assert check_history(h, [1, 2, 9]).rule == "R1"
    g = History()
    g.add_append(0, 4, 0, 1, ok=False)
    assert check_history(g, [4]).rule == "R1"
    assert check_history(g, []).passed


def test_r1_pending_append_may_or_may_not_appear():
    h = History()
    h.add_append(0, 4, 0, -1)
    assert check_history(h, []).passed
    assert check_history(h, [4]).passed


def test_r2_real_time_order():
    h, _ = seq_history([1, 2])
    v = check_history(h, [2, 1])
    assert v.rule == "R2" and len(v.witness) == 2


def test_overlapping_appends_any_order():
    h = History()
    h.add_append(0, 1, 0, 3)
    h.add_append(1, 2, 1, 2)
    assert check_history(h, [1, 2]).passed
    assert check_history(h, [2, 1]).passed


def test_r3_snapshot_prefix():
    h, t = seq_history([1, 2])
    h.add_read(1, SNAPSHOT, t, t + 1, [2])
    assert check_history(h, [1, 2]).rule == "R3"


def test_r4_polls_concatenate_to_prefix():
    h, t = seq_history([1, 2, 3])
    # Both polls overlap the appends, so only the prefix rule applies.
    h.add_read(1, POLL, 0, t, [1])
    h.add_read(1, POLL, t + 1, t + 2, [3])
    v = check_history(h, [1, 2, 3])
    assert v.rule == "R4"
    ok, t = seq_history([1, 2, 3])
    ok.add_read(1, POLL, 0, t, [1, 2])
    ok.add_read(1, POLL, t + 2, t + 3, [3])
    ok.add_read(2, POLL, t + 4, t + 5, [1, 2, 3])
    assert check_history(ok, [1, 2, 3]).passed


def test_r5_read_sees_completed_appends():
    h, t = seq_history([1, 2])
    h.add_read(1, SNAPSHOT, t, t + 1, [1])
    v = check_history(h, [1, 2])
    assert v.rule == "R5"
    # A read that overlaps the second append may miss it.
    o = History()
    o.add_append(0, 1, 0, 1)
    o.add_append(0, 2, 2, 5)
    o.add_read(1, SNAPSHOT, 3, 4, [1])
    assert check_history(o, [1, 2]).passed


def test_from_events_round_trip():
    evs = [
        Event(0, 0, APPEND, INV, 7),
        Event(1, 1, SNAPSHOT, INV),
        Event(2, 0, APPEND, RESP, 7),
        Event(3, 1, SNAPSHOT, RESP, (7,)),
        Event(4, 0, APPEND, INV, 8),
    ]
    h = History.from_events(evs)
    assert [str(e) for e in h.events()] == [str(e) for e in evs]
    assert check_history(h, [7]).passed


@pytest.mark.parametrize("evs", [
    [Event(1, 0, APPEND, INV, 1), Event(0, 0, APPEND, RESP, 1)],
    [Event(0, 0, APPEND, INV, 1), Event(1, 0, APPEND, INV, 2)],
    [Event(0, 0, APPEND, RESP, 1)],
    [Event(0, 0, APPEND, "bogus", 1)],
])
def test_malformed_events(evs):
    with pytest.raises(HistoryError):
        History.from_events(evs)


def test_bulk_appends_match_single():
    a, b = History(), History()
    for k in range(5):
        a.add_append(3, k, 2 * k, 2 * k + 1)
    b.add_appends(3, list(range(5)), [0, 2, 4, 6, 8], [1, 3, 5, 7, 9], [True] * 5)
    assert {k: v.tolist() for k, v in a.appends().items()} == \
        {k: v.tolist() for k, v in b.appends().items()}
    assert len(b) == 5


@given(st.lists(st.integers(0, 1 << 40), unique=True, max_size=30), st.data())
def test_sequential_histories_with_prefix_reads_pass(items, data):
    h, t = seq_history(items)
    k = data.draw(st.integers(0, len(items)))
    # A read overlapping everything may return any prefix.
    h.add_read(1, SNAPSHOT, 0, t + 1, items[:k])
    h.add_read(2, SNAPSHOT, t + 2, t + 3, items)
    assert check_history(h, items).passed


@given(st.lists(st.integers(0, 1000), unique=True, min_size=2, max_size=20), st.data())
def test_swapped_sequential_order_fails(items, data):
    h, _ = seq_history(items)
    i = data.draw(st.integers(0, len(items) - 2))
    bad = items[:]
    bad[i], bad[i + 1] = bad[i + 1], bad[i]
    assert check_history(h, bad).rule == "R2"
