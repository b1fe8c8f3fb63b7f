import pytest
from hypothesis import given, settings, strategies as st

from xorlog import CapacityExhausted, Log
from xorlog.logcore import run_threads
from xorlog.slotcodec import to_signed64
from xorlog.universal import CounterMachine, Replica, fold


def test_invoke_returns_state_after_command():
    log = Log.create(n_max=1, capacity=4)
    r = Replica(log, CounterMachine())
    assert r.invoke(5) == 5
    assert r.invoke(3) == 8
    assert r.replay_cursor == 2 and r.last_slot == 1


def test_two_replicas_converge():
    log = Log.create(n_max=2, capacity=64)
    reps = [Replica(log, CounterMachine()) for _ in range(2)]
    run_threads([lambda r=r: [r.invoke(1) for _ in range(10)] for r in reps])
    assert [r.refresh() for r in reps] == [20, 20]


def test_refresh_without_news_is_identity():
    log = Log.create(n_max=2, capacity=8)
    a, b = Replica(log, CounterMachine()), Replica(log, CounterMachine())
    assert b.refresh() == 0
    a.invoke(4)
    assert b.refresh() == 4
    assert b.refresh() == 4


def test_failed_append_applied_once():
    log = Log.create(n_max=2, capacity=8)
    a, b = Replica(log, CounterMachine()), Replica(log, CounterMachine())
    log.slots[0] = -1  # slot 0 sealed: a's first attempt is lost and retried
    assert a.invoke(4) == 4
    assert a.handle.failed_records == 1
    assert b.refresh() == 4


def test_full_log_raises():
    log = Log.create(n_max=1, capacity=1)
    r = Replica(log, CounterMachine())
    r.invoke(1)
    with pytest.raises(CapacityExhausted):
        r.invoke(2)


def test_counter_wraps():
    m = CounterMachine(initial_state=(1 << 63) - 1)
    assert m.apply(m.initial_state, 1) == -(1 << 63)
    assert fold(m, [1, 2, 3]) == to_signed64((1 << 63) + 5)


@settings(max_examples=10, deadline=None)
@given(st.lists(st.lists(st.integers(0, 1 << 40), max_size=40), min_size=1, max_size=3))
def test_return_values_match_fold_prefix(cmds):
    log = Log.create(n_max=len(cmds), capacity=sum(map(len, cmds)) * 2 + 8)
    m = CounterMachine()
    reps = [Replica(log, m) for _ in cmds]
    got = [[] for _ in cmds]

    def run(i):
        return lambda: [got[i].append((reps[i].invoke(c), reps[i].last_slot)) for c in cmds[i]]

    run_threads([run(i) for i in range(len(cmds))])
    words = log.words()
    valid = [s for s in range(len(words)) if words[s] > 0]
    order = log.final_order()
    for rows in got:
        for state, slot in rows:
            assert state == fold(m, order[: valid.index(slot) + 1])
    assert all(r.refresh() == fold(m, order) for r in reps)
