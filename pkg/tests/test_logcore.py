import numpy as np
import pytest

from xorlog import (INVALID, CapacityExhausted, ConfigError, ItemTooLarge, Log,
                    TooManyHandles, Valid)
from xorlog.logcore import run_threads


def test_docstring_example():
    log = Log.create(n_max=4, capacity=1 << 10)
    h = log.register()
    assert log.append(h, 42).slot == 0
    assert log.poll(h) == [42]
    assert log.snapshot() == [42]


def test_single_thread_program_order():
    log = Log.create(n_max=1, capacity=10)
    h = log.register()
    slots = [log.append(h, x).slot for x in range(10)]
    assert slots == list(range(10))
    assert log.final_order() == list(range(10))
    assert h.failed_records == 0 and h.appends == 10 and h.fetches == 10


def test_poll_advances_cursor():
    log = Log.create(n_max=2, capacity=8)
    a, b = log.register(), log.register()
    log.append(a, 1)
    log.append(a, 2)
    assert log.poll(b) == [1, 2]
    assert log.poll(b) == []
    log.append(a, 3)
    assert log.poll(b) == [3]
    assert b.cursor == 3


def test_scan_stops_at_empty_and_skips_invalid():
    log = Log.create(n_max=3, capacity=8)
    h = log.register()
    log.counter[0] = 3
    log.slots[1] = -1
    assert log.append(h, 9).slot == 3
    assert log.states()[:4] == [INVALID, INVALID, INVALID, Valid(9)]
    log.slots[5] = log.slots[3]
    log.counter[0] = 6
    res = log.scan()
    # Slot 4 is empty so slot 5 is not reached.
    assert res.items.tolist() == [9] and res.slots.tolist() == [3]
    assert res.stop == 4 and res.reads == 5 and res.bound == 6


def test_reader_respects_counter_bound():
    log = Log.create(n_max=2, capacity=4)
    log.slots[0] = 7
    assert log.snapshot() == []
    assert log.scan().reads == 0


def test_errors():
    log = Log.create(n_max=1, capacity=1)
    h = log.register()
    with pytest.raises(TooManyHandles):
        log.register()
    with pytest.raises(ItemTooLarge):
        log.append(h, log.params.item_mask)
    with pytest.raises(ItemTooLarge):
        log.append(h, -1)
    log.append(h, 0)
    with pytest.raises(CapacityExhausted):
        log.append(h, 1)
    other = Log.create(n_max=1, capacity=1)
    with pytest.raises(ConfigError):
        other.append(h, 0)
    with pytest.raises(ConfigError):
        Log(log.params, xor_mode="bogus")


@pytest.mark.parametrize("mode", ["reread", "fetch"])
def test_concurrent_appends_are_all_recorded(mode):
    n, per = 4, 2000
    log = Log.create(n_max=n, capacity=n * per + 4 * n + n * per // 2, xor_mode=mode)
    handles = [log.register() for _ in range(n)]

    def work(h):
        return lambda: [log.append(h, (h.tid << 20) | k) for k in range(per)]

    run_threads([work(h) for h in handles])
    final = log.final_order()
    assert sorted(final) == sorted((t << 20) | k for t in range(n) for k in range(per))
    # Per-thread program order survives in the total order.
    for t in range(n):
        mine = [x & 0xFFFFF for x in final if x >> 20 == t]
        assert mine == list(range(per))
    # At quiescence every fetched slot is either recorded or sealed.
    assert log.counter_value <= log.params.capacity
    assert np.all(log.words()[: log.counter_value] != 0)


def test_run_threads_reraises():
    def boom():
        raise RuntimeError("x")

    with pytest.raises(RuntimeError):
        run_threads([boom, lambda: None])
