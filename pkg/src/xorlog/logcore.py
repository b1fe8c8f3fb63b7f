"""The shared concurrent log.

:class:`Log` records items with atomic xor, seals skipped slots with atomic
decrement and hands out slot indices with fetch-and-increment.  Readers are
wait-free: they read the counter once and never scan past it.

Typical use, one handle per thread::

    log = Log.create(n_max=4, capacity=1 << 16)
    h = log.register()
    log.append(h, 42)
    log.poll(h)        # [42]
    log.snapshot()     # [42]
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

import numpy as np

from . import kernels as K
from .errors import CapacityExhausted, ConfigError, TooManyHandles
from .slotcodec import Params, SlotState, check_item, classify, derive_params


class Handle:
    """Per-thread state: id, read cursor and backfill watermark.

    A handle must not be used by two threads at the same time.  Its fields live
    in a small int64 array so the compiled kernels can update them in place.
    """

    __slots__ = ("state", "_log_id")

    def __init__(self, tid: int, log_id: int):
        self.state = np.zeros(K.H_SIZE, np.int64)
        self.state[K.H_TID] = tid
        self.state[K.H_WATERMARK] = -1
        self._log_id = log_id

    @property
    def tid(self) -> int:
        return int(self.state[K.H_TID])

    @property
    def cursor(self) -> int:
        return int(self.state[K.H_CURSOR])

    @property
    def watermark(self) -> int:
        return int(self.state[K.H_WATERMARK])

    @property
    def appends(self) -> int:
        return int(self.state[K.H_APPENDS])

    @property
    def failed_records(self) -> int:
        """Recording attempts that lost their slot to a decrement (or CAS)."""
        return int(self.state[K.H_FAILED])

    @property
    def fetches(self) -> int:
        return int(self.state[K.H_FETCHES])

    def __repr__(self):
        return f"Handle(tid={self.tid}, cursor={self.cursor}, watermark={self.watermark})"


@dataclass(frozen=True)
class AppendOutcome:
    slot: int


@dataclass(frozen=True)
class ScanResult:
    """Raw result of one bounded traversal.

    ``bound`` is the counter value read at the start, ``stop`` the first
    index not consumed, and ``reads`` the number of slot reads performed.
    """

    items: np.ndarray
    slots: np.ndarray
    stop: int
    reads: int
    bound: int


class Log:
    """Lock-free log over a fixed array of 64-bit slots.

    ``xor_mode`` selects how an appender learns that its xor lost the slot:
    ``"reread"`` loads the slot after a plain xor (native ``lock xor`` on
    x86-64), ``"fetch"`` inspects the prior word returned by a fetch-xor.
    """

    impl = "xordec"

    def __init__(self, params: Params, xor_mode: str = "reread"):
        if xor_mode not in ("reread", "fetch"):
            raise ConfigError(f"unknown xor_mode {xor_mode!r}")
        self.params = params
        self.xor_mode = xor_mode
        # Counter padded to its own cache line.
        self.counter = np.zeros(8, np.int64)
        self.slots = np.zeros(params.capacity, np.int64)
        self._registered = np.zeros(8, np.int64)
        self._mask = params.item_mask
        self._cm = params.contention_mask

    @classmethod
    def create(cls, n_max: int, capacity: int, **kwargs) -> "Log":
        return cls(derive_params(n_max, capacity), **kwargs)

    @property
    def kernel_impl(self) -> int:
        return K.IMPL_XOR_FETCH if self.xor_mode == "fetch" else K.IMPL_XOR_REREAD

    def _append_kernel(self):
        return K.xd_append_fetch if self.xor_mode == "fetch" else K.xd_append

    def register(self) -> Handle:
        tid = int(K.fetch_inc(self._registered, 0))
        if tid >= self.params.n_max:
            raise TooManyHandles(f"log allows at most {self.params.n_max} handles")
        return Handle(tid, id(self))

    def _check_handle(self, h: Handle):
        if h._log_id != id(self):
            raise ConfigError("handle was not registered on this log")

    def append(self, h: Handle, item: int) -> AppendOutcome:
        self._check_handle(h)
        check_item(item, self.params)
        enc = (item << self.params.m) | self._cm
        slot = int(self._append_kernel()(self.counter, self.slots, h.state, enc))
        if slot < 0:
            raise CapacityExhausted(
                f"slot index reached capacity {self.params.capacity}")
        return AppendOutcome(slot)

    def scan(self, start: int = 0) -> ScanResult:
        items, idx, stop, reads, bound = K.scan(
            self.counter, self.slots, start, self.params.m, self._mask)
        return ScanResult(items, idx, int(stop), int(reads), int(bound))

    def snapshot(self) -> list[int]:
        """All recorded items in log order, as of a point during the call."""
        return self.scan(0).items.tolist()

    def poll_scan(self, h: Handle) -> ScanResult:
        self._check_handle(h)
        res = self.scan(h.cursor)
        h.state[K.H_CURSOR] = res.stop
        return res

    def poll(self, h: Handle) -> list[int]:
        """Items recorded since this handle's previous poll."""
        return self.poll_scan(h).items.tolist()

    @property
    def counter_value(self) -> int:
        return int(K.load_word(self.counter, 0))

    def words(self) -> np.ndarray:
        """Copy of the raw slot words, read one atomic load at a time."""
        return K.read_words(self.slots)

    def states(self) -> list[SlotState]:
        return [classify(int(w), self.params) for w in self.words()]

    def final_order(self) -> list[int]:
        """Items of all valid slots by index; meaningful at quiescence."""
        w = self.words()
        return ((w[w > 0] >> self.params.m) & self._mask).tolist()


def run_threads(targets, *, start_barrier: bool = True) -> None:
    """Run callables on their own threads, released together, and join them.

    Exceptions raised on a worker are re-raised in the caller.
    """
    errors: list[BaseException] = []
    barrier = threading.Barrier(len(targets)) if start_barrier and targets else None

    def wrap(fn):
        def run():
            try:
                if barrier is not None:
                    barrier.wait()
                fn()
            except BaseException as exc:  # noqa: BLE001
                errors.append(exc)
                if barrier is not None:
                    barrier.abort()
        return run

    threads = [threading.Thread(target=wrap(fn)) for fn in targets]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    real = [e for e in errors if not isinstance(e, threading.BrokenBarrierError)]
    if real or errors:
        raise (real or errors)[0]
