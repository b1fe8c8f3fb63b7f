"""Hot loops over the shared counter and slot array.

Every function here is written against :mod:`xorlog.atomics` and compiled with
``numba.njit(nogil=True)`` unless numba is disabled, in which case it runs as
ordinary Python.  Threads calling the jitted versions run without the GIL.

Shared state is passed as numpy arrays:

* ``counter``: int64 array, the fetch-and-increment counter lives at index 0.
* ``slots``: int64 array of slot words.
* ``h``: int64 handle record, indexed by the ``H_*`` constants.

Append kernels return the recorded slot index, or -1 once the counter has run
past the end of ``slots``.
"""

import ctypes

import numpy as np

from ._accel import jit
from .atomics import cas, dec, fetch_add, fetch_xor, load, xor

H_TID = 0
H_CURSOR = 1
H_WATERMARK = 2
H_APPENDS = 3
H_FAILED = 4
H_FETCHES = 5
H_SIZE = 8

IMPL_XOR_REREAD = 0
IMPL_XOR_FETCH = 1
IMPL_CAS = 2

REC_KIND = 0
REC_INV = 1
REC_RESP = 2
REC_OFF = 3
REC_LEN = 4
REC_BOUND = 5
REC_READS = 6
REC_STOP = 7
REC_SIZE = 8

KIND_POLL = 0
KIND_SNAPSHOT = 1

# Callable from Python and from nopython code alike; releases the GIL.
sched_yield = ctypes.CDLL(None, use_errno=True).sched_yield
sched_yield.restype = ctypes.c_int
sched_yield.argtypes = []


@jit
def load_word(arr, i):
    return load(arr, i)


@jit
def fetch_inc(arr, i):
    return fetch_add(arr, i, 1)


@jit
def read_words(slots):
    out = np.empty(slots.shape[0], np.int64)
    for i in range(slots.shape[0]):
        out[i] = load(slots, i)
    return out


@jit
def _backfill_dec(slots, h, ell):
    # Seal every still-empty slot below ell; the watermark bounds the pass.
    j = ell - 1
    low = h[H_WATERMARK]
    while j > low:
        if load(slots, j) == 0:
            dec(slots, j)
        j -= 1
    if ell > h[H_WATERMARK]:
        h[H_WATERMARK] = ell
    h[H_APPENDS] += 1


@jit
def xd_append(counter, slots, h, enc):
    """Record ``enc`` with xor, detecting failure by re-reading the slot."""
    cap = slots.shape[0]
    while True:
        ell = fetch_add(counter, 0, 1)
        h[H_FETCHES] += 1
        if ell >= cap:
            return -1
        xor(slots, ell, enc)
        # Sign is fixed by whether a decrement landed first; later
        # decrements only eat contention bits.
        if load(slots, ell) > 0:
            break
        h[H_FAILED] += 1
    _backfill_dec(slots, h, ell)
    return ell


@jit
def xd_append_fetch(counter, slots, h, enc):
    """Same as :func:`xd_append` but reads the prior word from a fetch-xor."""
    cap = slots.shape[0]
    while True:
        ell = fetch_add(counter, 0, 1)
        h[H_FETCHES] += 1
        if ell >= cap:
            return -1
        if fetch_xor(slots, ell, enc) == 0:
            break
        h[H_FAILED] += 1
    _backfill_dec(slots, h, ell)
    return ell


@jit
def cas_append(counter, slots, h, enc):
    """Control implementation: record with CAS 0 -> enc, seal with CAS 0 -> -1."""
    cap = slots.shape[0]
    while True:
        ell = fetch_add(counter, 0, 1)
        h[H_FETCHES] += 1
        if ell >= cap:
            return -1
        if cas(slots, ell, 0, enc) == 0:
            break
        h[H_FAILED] += 1
    j = ell - 1
    low = h[H_WATERMARK]
    while j > low:
        if load(slots, j) == 0:
            cas(slots, j, 0, -1)
        j -= 1
    if ell > h[H_WATERMARK]:
        h[H_WATERMARK] = ell
    h[H_APPENDS] += 1
    return ell


@jit
def append_any(counter, slots, h, enc, impl):
    if impl == IMPL_CAS:
        return cas_append(counter, slots, h, enc)
    if impl == IMPL_XOR_FETCH:
        return xd_append_fetch(counter, slots, h, enc)
    return xd_append(counter, slots, h, enc)


@jit
def scan_core(slots, start, bound, m, mask, out_items, out_idx, off, store):
    """Read slots from ``start`` until an empty one or ``bound``.

    Returns ``(n_items, stop, reads)``; ``stop`` is the first index not
    consumed and becomes the next cursor for a poll.
    """
    i = start
    n = 0
    reads = 0
    while i < bound:
        w = load(slots, i)
        reads += 1
        if w == 0:
            break
        if w > 0:
            if store:
                out_items[off + n] = (w >> m) & mask
                if out_idx.shape[0] > 0:
                    out_idx[off + n] = i
            n += 1
        i += 1
    return n, i, reads


@jit
def scan(counter, slots, start, m, mask):
    """Bounded traversal: read the counter once, then scan from ``start``."""
    l = load(counter, 0)
    bound = min(l, slots.shape[0])
    size = max(bound - start, 0)
    items = np.empty(size, np.int64)
    idx = np.empty(size, np.int64)
    n, stop, reads = scan_core(slots, start, bound, m, mask, items, idx, 0, True)
    return items[:n], idx[:n], max(stop, start), reads, l


@jit(cache=False)
def stress_appender(counter, slots, h, items, impl, m, ticket, inv, resp, out_slot, finished, spins):
    """Append ``items`` in order, stamping invocation/response tickets.

    After op ``k`` the thread yields the CPU if ``spins[k] < 0``, otherwise it
    spins for ``spins[k]`` counter reads.
    """
    cm = (1 << m) - 1
    for k in range(items.shape[0]):
        enc = (items[k] << m) | cm
        inv[k] = fetch_add(ticket, 0, 1)
        s = append_any(counter, slots, h, enc, impl)
        resp[k] = fetch_add(ticket, 0, 1)
        out_slot[k] = s
        if s < 0:
            break
        if spins[k] < 0:
            sched_yield()
        for _ in range(spins[k]):
            load(counter, 0)
    fetch_add(finished, 0, 1)


@jit(cache=False)
def stress_reader(counter, slots, h, m, mask, ticket, finished, n_appenders,
                  rec, poll_buf, snap_buf, snap_stride, max_snaps):
    """Poll continuously until every appender has finished, plus one last op.

    Every ``snap_stride`` counter advances (up to ``max_snaps`` times) a full
    snapshot is taken instead of a poll.  Returns
    ``(n_records, poll_items, snap_items)``.
    """
    cap = slots.shape[0]
    dummy = np.empty(0, np.int64)
    nrec = 0
    poll_off = 0
    snap_off = 0
    snaps = 0
    last_snap = -snap_stride
    while True:
        fin = load(finished, 0)
        seen = load(counter, 0)
        take_snap = (snaps < max_snaps and seen - last_snap >= snap_stride
                     and snap_off + cap <= snap_buf.shape[0])
        inv = fetch_add(ticket, 0, 1)
        l = load(counter, 0)
        bound = min(l, cap)
        if take_snap:
            n, stop, reads = scan_core(slots, 0, bound, m, mask, snap_buf, dummy, snap_off, True)
            kind = KIND_SNAPSHOT
            off = snap_off
            snap_off += n
            snaps += 1
            last_snap = seen
        else:
            start = h[H_CURSOR]
            n, stop, reads = scan_core(slots, start, bound, m, mask, poll_buf, dummy, poll_off, True)
            if stop > start:
                h[H_CURSOR] = stop
            kind = KIND_POLL
            off = poll_off
            poll_off += n
        resp = fetch_add(ticket, 0, 1)
        # A run of empty polls is dominated by its last member for every
        # history rule, so only the latest one is kept.
        if (kind == KIND_POLL and n == 0 and nrec > 0
                and rec[nrec - 1, REC_KIND] == KIND_POLL and rec[nrec - 1, REC_LEN] == 0):
            nrec -= 1
        r = rec[nrec]
        r[REC_KIND] = kind
        r[REC_INV] = inv
        r[REC_RESP] = resp
        r[REC_OFF] = off
        r[REC_LEN] = n
        r[REC_BOUND] = l
        r[REC_READS] = reads
        r[REC_STOP] = stop
        nrec += 1
        if fin >= n_appenders:
            break
        if n == 0:
            sched_yield()
    return nrec, poll_off, snap_off


@jit
def bench_worker(counter, slots, h, is_poll, impl, m, mask):
    """Run one thread's operation mix; returns ``(appends, polls, exhausted)``."""
    cm = (1 << m) - 1
    dummy = np.empty(0, np.int64)
    cap = slots.shape[0]
    tid = h[H_TID]
    appends = 0
    polls = 0
    for k in range(is_poll.shape[0]):
        if is_poll[k]:
            l = load(counter, 0)
            start = h[H_CURSOR]
            n, stop, reads = scan_core(slots, start, min(l, cap), m, mask, dummy, dummy, 0, False)
            if stop > start:
                h[H_CURSOR] = stop
            polls += 1
        else:
            item = ((tid << 40) | k) & mask
            if append_any(counter, slots, h, (item << m) | cm, impl) < 0:
                return appends, polls, 1
            appends += 1
    return appends, polls, 0
