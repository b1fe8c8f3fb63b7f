"""Operation histories and the consistency oracle for the log.

Items are assumed unique (the harnesses tag them with thread id and sequence
number), which lets every rule run in near-linear time instead of searching
over linearization orders:

R1  every recorded append appears exactly once in the final order and no
    failed append appears;
R2  an append that responded before another was invoked precedes it;
R3  every snapshot result is a prefix of the final order;
R4  the concatenated polls of each thread form a prefix of the final order;
R5  a read includes every append that responded before the read was invoked.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np

APPEND = "append"
SNAPSHOT = "snapshot"
POLL = "poll"
INV = "inv"
RESP = "resp"


@dataclass(frozen=True)
class Event:
    seq: int
    thread: int
    op: str
    phase: str
    payload: object = None
    ok: bool = True

    def __str__(self):
        tail = "" if self.ok else " FAILED"
        return f"#{self.seq} t{self.thread} {self.op} {self.phase} {self.payload!r}{tail}"


@dataclass(frozen=True)
class Verdict:
    passed: bool
    rule: str | None = None
    detail: str = ""
    witness: tuple[str, ...] = ()
    stats: dict = field(default_factory=dict, compare=False)

    def __bool__(self):
        return self.passed

    def report(self) -> str:
        if self.passed:
            return "PASS"
        lines = [f"FAIL {self.rule}: {self.detail}"]
        lines.extend(self.witness)
        return "\n".join(lines)


class HistoryError(ValueError):
    """Malformed history (overlapping operations, bad sequence numbers)."""


class History:
    """Completed operations with invocation/response sequence numbers.

    Appends and reads are stored column-wise so stress runs with hundreds of
    thousands of operations can be checked quickly.  A pending append (one
    that never responded) has ``resp = -1``.
    """

    def __init__(self):
        self._a_thread: list[int] = []
        self._a_item: list[int] = []
        self._a_inv: list[int] = []
        self._a_resp: list[int] = []
        self._a_ok: list[bool] = []
        self._chunks: list[dict] = []
        self.reads: list[dict] = []

    # -- building -------------------------------------------------------
    def add_append(self, thread: int, item: int, inv: int, resp: int, ok: bool = True):
        self._a_thread.append(thread)
        self._a_item.append(item)
        self._a_inv.append(inv)
        self._a_resp.append(resp)
        self._a_ok.append(ok)

    def add_appends(self, thread, item, inv, resp, ok):
        """Bulk variant of :meth:`add_append` taking equal-length arrays."""
        n = len(item)
        self._chunks.append({
            "thread": np.broadcast_to(np.asarray(thread, np.int64), (n,)).copy(),
            "item": np.asarray(item, np.int64),
            "inv": np.asarray(inv, np.int64),
            "resp": np.asarray(resp, np.int64),
            "ok": np.asarray(ok, bool),
        })

    def add_read(self, thread: int, kind: str, inv: int, resp: int, items: Sequence[int]):
        if kind not in (SNAPSHOT, POLL):
            raise HistoryError(f"unknown read kind {kind!r}")
        self.reads.append({"thread": thread, "kind": kind, "inv": inv, "resp": resp,
                           "items": np.asarray(items, np.int64)})

    @classmethod
    def from_events(cls, events: Iterable[Event]) -> "History":
        h = cls()
        open_ops: dict[int, Event] = {}
        last_seq = None
        for ev in events:
            if last_seq is not None and ev.seq <= last_seq:
                raise HistoryError(f"sequence numbers must increase at {ev}")
            last_seq = ev.seq
            if ev.phase == INV:
                if ev.thread in open_ops:
                    raise HistoryError(f"thread {ev.thread} invoked twice: {ev}")
                open_ops[ev.thread] = ev
            elif ev.phase == RESP:
                start = open_ops.pop(ev.thread, None)
                if start is None or start.op != ev.op:
                    raise HistoryError(f"response without matching invocation: {ev}")
                if ev.op == APPEND:
                    h.add_append(ev.thread, start.payload, start.seq, ev.seq, ev.ok)
                else:
                    h.add_read(ev.thread, ev.op, start.seq, ev.seq, tuple(ev.payload))
            else:
                raise HistoryError(f"unknown phase {ev.phase!r}")
        for ev in open_ops.values():
            if ev.op == APPEND:
                h.add_append(ev.thread, ev.payload, ev.seq, -1, True)
        return h

    # -- views ----------------------------------------------------------
    def appends(self) -> dict[str, np.ndarray]:
        cols = {
            "thread": np.asarray(self._a_thread, np.int64),
            "item": np.asarray(self._a_item, np.int64),
            "inv": np.asarray(self._a_inv, np.int64),
            "resp": np.asarray(self._a_resp, np.int64),
            "ok": np.asarray(self._a_ok, bool),
        }
        if self._chunks:
            for key in cols:
                cols[key] = np.concatenate([cols[key]] + [c[key] for c in self._chunks])
        return cols

    def __len__(self):
        return len(self._a_item) + sum(len(c["item"]) for c in self._chunks) + len(self.reads)

    def events(self) -> Iterator[Event]:
        """Events in sequence order (pending appends yield only an invocation)."""
        out = []
        a = self.appends()
        for t, x, i, r, ok in zip(a["thread"], a["item"], a["inv"], a["resp"], a["ok"]):
            out.append(Event(int(i), int(t), APPEND, INV, int(x)))
            if r >= 0:
                out.append(Event(int(r), int(t), APPEND, RESP, int(x), bool(ok)))
        for rd in self.reads:
            out.append(Event(rd["inv"], rd["thread"], rd["kind"], INV))
            out.append(Event(rd["resp"], rd["thread"], rd["kind"], RESP,
                             tuple(rd["items"].tolist())))
        out.sort(key=lambda e: e.seq)
        return iter(out)


def _fmt_append(a, k):
    state = "ok" if a["ok"][k] else "failed"
    resp = int(a["resp"][k])
    return (f"append t{int(a['thread'][k])} item={int(a['item'][k])} "
            f"inv=#{int(a['inv'][k])} resp=#{resp if resp >= 0 else 'pending'} {state}")


def _fmt_read(rd, limit=8):
    items = rd["items"].tolist()
    shown = items if len(items) <= limit else items[:limit] + ["..."]
    return (f"{rd['kind']} t{rd['thread']} inv=#{rd['inv']} resp=#{rd['resp']} "
            f"len={len(items)} items={shown}")


def _fail(rule, detail, witness, stats):
    return Verdict(False, rule, detail, tuple(witness), stats)


def check_history(history: History, final_order: Sequence[int]) -> Verdict:
    """Judge ``history`` against the compacted final log contents."""
    final = np.asarray(final_order, np.int64)
    a = history.appends()
    n_final = len(final)
    stats = {"appends": int(len(a["item"])), "reads": len(history.reads), "final": n_final}

    # R1: uniqueness and membership.
    uniq, counts = np.unique(final, return_counts=True)
    if np.any(counts > 1):
        dup = int(uniq[np.argmax(counts > 1)])
        return _fail("R1", f"item {dup} appears more than once in the final order",
                     [f"final position(s) {np.flatnonzero(final == dup).tolist()}"], stats)
    sorter = np.argsort(final, kind="stable")
    sorted_final = final[sorter]

    def positions(items):
        if n_final == 0:
            return np.full(len(items), -1, np.int64)
        idx = np.searchsorted(sorted_final, items)
        idx_c = np.minimum(idx, n_final - 1)
        hit = sorted_final[idx_c] == items
        return np.where(hit, sorter[idx_c], -1)

    a_items, a_uniq_counts = np.unique(a["item"], return_counts=True)
    if np.any(a_uniq_counts > 1):
        dup = int(a_items[np.argmax(a_uniq_counts > 1)])
        return _fail("R1", f"item {dup} was appended more than once; items must be unique",
                     [], stats)
    pos = positions(a["item"])
    done_ok = a["ok"] & (a["resp"] >= 0)
    missing = np.flatnonzero(done_ok & (pos < 0))
    if len(missing):
        k = int(missing[0])
        return _fail("R1", "recorded append missing from the final order",
                     [_fmt_append(a, k)], stats)
    ghost = np.flatnonzero(~a["ok"] & (pos >= 0))
    if len(ghost):
        k = int(ghost[0])
        return _fail("R1", "failed append present in the final order",
                     [_fmt_append(a, k), f"final position {int(pos[k])}"], stats)
    known = np.isin(final, a["item"])
    if not np.all(known):
        p = int(np.argmin(known))
        return _fail("R1", f"final order holds item {int(final[p])} that nobody appended",
                     [f"final position {p}"], stats)

    # R2: real-time order between appends, via a suffix minimum over positions.
    present = np.flatnonzero(pos >= 0)
    order = present[np.argsort(pos[present])]
    resp_by_pos = np.where(a["resp"][order] >= 0, a["resp"][order], np.iinfo(np.int64).max)
    if len(order) > 1:
        rev_min = np.minimum.accumulate(resp_by_pos[::-1])[::-1]
        after_min = np.append(rev_min[1:], np.iinfo(np.int64).max)
        bad = np.flatnonzero(after_min < a["inv"][order])
        if len(bad):
            y = int(order[bad[0]])
            later = order[bad[0] + 1:]
            x = int(later[np.argmin(resp_by_pos[bad[0] + 1:])])
            return _fail("R2", "append ordered before one that finished before it started",
                         [_fmt_append(a, x) + f" final_pos={int(pos[x])}",
                          _fmt_append(a, y) + f" final_pos={int(pos[y])}"], stats)

    # Prefix bound per read: appends finished before invocation must be covered.
    fin_mask = done_ok & (pos >= 0)
    fin_resp = a["resp"][fin_mask]
    fin_pos = pos[fin_mask]
    fin_idx = np.flatnonzero(fin_mask)
    by_resp = np.argsort(fin_resp, kind="stable")
    fin_resp_sorted = fin_resp[by_resp]
    prefmax = np.maximum.accumulate(fin_pos[by_resp]) if len(by_resp) else fin_pos
    prefarg = np.zeros(len(by_resp), np.int64)
    if len(by_resp):
        # Index (into by_resp) where the running maximum was attained.
        running = fin_pos[by_resp]
        is_new = np.concatenate(([True], running[1:] > prefmax[:-1]))
        prefarg = np.maximum.accumulate(np.where(is_new, np.arange(len(running)), 0))

    def required(inv):
        k = int(np.searchsorted(fin_resp_sorted, inv))
        if k == 0:
            return 0, None
        return int(prefmax[k - 1]) + 1, int(fin_idx[by_resp[prefarg[k - 1]]])

    # R3 and R5 for snapshots.
    cum_poll: dict[int, int] = {}
    reads_sorted = sorted(history.reads, key=lambda r: r["inv"])
    for rd in reads_sorted:
        items = rd["items"]
        n = len(items)
        if rd["kind"] == SNAPSHOT:
            if n > n_final or not np.array_equal(items, final[:n]):
                mism = _first_mismatch(items, final)
                return _fail("R3", f"snapshot is not a prefix of the final order "
                                   f"(first mismatch at position {mism})",
                             [_fmt_read(rd), f"final[:{n}] head={final[:8].tolist()}"], stats)
            covered = n
        else:
            start = cum_poll.get(rd["thread"], 0)
            end = start + n
            if end > n_final or not np.array_equal(items, final[start:end]):
                mism = start + _first_mismatch(items, final[start:])
                return _fail("R4", f"polls of thread {rd['thread']} diverge from the final "
                                   f"order at position {mism}",
                             [_fmt_read(rd), f"cumulative poll length before: {start}"], stats)
            cum_poll[rd["thread"]] = end
            covered = end
        need, who = required(rd["inv"])
        if covered < need:
            return _fail("R5", "read misses an append that finished before it started",
                         [_fmt_append(a, who) + f" final_pos={int(pos[who])}",
                          _fmt_read(rd) + f" covers={covered}"], stats)
    return Verdict(True, stats=stats)


def _first_mismatch(items: np.ndarray, ref: np.ndarray) -> int:
    n = min(len(items), len(ref))
    diff = np.flatnonzero(items[:n] != ref[:n])
    return int(diff[0]) if len(diff) else n
