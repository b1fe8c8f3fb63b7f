"""Exhaustive interleaving explorer over the log's atomic steps.

One step is one atomic instruction on shared memory (fetch-and-increment,
xor, decrement, compare-and-swap or read); local computation is free.  An
operation's invocation is attached to its first step and its response to its
last, which gives the tightest real-time intervals and therefore the
strongest history checks.

States are hashed, so each reachable state is expanded once; the number of
complete schedules is still counted exactly by summing over successors.
Every edge is checked against the per-slot and per-thread invariants, and
every terminal state's history goes through :func:`check_history`.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass

from ..errors import ConfigTooLarge
from ..slotcodec import apply_dec, apply_xor, derive_params, encode, extract_item
from .history import APPEND, INV, POLL, RESP, SNAPSHOT, Event, History, Verdict, check_history

MAX_THREADS = 3
MAX_APPENDS = 3
MAX_READERS = 1
MAX_READER_OPS = 3
MAX_CAPACITY = 16

# appender program counters
A_FAI, A_XOR, A_READBACK, A_BF_READ, A_BF_DEC, A_DONE = range(6)
# reader program counters
R_READ_C, R_READ_SLOT, R_DONE = range(3)


@dataclass(frozen=True)
class ExploreConfig:
    n_threads: int = 2
    appends_per_thread: int = 1
    readers: int = 0
    capacity: int = 4
    impl: str = "xordec"
    xor_mode: str = "reread"
    reader_op: str = SNAPSHOT
    reader_ops: int = 1

    def validate(self):
        if not 1 <= self.n_threads <= MAX_THREADS:
            raise ConfigTooLarge(f"n_threads must be in 1..{MAX_THREADS}")
        if not 1 <= self.appends_per_thread <= MAX_APPENDS:
            raise ConfigTooLarge(f"appends_per_thread must be in 1..{MAX_APPENDS}")
        if not 0 <= self.readers <= MAX_READERS:
            raise ConfigTooLarge(f"readers must be in 0..{MAX_READERS}")
        if not 1 <= self.reader_ops <= MAX_READER_OPS:
            raise ConfigTooLarge(f"reader_ops must be in 1..{MAX_READER_OPS}")
        if not 1 <= self.capacity <= MAX_CAPACITY:
            raise ConfigTooLarge(f"capacity must be in 1..{MAX_CAPACITY}")
        if self.impl not in ("xordec", "cas"):
            raise ValueError(f"unknown impl {self.impl!r}")
        if self.xor_mode not in ("reread", "fetch"):
            raise ValueError(f"unknown xor_mode {self.xor_mode!r}")
        if self.reader_op not in (SNAPSHOT, POLL):
            raise ValueError(f"unknown reader_op {self.reader_op!r}")

    def item(self, tid: int, k: int) -> int:
        return tid * self.appends_per_thread + k


@dataclass
class ExploreResult:
    verdict: Verdict
    states: int = 0
    terminal_states: int = 0
    terminal_slot_arrays: int = 0
    schedules: int = 0
    terminal_with_lost_slot: int = 0
    outcomes: frozenset | None = None
    slot_arrays: frozenset = frozenset()

    @property
    def passed(self) -> bool:
        return self.verdict.passed


class _Violation(Exception):
    def __init__(self, rule, detail):
        super().__init__(f"{rule}: {detail}")
        self.rule = rule
        self.detail = detail


def frontier_of(slots) -> int:
    """Largest index whose slot is valid with every lower slot non-empty; -1 if none."""
    f = -1
    for i, w in enumerate(slots):
        if w == 0:
            break
        if w > 0:
            f = i
    return f


class Machine:
    """Transition system for one :class:`ExploreConfig`.

    A state is ``(C, slots, decs, recorded_at, locals, events)`` where
    ``decs[s]`` is the bitmask of threads that decremented (or CAS-sealed)
    slot ``s``, ``recorded_at`` the bitmask of slots that received a
    recording attempt, and ``events`` the history so far as
    ``(thread, op, phase, payload, ok)`` tuples.
    """

    def __init__(self, cfg: ExploreConfig):
        cfg.validate()
        self.cfg = cfg
        self.n_app = cfg.n_threads
        self.n_all = cfg.n_threads + cfg.readers
        self.params = derive_params(self.n_all, cfg.capacity)
        self.cas = cfg.impl == "cas"
        self.fetch = cfg.xor_mode == "fetch"

    def encode(self, item):
        return encode(item, self.params)

    def initial(self):
        cap = self.cfg.capacity
        locals_ = []
        for _ in range(self.n_app):
            # pc, k, ell, j, watermark, f_inv (None = not invoked), recorded
            locals_.append((A_FAI, 0, -1, -1, -1, None, 0))
        for _ in range(self.cfg.readers):
            # pc, k, bound, i, cursor, f_inv, items, last_slot, reads, l
            locals_.append((R_READ_C, 0, 0, 0, 0, None, (), -1, 0, 0))
        return (0, (0,) * cap, (0,) * cap, 0, tuple(locals_), ())

    def enabled(self, state):
        out = []
        for tid, loc in enumerate(state[4]):
            done = A_DONE if tid < self.n_app else R_DONE
            if loc[0] != done:
                out.append(tid)
        return out

    # -- invariant helpers -------------------------------------------------
    def _check_slot_edge(self, old, new, s):
        if new == 0:
            raise _Violation("P1", f"slot {s} reads 0 after an operation ({old} -> {new})")
        if old > 0 and not (new > 0 and extract_item(new, self.params) == extract_item(old, self.params)):
            raise _Violation("P2", f"valid slot {s} changed {old} -> {new}")
        if old < 0 and new >= 0:
            raise _Violation("P3", f"invalid slot {s} became {new}")
        if self.cas and new < 0 and new != -1:
            raise _Violation("CAS", f"sealed slot {s} holds {new}, expected -1")

    def _check_frontier(self, old_slots, new_slots):
        fo, fn = frontier_of(old_slots), frontier_of(new_slots)
        if fn < fo:
            raise _Violation("FRONTIER", f"frontier decreased {fo} -> {fn}")

    # -- transitions ---------------------------------------------------------
    def step(self, state, tid):
        """Advance thread ``tid`` by one atomic step.

        Returns ``(new_state, trace_line)``; raises :class:`_Violation`.
        """
        if tid < self.n_app:
            return self._step_appender(state, tid)
        return self._step_reader(state, tid)

    def _step_appender(self, state, tid):
        C, slots, decs, rec_at, locs, events = state
        pc, k, ell, j, wm, f_inv, recorded = locs[tid]
        cfg = self.cfg
        cap = cfg.capacity
        item = cfg.item(tid, k)
        enc = self.encode(item)
        slots_l = list(slots)
        decs_l = list(decs)
        ev = list(events)
        respond = None  # None, or True/False for an append response

        if f_inv is None:
            f_inv = frontier_of(slots)
            ev.append((tid, APPEND, INV, item, True))

        if pc == A_FAI:
            ell = C
            C += 1
            line = f"T{tid} fetch_inc C {ell}"
            if ell >= cap:
                respond = False
            else:
                pc = A_XOR
        elif pc == A_XOR:
            if rec_at >> ell & 1:
                raise _Violation("XOR_ONCE", f"slot {ell} recorded twice")
            rec_at |= 1 << ell
            old = slots_l[ell]
            if self.cas:
                ok = old == 0
                if ok:
                    slots_l[ell] = enc
                line = f"T{tid} cas A[{ell}] 0->{enc} prior={old}"
            else:
                slots_l[ell] = apply_xor(old, enc)
                self._check_slot_edge(old, slots_l[ell], ell)
                ok = old == 0
                line = f"T{tid} xor A[{ell}] {enc} -> {slots_l[ell]}"
            if old > 0:
                raise _Violation("XOR_ONCE", f"slot {ell} was valid before its owner's record")
            if self.cas or self.fetch:
                pc, j, recorded = self._after_record(tid, ok, ell, decs_l, locs, recorded)
            else:
                pc = A_READBACK
        elif pc == A_READBACK:
            v = slots_l[ell]
            line = f"T{tid} read A[{ell}] {v}"
            pc, j, recorded = self._after_record(tid, v > 0, ell, decs_l, locs, recorded)
        elif pc == A_BF_READ:
            v = slots_l[j]
            line = f"T{tid} read A[{j}] {v}"
            if v == 0:
                pc = A_BF_DEC
            else:
                j -= 1
        elif pc == A_BF_DEC:
            if decs_l[j] >> tid & 1:
                raise _Violation("DEC_BUDGET", f"thread {tid} sealed slot {j} twice")
            decs_l[j] |= 1 << tid
            if bin(decs_l[j]).count("1") > self.n_app - 1:
                raise _Violation("DEC_BUDGET", f"slot {j} sealed more than n-1 times")
            old = slots_l[j]
            if self.cas:
                if old == 0:
                    slots_l[j] = -1
                line = f"T{tid} cas A[{j}] 0->-1 prior={old}"
            else:
                slots_l[j] = apply_dec(old)
                line = f"T{tid} dec A[{j}] -> {slots_l[j]}"
            if slots_l[j] != old:
                self._check_slot_edge(old, slots_l[j], j)
            j -= 1
            pc = A_BF_READ
        else:  # pragma: no cover
            raise AssertionError("stepped a finished thread")

        if pc in (A_BF_READ, A_BF_DEC) and j <= wm:
            respond = True

        if respond is not None:
            if respond:
                f_resp = frontier_of(slots_l)
                if not all(w != 0 for w in slots_l[:ell]) or slots_l[ell] <= 0:
                    raise _Violation("POST_APPEND",
                                     f"append at slot {ell} returned with an empty lower slot "
                                     f"or invalid own slot")
                if not f_inv < ell <= f_resp:
                    raise _Violation("LINEARIZE",
                                     f"append at slot {ell}: frontier {f_inv} at invocation, "
                                     f"{f_resp} at response")
                wm = max(wm, ell)
            ev.append((tid, APPEND, RESP, item, respond))
            k += 1
            pc = A_FAI if k < cfg.appends_per_thread else A_DONE
            ell, j, f_inv = -1, -1, None

        new_loc = (pc, k, ell, j, wm, f_inv, recorded)
        locs = locs[:tid] + (new_loc,) + locs[tid + 1:]
        new_slots = tuple(slots_l)
        self._check_frontier(slots, new_slots)
        return (C, new_slots, tuple(decs_l), rec_at, locs, tuple(ev)), line

    def _after_record(self, tid, ok, ell, decs_l, locs, recorded):
        if not ok:
            # A lost slot must have been sealed by a thread that already recorded.
            sealers = [t for t in range(self.n_app) if decs_l[ell] >> t & 1]
            if not sealers or not any(locs[t][6] > 0 for t in sealers):
                raise _Violation("LOCK_FREE", f"slot {ell} lost without a recorded sealer")
            return A_FAI, -1, recorded
        return A_BF_READ, ell - 1, recorded + 1

    def _step_reader(self, state, tid):
        C, slots, decs, rec_at, locs, events = state
        pc, k, bound, i, cursor, f_inv, items, last, reads, l = locs[tid]
        cfg = self.cfg
        ev = list(events)
        done = False
        if pc == R_READ_C:
            f_inv = frontier_of(slots)
            ev.append((tid, cfg.reader_op, INV, None, True))
            l = C
            bound = min(l, cfg.capacity)
            i = cursor if cfg.reader_op == POLL else 0
            items = ()
            if cfg.reader_op == SNAPSHOT:
                last = -1
            reads = 0
            line = f"T{tid} read C {l}"
            pc = R_READ_SLOT
            done = i >= bound
        else:
            w = slots[i]
            reads += 1
            line = f"T{tid} read A[{i}] {w}"
            if w == 0:
                done = True
            else:
                if w > 0:
                    items = items + (extract_item(w, self.params),)
                    last = i
                i += 1
                done = i >= bound
        if done:
            f_resp = frontier_of(slots)
            if reads > l + 2:
                raise _Violation("READ_BOUND", f"{reads} slot reads with counter snapshot {l}")
            if not f_inv <= last <= f_resp:
                raise _Violation("LINEARIZE",
                                 f"read ending at slot {last}: frontier {f_inv} at invocation, "
                                 f"{f_resp} at response")
            ev.append((tid, cfg.reader_op, RESP, items, True))
            if cfg.reader_op == POLL:
                cursor = max(cursor, i)
            k += 1
            pc = R_READ_C if k < cfg.reader_ops else R_DONE
            f_inv = None
        new_loc = (pc, k, bound, i, cursor, f_inv, items, last, reads, l)
        locs = locs[:tid] + (new_loc,) + locs[tid + 1:]
        return (C, slots, decs, rec_at, locs, tuple(ev)), line

    # -- terminal -------------------------------------------------------------
    def final_order(self, state):
        return tuple(extract_item(w, self.params) for w in state[1] if w > 0)

    @staticmethod
    def history_of(state) -> History:
        return History.from_events(
            Event(seq, t, op, ph, payload, ok)
            for seq, (t, op, ph, payload, ok) in enumerate(state[5]))


def explore(cfg: ExploreConfig, *, collect_outcomes: bool = False,
            machine_cls: type[Machine] = Machine) -> ExploreResult:
    """Enumerate every interleaving of ``cfg`` and check all invariants.

    ``machine_cls`` lets tests substitute a deliberately broken variant.
    """
    machine = machine_cls(cfg)
    memo: dict = {}
    path: list[str] = []
    terminal_arrays = set()
    outcomes = set() if collect_outcomes else None
    counters = {"terminal": 0, "lost": 0}

    def visit(state):
        hit = memo.get(state)
        if hit is not None:
            return hit
        tids = machine.enabled(state)
        if not tids:
            final = machine.final_order(state)
            verdict = check_history(machine.history_of(state), final)
            if not verdict.passed:
                raise _Violation(verdict.rule, verdict.detail + " | " + " | ".join(verdict.witness))
            counters["terminal"] += 1
            counters["lost"] += _has_lost_slot(state)
            terminal_arrays.add(state[1])
            if outcomes is not None:
                outcomes.add((tuple(e[:4] for e in state[5]), final))
            memo[state] = 1
            return 1
        total = 0
        for tid in tids:
            nxt, line = machine.step(state, tid)
            path.append(line)
            total += visit(nxt)
            path.pop()
        memo[state] = total
        return total

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 10_000))
    try:
        schedules = visit(machine.initial())
    except _Violation as v:
        verdict = Verdict(False, v.rule, v.detail, tuple(path), {"states": len(memo)})
        return ExploreResult(verdict, states=len(memo))
    finally:
        sys.setrecursionlimit(old_limit)

    stats = {
        "states": len(memo),
        "terminal_states": counters["terminal"],
        "terminal_slot_arrays": len(terminal_arrays),
        "schedules": schedules,
        "terminal_with_lost_slot": counters["lost"],
    }
    return ExploreResult(
        Verdict(True, stats=stats),
        states=len(memo),
        terminal_states=counters["terminal"],
        terminal_slot_arrays=len(terminal_arrays),
        schedules=schedules,
        terminal_with_lost_slot=counters["lost"],
        outcomes=frozenset(outcomes) if outcomes is not None else None,
        slot_arrays=frozenset(terminal_arrays),
    )


def _has_lost_slot(state) -> bool:
    # A slot that received a recording attempt but is invalid lost its item.
    slots, rec_at = state[1], state[3]
    return any(rec_at >> s & 1 and w < 0 for s, w in enumerate(slots))
