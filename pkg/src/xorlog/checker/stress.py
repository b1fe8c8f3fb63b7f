"""Drive the real logs from many threads and judge the recorded history.

Appenders and readers run inside compiled kernels; each stamps its
invocations and responses with a shared fetch-and-increment ticket, so the
recording path adds no locks.  The ticket slightly delays operations, which
only makes the real-time constraints stricter.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .. import kernels as K
from ..casbaseline import make_log
from ..errors import ConfigError
from ..logcore import run_threads
from ..slotcodec import derive_params
from .history import POLL, SNAPSHOT, History, Verdict, check_history


@dataclass(frozen=True)
class StressConfig:
    n_threads: int = 8
    appends_per_thread: int = 1000
    reader_threads: int = 2
    impl: str = "xordec"
    xor_mode: str = "reread"
    seed: int = 0
    capacity: int | None = None
    jitter: int = 32
    yield_prob: float = 0.05
    max_snapshots: int = 24

    def resolved_capacity(self) -> int:
        if self.capacity is not None:
            return self.capacity
        total = self.n_threads * self.appends_per_thread
        # Every lost slot costs one extra index; leave generous headroom.
        return total + self.n_threads + total // 4


@dataclass
class StressResult:
    verdict: Verdict
    seconds: float = 0.0
    appends: int = 0
    failed_records: int = 0
    fetches: int = 0
    reads: int = 0
    snapshot_samples: list = field(default_factory=list)
    history: History | None = None
    final_order: list | None = None

    @property
    def passed(self) -> bool:
        return self.verdict.passed

    @property
    def throughput(self) -> float:
        return self.appends / self.seconds if self.seconds > 0 else 0.0


def tag_items(tid: int, count: int, item_bits: int) -> np.ndarray:
    """Unique items ``(tid << k) | seq`` for one thread."""
    k = max(1, int(count - 1).bit_length())
    if (tid + 1).bit_length() + k > item_bits:
        raise ConfigError("tagged items do not fit in the slot's item bits")
    return (np.int64(tid) << k) | np.arange(count, dtype=np.int64)


def _pauses(rng, n, jitter, yield_prob):
    spins = rng.integers(0, jitter + 1, n) if jitter > 0 else np.zeros(n, np.int64)
    spins[rng.random(n) < yield_prob] = -1
    return spins.astype(np.int64)


def stress(cfg: StressConfig, *, keep_history: bool = False) -> StressResult:
    if cfg.n_threads < 1 or cfg.appends_per_thread < 0 or cfg.reader_threads < 0:
        raise ConfigError("stress needs at least one appender")
    cap = cfg.resolved_capacity()
    total = cfg.n_threads * cfg.appends_per_thread
    if total > cap:
        raise ConfigError(f"{total} appends do not fit capacity {cap}")
    params = derive_params(cfg.n_threads + cfg.reader_threads, cap)
    log = make_log(cfg.impl, params, **({"xor_mode": cfg.xor_mode} if cfg.impl == "xordec" else {}))
    rng = np.random.default_rng(cfg.seed)
    m, mask = params.m, params.item_mask

    ticket = np.zeros(8, np.int64)
    finished = np.zeros(8, np.int64)
    app = []
    for _ in range(cfg.n_threads):
        h = log.register()
        n = cfg.appends_per_thread
        app.append({
            "h": h,
            "items": tag_items(h.tid, n, params.item_bits),
            "inv": np.full(n, -1, np.int64),
            "resp": np.full(n, -1, np.int64),
            "slot": np.full(n, -1, np.int64),
            "spins": _pauses(rng, n, cfg.jitter, cfg.yield_prob),
        })
    rd = []
    stride = max(1, cap // max(cfg.max_snapshots, 1))
    for _ in range(cfg.reader_threads):
        rd.append({
            "h": log.register(),
            "rec": np.zeros((2 * cap + cfg.max_snapshots + 8, K.REC_SIZE), np.int64),
            "poll": np.empty(cap, np.int64),
            "snap": np.empty(cap * 8, np.int64),
            "out": None,
        })

    impl = log.kernel_impl

    def appender(a):
        return lambda: K.stress_appender(
            log.counter, log.slots, a["h"].state, a["items"], impl, m, ticket,
            a["inv"], a["resp"], a["slot"], finished, a["spins"])

    def reader(r):
        def run():
            r["out"] = K.stress_reader(
                log.counter, log.slots, r["h"].state, m, mask, ticket, finished,
                cfg.n_threads, r["rec"], r["poll"], r["snap"], stride, cfg.max_snapshots)
        return run

    targets = [appender(a) for a in app] + [reader(r) for r in rd]
    order = rng.permutation(len(targets))
    t0 = time.perf_counter()
    run_threads([targets[i] for i in order])
    seconds = time.perf_counter() - t0

    hist = History()
    for a in app:
        invoked = a["inv"] >= 0
        hist.add_appends(a["h"].tid, a["items"][invoked], a["inv"][invoked],
                         a["resp"][invoked], a["slot"][invoked] >= 0)
    samples = []
    n_reads = 0
    for r in rd:
        nrec, _, _ = r["out"]
        recs = r["rec"][:nrec]
        n_reads += int(nrec)
        tid = r["h"].tid
        for row in recs:
            kind = SNAPSHOT if row[K.REC_KIND] == K.KIND_SNAPSHOT else POLL
            buf = r["snap"] if kind == SNAPSHOT else r["poll"]
            off, n = int(row[K.REC_OFF]), int(row[K.REC_LEN])
            hist.add_read(tid, kind, int(row[K.REC_INV]), int(row[K.REC_RESP]), buf[off:off + n])
            if kind == SNAPSHOT:
                samples.append((int(row[K.REC_BOUND]), int(row[K.REC_READS])))

    final = log.final_order()
    verdict = check_history(hist, final)
    appends = sum(a["h"].appends for a in app)
    failed = sum(a["h"].failed_records for a in app)
    fetches = sum(a["h"].fetches for a in app)
    exhausted = sum(int(np.any(a["slot"][a["inv"] >= 0] < 0)) for a in app)

    if verdict.passed:
        verdict = _extra_checks(cfg, log, samples, appends, failed, fetches, exhausted,
                                verdict.stats)
    verdict.stats.update({"seconds": seconds, "appends": appends, "failed_records": failed,
                          "fetches": fetches, "reads": n_reads,
                          "snapshots": len(samples)})
    return StressResult(verdict, seconds, appends, failed, fetches, n_reads, samples,
                        hist if keep_history else None, final if keep_history else None)


def _extra_checks(cfg, log, samples, appends, failed, fetches, exhausted, stats):
    for l, reads in samples:
        if reads > l + 2:
            return Verdict(False, "READ_BOUND",
                           f"snapshot did {reads} slot reads with counter snapshot {l}", (), stats)
    if appends + failed + exhausted != fetches:
        return Verdict(False, "ACCOUNTING",
                       f"appends {appends} + failed {failed} + exhausted {exhausted} "
                       f"!= fetches {fetches}", (), stats)
    if exhausted:
        return Verdict(False, "CAPACITY", f"{exhausted} appenders hit capacity "
                       f"{log.params.capacity}; raise the capacity", (), stats)
    words = log.words()
    cm = log.params.contention_mask
    n_app = cfg.n_threads
    valid = words[words > 0]
    if len(valid) and np.min(valid & cm) < cm - (n_app - 1):
        return Verdict(False, "DEC_BUDGET", "a valid slot absorbed more than n-1 decrements",
                       (), stats)
    if log.impl == "cas" and np.any(words[words < 0] != -1):
        return Verdict(False, "CAS", "a sealed CAS slot holds a value other than -1", (), stats)
    return Verdict(True, stats=stats)
