"""Throughput benchmark: xor/decrement log vs. compare-and-swap log.

Each worker thread runs its whole operation mix inside one compiled kernel
(released from the GIL), so the measurement covers the atomic traffic rather
than interpreter overhead.  Run ``xorlog-bench --help`` for the CLI.
"""

from __future__ import annotations

import argparse
import csv
import statistics
import sys
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels as K
from ._accel import BACKEND
from .casbaseline import make_log
from .errors import CapacityExhausted, ConfigError
from .slotcodec import derive_params

CSV_COLUMNS = ["impl", "threads", "trial", "ops", "seconds", "throughput_ops_per_sec", "retries"]
CHUNK = 8192
WARMUP_TRIAL = 1_000_000


@dataclass(frozen=True)
class BenchConfig:
    impl: str = "xordec"
    threads: int = 1
    ops: int | None = 100_000
    duration: float | None = None
    capacity: int | None = None
    read_mix: float = 0.0
    warmup: float = 0.2
    trials: int = 5
    seed: int = 0

    def validate(self):
        if self.impl not in ("xordec", "cas"):
            raise ConfigError(f"unknown impl {self.impl!r}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if (self.ops is None) == (self.duration is None):
            raise ConfigError("give exactly one of ops or duration")
        if self.ops is not None and self.ops < 1:
            raise ConfigError("ops must be >= 1")
        if self.duration is not None and self.duration <= 0:
            raise ConfigError("duration must be positive")
        if not 0.0 <= self.read_mix <= 1.0:
            raise ConfigError("read_mix must be within [0, 1]")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.warmup < 0:
            raise ConfigError("warmup must be >= 0")
        if self.capacity is not None and self.ops is not None and self.ops > self.capacity:
            raise ConfigError(f"ops {self.ops} exceed capacity {self.capacity}")

    def resolved_capacity(self) -> int:
        if self.capacity is not None:
            return self.capacity
        if self.ops is not None:
            return self.ops + self.ops // 8 + 64 * self.threads
        return 1 << 22


@dataclass
class TrialResult:
    trial: int
    ops: int
    appends: int
    polls: int
    seconds: float
    retries: int
    fetches: int
    per_thread_ops: list[int]

    @property
    def throughput(self) -> float:
        return self.ops / self.seconds if self.seconds > 0 else float("inf")


@dataclass
class BenchResult:
    config: BenchConfig
    trials: list[TrialResult] = field(default_factory=list)
    backend: str = BACKEND

    @property
    def throughputs(self) -> list[float]:
        return [t.throughput for t in self.trials]

    @property
    def median(self) -> float:
        return statistics.median(self.throughputs)

    @property
    def spread(self) -> tuple[float, float]:
        return min(self.throughputs), max(self.throughputs)

    @property
    def retries(self) -> int:
        return sum(t.retries for t in self.trials)

    def csv_rows(self):
        for t in self.trials:
            yield {
                "impl": self.config.impl,
                "threads": self.config.threads,
                "trial": t.trial,
                "ops": t.ops,
                "seconds": f"{t.seconds:.6f}",
                "throughput_ops_per_sec": f"{t.throughput:.1f}",
                "retries": t.retries,
            }


def _split(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (1 if i < extra else 0) for i in range(parts)]


def _run_trial(cfg: BenchConfig, trial: int, *, duration: float | None = None,
               tolerate_exhaustion: bool = False) -> TrialResult:
    cap = cfg.resolved_capacity()
    params = derive_params(cfg.threads, cap)
    log = make_log(cfg.impl, params)
    handles = [log.register() for _ in range(cfg.threads)]
    impl, m, mask = log.kernel_impl, params.m, params.item_mask
    counts = [[0, 0] for _ in handles]
    exhausted = [False] * cfg.threads
    barrier = threading.Barrier(cfg.threads + 1)
    seeds = np.random.SeedSequence([cfg.seed, trial]).spawn(cfg.threads)

    if duration is None:
        plans = [np.random.default_rng(s).random(n) < cfg.read_mix
                 for s, n in zip(seeds, _split(cfg.ops, cfg.threads))]
    deadline = [0.0]

    def worker(i):
        h = handles[i]
        rng = np.random.default_rng(seeds[i])
        barrier.wait()
        if duration is None:
            a, p, ex = K.bench_worker(log.counter, log.slots, h.state, plans[i], impl, m, mask)
            counts[i] = [int(a), int(p)]
            exhausted[i] = bool(ex)
            return
        while time.perf_counter() < deadline[0]:
            plan = rng.random(CHUNK) < cfg.read_mix
            a, p, ex = K.bench_worker(log.counter, log.slots, h.state, plan, impl, m, mask)
            counts[i][0] += int(a)
            counts[i][1] += int(p)
            if ex:
                exhausted[i] = True
                return

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(cfg.threads)]
    for t in threads:
        t.start()
    deadline[0] = time.perf_counter() + (duration or 0.0)
    barrier.wait()
    t0 = time.perf_counter()
    for t in threads:
        t.join()
    seconds = time.perf_counter() - t0

    if any(exhausted) and not tolerate_exhaustion:
        raise CapacityExhausted(
            f"trial {trial}: capacity {cap} exhausted after "
            f"{sum(h.fetches for h in handles)} fetches; pass a larger --capacity")
    per_thread = [a + p for a, p in counts]
    return TrialResult(
        trial=trial,
        ops=sum(per_thread),
        appends=sum(a for a, _ in counts),
        polls=sum(p for _, p in counts),
        seconds=seconds,
        retries=sum(h.failed_records for h in handles),
        fetches=sum(h.fetches for h in handles),
        per_thread_ops=per_thread,
    )


def run_bench(cfg: BenchConfig) -> BenchResult:
    cfg.validate()
    warm = BenchConfig(impl=cfg.impl, threads=cfg.threads, ops=min(cfg.ops or 1024, 1024),
                       read_mix=cfg.read_mix, trials=1, warmup=0, seed=cfg.seed)
    _run_trial(warm, WARMUP_TRIAL)  # compiles the kernels
    if cfg.warmup > 0:
        warm_dur = BenchConfig(impl=cfg.impl, threads=cfg.threads, ops=None,
                               duration=cfg.warmup, read_mix=cfg.read_mix, capacity=1 << 20)
        _run_trial(warm_dur, WARMUP_TRIAL, duration=cfg.warmup, tolerate_exhaustion=True)
    result = BenchResult(cfg)
    for trial in range(cfg.trials):
        result.trials.append(_run_trial(cfg, trial, duration=cfg.duration))
    return result


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xorlog-bench", description=__doc__.splitlines()[0])
    p.add_argument("--impl", choices=["xordec", "cas"], default="xordec")
    p.add_argument("--threads", type=int, default=1)
    size = p.add_mutually_exclusive_group()
    size.add_argument("--ops", type=int, help="total operations per trial")
    size.add_argument("--duration", type=float, help="seconds per trial")
    p.add_argument("--read-mix", type=float, default=0.0, help="fraction of ops that are polls")
    p.add_argument("--capacity", type=int)
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--warmup", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", metavar="PATH", help="write per-trial rows to PATH ('-' for stdout)")
    return p


def write_csv(results, path):
    out = sys.stdout if path == "-" else open(path, "w", newline="")
    try:
        writer = csv.DictWriter(out, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for res in results:
            writer.writerows(res.csv_rows())
    finally:
        if out is not sys.stdout:
            out.close()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    ops = args.ops if args.ops is not None or args.duration is not None else 100_000
    cfg = BenchConfig(impl=args.impl, threads=args.threads, ops=ops, duration=args.duration,
                      capacity=args.capacity, read_mix=args.read_mix, warmup=args.warmup,
                      trials=args.trials, seed=args.seed)
    try:
        result = run_bench(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CapacityExhausted as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        return 3
    lo, hi = result.spread
    print(f"{cfg.impl} threads={cfg.threads} backend={result.backend} "
          f"median={result.median:,.0f} ops/s spread=[{lo:,.0f}, {hi:,.0f}] "
          f"retries={result.retries}")
    if args.csv:
        write_csv([result], args.csv)
    return 0


if __name__ == "__main__":
    sys.exit(main())
