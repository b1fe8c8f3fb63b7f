"""Command-line front end for the explorer and the stress driver.

Exit status is 0 on pass, 1 on a violation (the witness is printed one step
or event per line), 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import sys

from ..errors import ConfigError
from .machine import ExploreConfig, explore
from .stress import StressConfig, stress


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="xorlog-check", description="Check the log's correctness.")
    p.add_argument("--mode", choices=["explore", "stress"], default="explore")
    p.add_argument("--threads", type=int, default=2, help="appender threads")
    p.add_argument("--appends", type=int, default=1, help="appends per thread")
    p.add_argument("--readers", type=int, default=0, help="reader threads")
    p.add_argument("--impl", choices=["xordec", "cas"], default="xordec")
    p.add_argument("--xor-mode", choices=["reread", "fetch"], default="reread")
    p.add_argument("--reader-op", choices=["snapshot", "poll"], default="snapshot",
                   help="explore only: what the reader does")
    p.add_argument("--reader-ops", type=int, default=1, help="explore only: ops per reader")
    p.add_argument("--capacity", type=int, help="slots (default: total appends + 2 for "
                                                "explore, with headroom for stress)")
    p.add_argument("--seed", type=int, default=0, help="stress only")
    p.add_argument("--runs", type=int, default=1, help="stress only: runs with seeds seed..seed+runs-1")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.mode == "explore":
            cap = args.capacity or args.threads * args.appends + 2
            cfg = ExploreConfig(n_threads=args.threads, appends_per_thread=args.appends,
                                readers=args.readers, capacity=cap, impl=args.impl,
                                xor_mode=args.xor_mode, reader_op=args.reader_op,
                                reader_ops=args.reader_ops)
            res = explore(cfg)
            verdicts = [res.verdict]
        else:
            verdicts = []
            for run in range(args.runs):
                cfg = StressConfig(n_threads=args.threads, appends_per_thread=args.appends,
                                   reader_threads=args.readers, impl=args.impl,
                                   xor_mode=args.xor_mode, seed=args.seed + run,
                                   capacity=args.capacity)
                verdicts.append(stress(cfg).verdict)
                if not verdicts[-1].passed:
                    break
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    for k, v in enumerate(verdicts):
        stats = " ".join(f"{key}={val:.3f}" if isinstance(val, float) else f"{key}={val}"
                         for key, val in v.stats.items())
        print(f"{args.mode} run={k} {'PASS' if v.passed else 'FAIL'} {stats}")
        if not v.passed:
            print(v.report())
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
