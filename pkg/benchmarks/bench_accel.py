"""Compare the compiled kernels against the pure-Python fallback.

Each backend runs in its own interpreter because the choice is fixed at
import time by ``XORLOG_DISABLE_NUMBA``.

    python benchmarks/bench_accel.py --ops 20000 --threads 1 4
"""

import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys
from xorlog.bench import BenchConfig, run_bench
ops, threads, impl = int(sys.argv[1]), int(sys.argv[2]), sys.argv[3]
res = run_bench(BenchConfig(impl=impl, threads=threads, ops=ops, trials=3, warmup=0))
print(json.dumps({"backend": res.backend, "median": res.median}))
"""


def measure(disable, ops, threads, impl):
    env = dict(os.environ)
    env.pop("XORLOG_DISABLE_NUMBA", None)
    if disable:
        env["XORLOG_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", CHILD, str(ops), str(threads), impl],
                         env=env, capture_output=True, text=True, check=True).stdout
    return json.loads(out.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ops", type=int, default=20_000)
    ap.add_argument("--threads", type=int, nargs="+", default=[1, 4])
    ap.add_argument("--impl", choices=["xordec", "cas"], default="xordec")
    args = ap.parse_args(argv)
    print(f"{'threads':>7} {'numba ops/s':>14} {'numpy ops/s':>14} {'speedup':>8}")
    for t in args.threads:
        fast = measure(False, args.ops, t, args.impl)["median"]
        slow = measure(True, args.ops, t, args.impl)["median"]
        print(f"{t:>7} {fast:>14,.0f} {slow:>14,.0f} {fast / slow:>7.0f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
