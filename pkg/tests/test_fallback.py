import json
import os
import subprocess
import sys

import pytest

SCRIPT = r"""
import json
import numpy as np
from xorlog import BACKEND, CasLog, Log, derive_params
from xorlog.bench import BenchConfig, run_bench
from xorlog.checker.stress import StressConfig, stress

out = {"backend": BACKEND}
log = Log.create(n_max=3, capacity=8)
h = log.register()
log.counter[0] = 2
log.slots[0] = -1
out["slots"] = [log.append(h, x).slot for x in (5, 6)]
out["words"] = log.words().tolist()
out["snapshot"] = log.snapshot()
cl = CasLog(derive_params(2, 4))
hc = cl.register()
cl.counter[0] = 1
cl.append(hc, 3)
out["cas_words"] = cl.words().tolist()
b = run_bench(BenchConfig(threads=1, ops=300, trials=1, warmup=0)).trials[0]
out["bench"] = [b.ops, b.appends, b.retries]
s = stress(StressConfig(n_threads=2, appends_per_thread=50, reader_threads=1, seed=4))
out["stress"] = [s.passed, s.appends]
print(json.dumps(out))
"""


def run(disable):
    env = dict(os.environ)
    env.pop("XORLOG_DISABLE_NUMBA", None)
    if disable:
        env["XORLOG_DISABLE_NUMBA"] = "1"
    proc = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True,
                          text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    return json.loads(proc.stdout.strip().splitlines()[-1])


@pytest.mark.slow
def test_fallback_matches_compiled():
    fast, slow = run(False), run(True)
    assert slow.pop("backend") == "numpy"
    fast.pop("backend")
    assert fast == slow
    assert slow["words"][:2] == [-1, -1] and slow["slots"] == [2, 3]
