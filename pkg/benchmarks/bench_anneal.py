"""Throughput of the annealing kernel: JIT-compiled vs plain-Python fallback.

The kernel path is chosen by TREEOT_NUMBA at import time, so each mode runs in
a subprocess. Usage:

    python benchmarks/bench_anneal.py [--p 7] [--iters 200000] [--seed 0]
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys

WORKER = """
import json, sys, time
import numpy as np
import treeot as ot

p, iters, seed = json.loads(sys.stdin.read())
g = ot.grid_graph(p)
rng = np.random.default_rng(1234)
mu = rng.random(p * p) + 0.01; mu /= mu.sum()
nu = rng.random(p * p) + 0.01; nu /= nu.sum()
cfg = ot.AnnealConfig(max_iters=iters, seed=seed, record_every=max(1, iters // 10))

res = ot.anneal(g, mu, nu, cfg)        # first call pays any compilation cost
t0 = time.perf_counter()
res = ot.anneal(g, mu, nu, cfg)
dt = time.perf_counter() - t0
print(json.dumps({
    "numba": ot.numba_enabled(),
    "seconds": dt,
    "iters_per_second": iters / dt,
    "best_cost": res.best_cost,
    "trace_tail": [res.trace[-1].iter, res.trace[-1].best_cost],
}))
"""


def run_mode(flag: str, payload) -> dict:
    env = dict(os.environ, TREEOT_NUMBA=flag)
    proc = subprocess.run(
        [sys.executable, "-c", WORKER],
        input=json.dumps(payload),
        capture_output=True,
        text=True,
        env=env,
        check=True,
    )
    return json.loads(proc.stdout)


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--p", type=int, default=7, help="lattice side length")
    ap.add_argument("--iters", type=int, default=200_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    payload = [args.p, args.iters, args.seed]

    jit = run_mode("1", payload)
    plain = run_mode("0", payload)
    assert jit["numba"] and not plain["numba"]
    match = jit["best_cost"] == plain["best_cost"] and jit["trace_tail"] == plain["trace_tail"]

    print(f"lattice {args.p}x{args.p}, {args.iters} iterations, seed {args.seed}")
    print(f"  numba    : {jit['seconds']:8.3f} s  ({jit['iters_per_second']:12.0f} it/s)")
    print(f"  fallback : {plain['seconds']:8.3f} s  ({plain['iters_per_second']:12.0f} it/s)")
    print(f"  speedup  : {plain['seconds'] / jit['seconds']:8.1f}x")
    print(f"  results identical: {match}")
    return 0 if match else 1


if __name__ == "__main__":
    sys.exit(main())
