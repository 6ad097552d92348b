"""Time the numba kernels against the pure-numpy fallback.

Usage:
    python3 benchmarks/bench_kernels.py            # both backends, side by side
    python3 benchmarks/bench_kernels.py --single   # current backend only, JSON on stdout

Each backend runs in its own interpreter because the choice is fixed at
import time by the SWHMM_NUMBA environment variable. Timings exclude the
first call, which pays for JIT compilation.
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def _best_of(fn, repeats):
    fn()  # warm-up, includes compilation
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_single(repeats: int) -> dict:
    from swhmm import _accel, hmm
    from swhmm.ldpc import DegreeDistribution, build_code, decode_syndrome, syndrome

    params = hmm.preset("M1")
    rng = np.random.default_rng(0)
    n = 2000
    code = build_code(DegreeDistribution.regular(3, 6), n, seed=1)
    e = (rng.random(n) < 0.06).astype(np.uint8)
    # e seen through a BSC(0.06) as the soft prior
    seen = e ^ (rng.random(n) < 0.06)
    llr = np.where(seen == 1, 1.0, -1.0) * np.log(0.94 / 0.06)
    target = syndrome(code, e)

    timings = {
        "sample_rows 2000x100": _best_of(
            lambda: hmm.sample_rows(params, 2000, 100, np.random.default_rng(1)), repeats),
        "build_code (3,6) n=2000": _best_of(
            lambda: build_code(DegreeDistribution.regular(3, 6), n, seed=1), repeats),
        "decode_syndrome n=2000, 100 iters": _best_of(
            lambda: decode_syndrome(code, np.zeros(n) - 0.1, target, max_iters=100), repeats),
        "decode_syndrome n=2000, typical": _best_of(
            lambda: decode_syndrome(code, llr, target), repeats),
    }
    return {"backend": _accel.backend(), "seconds": timings}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--single", action="store_true")
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    if args.single:
        print(json.dumps(run_single(args.repeats)))
        return
    results = {}
    for flag in ("1", "0"):
        env = dict(os.environ, SWHMM_NUMBA=flag)
        out = subprocess.run([sys.executable, __file__, "--single", "--repeats", str(args.repeats)],
                             env=env, check=True, capture_output=True, text=True).stdout
        res = json.loads(out)
        results[res["backend"]] = res["seconds"]
    width = max(len(k) for k in results["numba"])
    print(f"{'kernel':<{width}}  {'numba [ms]':>11}  {'numpy [ms]':>11}  {'speedup':>8}")
    for name, t_nb in results["numba"].items():
        t_np = results["numpy"][name]
        print(f"{name:<{width}}  {1e3 * t_nb:11.2f}  {1e3 * t_np:11.2f}  {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
