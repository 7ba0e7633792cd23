#!/usr/bin/env python3
"""Benchmark the compiled butterfly kernel against the numpy fallback.

Times forward transforms per size and verifies the two backends agree
bit-for-bit on the benchmarked inputs.  Run: python benchmarks/bench_fft.py
"""

import time

import numpy as np

from freqrag import _kernels_py
from freqrag.spectral import _plan

try:
    from freqrag import _kernels
except ImportError:
    _kernels = None


def time_backend(mod, x, plan, reps):
    best = float("inf")
    for _ in range(5):
        t0 = time.perf_counter()
        for _ in range(reps):
            re, im = x.copy(), np.zeros_like(x)
            mod.fft_inplace(re, im, plan.bitrev, plan.tw_re, plan.tw_im, False)
        best = min(best, (time.perf_counter() - t0) / reps)
    return best, re, im


def main():
    rng = np.random.default_rng(0)
    print(f"{'n':>6}  {'python':>10}  {'compiled':>10}  {'speedup':>8}  bitwise")
    for log_n in range(6, 14):
        n = 1 << log_n
        plan = _plan(n)
        x = rng.uniform(-1.0, 1.0, n)
        reps = max(3, 200_000 // n)
        t_py, re_py, im_py = time_backend(_kernels_py, x, plan, reps)
        if _kernels is None:
            print(f"{n:>6}  {t_py * 1e6:>8.1f}us  {'-':>10}  {'-':>8}  (extension not built)")
            continue
        t_c, re_c, im_c = time_backend(_kernels, x, plan, reps)
        same = np.array_equal(re_py, re_c) and np.array_equal(im_py, im_c)
        print(
            f"{n:>6}  {t_py * 1e6:>8.1f}us  {t_c * 1e6:>8.1f}us  "
            f"{t_py / t_c:>7.1f}x  {'yes' if same else 'NO'}"
        )


if __name__ == "__main__":
    main()
