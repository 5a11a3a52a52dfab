"""Row-subset scan: compiled kernel versus the numpy fallback.

Usage: python3 benchmarks/bench_discrepancy.py [--repeat N]
Prints one line per table size with the best-of-N time of each backend and
checks that both return the same (value, mask).
"""

import argparse
import time

import numpy as np

from qicsim.discrepancy import _fallback

try:
    from qicsim.discrepancy import _kernels
except ImportError:
    _kernels = None

SIZES = [(8, 8), (12, 16), (16, 16), (18, 30), (20, 30)]


def best_time(fn, m, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(m)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'size':>8} {'numpy_s':>10} {'cython_s':>10} {'speedup':>8} same")
    for nx, ny in SIZES:
        m = rng.normal(size=(nx, ny))
        m /= np.abs(m).sum()
        t_np, r_np = best_time(_fallback.scan, m, args.repeat)
        if _kernels is None:
            print(f"{nx}x{ny:<5} {t_np:10.4f} {'n/a':>10} {'n/a':>8} -")
            continue
        t_cy, r_cy = best_time(_kernels.scan, m, args.repeat)
        print(f"{nx}x{ny:<5} {t_np:10.4f} {t_cy:10.4f} {t_np / t_cy:8.2f} {r_np == r_cy}")


if __name__ == "__main__":
    main()
