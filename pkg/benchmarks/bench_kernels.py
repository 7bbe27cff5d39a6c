"""Benchmark the compiled kernels against the pure-numpy fallback.

Run:  python benchmarks/bench_kernels.py
"""
import time

import numpy as np

from partnav import _kernels
from partnav._kernels import fallback

try:
    from partnav._kernels import _native as native
except ImportError:
    native = None


def timeit(fn, *args, repeat=5):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    rng = np.random.default_rng(0)
    print(f"active backend: {_kernels.BACKEND}")
    if native is None:
        print("compiled extension unavailable; timing fallback only")
    header = f"{'op':<26}{'size':>12}{'fallback':>12}{'native':>12}{'speedup':>9}"
    print(header)
    print("-" * len(header))
    for n in (128, 512, 2048):
        a = rng.normal(size=(n, 3))
        b = rng.normal(size=(n, 3))
        tf = timeit(fallback.cross_nn, a, b)
        tn = timeit(native.cross_nn, a, b) if native else float("nan")
        print(f"{'cross_nn':<26}{f'{n}x{n}':>12}{tf * 1e3:>10.2f}ms"
              f"{tn * 1e3:>10.2f}ms{tf / tn:>9.1f}x" if native else
              f"{'cross_nn':<26}{f'{n}x{n}':>12}{tf * 1e3:>10.2f}ms")
        if native:
            i1, d1 = native.cross_nn(a, b)
            i2, d2 = fallback.cross_nn(a, b)
            assert (i1 == i2).all() and (d1 == d2).all(), "backend mismatch"
    for n, k in ((512, 256), (2048, 512)):
        a = rng.normal(size=(n, 3))
        tf = timeit(fallback.farthest_point_indices, a, k, 0)
        tn = timeit(native.farthest_point_indices, a, k, 0) if native else float("nan")
        label = f"{n}->{k}"
        if native:
            print(f"{'farthest_point_indices':<26}{label:>12}{tf * 1e3:>10.2f}ms"
                  f"{tn * 1e3:>10.2f}ms{tf / tn:>9.1f}x")
            assert (native.farthest_point_indices(a, k, 0)
                    == fallback.farthest_point_indices(a, k, 0)).all()
        else:
            print(f"{'farthest_point_indices':<26}{label:>12}{tf * 1e3:>10.2f}ms")


if __name__ == "__main__":
    main()
