"""Benchmark the compiled kernels against the pure-numpy fallback.

Times the anchor statistic (the O(n^3) hot loop), the incomplete order-9
estimator, and the permutation chain on both backends.

    python3 benchmarks/bench_backends.py [--sizes 25,50,100,200] [--repeats 20]
"""

import argparse
import time

import numpy as np

from cbdiv import Bandwidths, backend, cbd_ustat, default_bandwidths
from cbdiv.data import Dataset
from cbdiv.estimator import VStatEvaluator
from cbdiv.resampling import GaussianAffineSampler, cpt_permutation


def make_dataset(n, rng):
    z = rng.standard_normal((n, 1))
    return Dataset(x=z + rng.standard_normal((n, 1)), y=z + rng.standard_normal((n, 1)), z=z)


def timeit(fn, repeats):
    fn()  # warm-up (first numba call compiles)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="25,50,100,200")
    ap.add_argument("--repeats", type=int, default=20)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    rng = np.random.default_rng(0)
    backends = ["numpy"] + (["numba"] if backend.NUMBA_AVAILABLE else [])

    print(f"{'kernel':<26}{'n':>6}" + "".join(f"{b + ' (ms)':>14}" for b in backends) + f"{'speedup':>10}")
    for n in sizes:
        ds = make_dataset(n, rng)
        bw = default_bandwidths(ds)
        times = {}
        for name in backends:
            backend.use(name)
            ev = VStatEvaluator(ds, bw)
            times[name] = timeit(lambda: ev.value(ds.x), args.repeats)
        row = "".join(f"{1000 * times[b]:>14.3f}" for b in backends)
        ratio = times["numpy"] / times["numba"] if "numba" in times else float("nan")
        print(f"{'anchor statistic':<26}{n:>6}{row}{ratio:>10.1f}")

    ds = make_dataset(60, rng)
    wide = Bandwidths(h1=4.0, h2=4.0, h0=1.0)
    times = {}
    for name in backends:
        backend.use(name)
        times[name] = timeit(
            lambda: cbd_ustat(ds, wide, mode="incomplete", tuples=2000, rng=np.random.default_rng(1)),
            max(3, args.repeats // 4),
        )
    row = "".join(f"{1000 * times[b]:>14.3f}" for b in backends)
    ratio = times["numpy"] / times["numba"] if "numba" in times else float("nan")
    print(f"{'order-9 (2000 tuples)':<26}{60:>6}{row}{ratio:>10.1f}")

    sam = GaussianAffineSampler(beta=[[1.0]], mu=[0.0], sigma=1.0)
    times = {}
    for name in backends:
        backend.use(name)
        times[name] = timeit(
            lambda: cpt_permutation(ds, sam, np.random.default_rng(2)), max(3, args.repeats // 4)
        )
    row = "".join(f"{1000 * times[b]:>14.3f}" for b in backends)
    ratio = times["numpy"] / times["numba"] if "numba" in times else float("nan")
    print(f"{'permutation chain':<26}{60:>6}{row}{ratio:>10.1f}")


if __name__ == "__main__":
    main()
