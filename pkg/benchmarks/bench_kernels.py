"""Compare the numba kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]

Each kernel is called once untimed (numba compiles or loads its cache), then
timed ``--repeat`` times; the best time is reported.
"""
import argparse
import math
import time

import numpy as np

from bmcgan import BmcParams, SdeConfig, SystemSpec, integrate_batch
from bmcgan.kernels import mean_pairwise_distance


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    x, y = rng.standard_normal((2000, 2)), rng.standard_normal((2000, 2))
    spec = SystemSpec("gan_logsigmoid", 1.0)
    cases = {
        "em 32 paths x 20k steps": lambda b: integrate_batch(
            spec, BmcParams(0.5, 0.1, 2.0), SdeConfig(dt=0.01, n_steps=20_000, blowup_threshold=math.inf),
            range(32), backend=b),
        "em null 1 path x 100k steps": lambda b: integrate_batch(
            spec, None, SdeConfig(dt=0.1, n_steps=100_000), [0], backend=b),
        "pairwise distance 2000 x 2000": lambda b: mean_pairwise_distance(x, y, backend=b),
    }
    print(f"{'case':32s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s}")
    for name, fn in cases.items():
        t_nb = best_of(lambda: fn("numba"), args.repeat)
        t_np = best_of(lambda: fn("numpy"), args.repeat)
        print(f"{name:32s} {t_nb:10.4f} {t_np:10.4f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
