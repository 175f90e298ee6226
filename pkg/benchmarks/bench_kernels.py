"""Compare the compiled and pure-Python kernel backends.

Usage: ``python3 benchmarks/bench_kernels.py [--repeat N]``. Prints the best
wall time per backend and the speedup for each workload.
"""
import argparse
import timeit

import numpy as np

from covsets import kernels
from covsets.covering import TargetSet
from covsets.space import DigitSpace


def workloads():
    space = DigitSpace.full(3)
    level, depth = 12, 14
    scale = 3**depth
    rng = np.random.default_rng(0)
    centers = rng.integers(0, scale, 2000)
    radii = rng.integers(1, 3 * 3 ** (depth - level), 2000)
    x_masks = space.x_masks(level)
    ids = np.arange(3**level, dtype=np.int64)
    g_masks = TargetSet.cantor().masks(level)
    return {
        "block_cover 2000 balls, level 12": lambda b: kernels.block_cover(
            centers, radii, level, scale, 3, x_masks, backend=b),
        "prefix_filter 3^12 ids": lambda b: kernels.prefix_filter(ids, level, 3, g_masks,
                                                                  backend=b),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if kernels.BACKEND != "compiled":
        print("compiled backend unavailable; only timing the Python fallback")
    backends = ["python"] + (["compiled"] if kernels.BACKEND == "compiled" else [])
    print(f"{'workload':<36}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for name, fn in workloads().items():
        times = [min(timeit.repeat(lambda: fn(b), number=1, repeat=args.repeat))
                 for b in backends]
        speed = f"{times[0] / times[1]:>9.1f}x" if len(times) == 2 else ""
        print(f"{name:<36}" + "".join(f"{t:>11.4f}s" for t in times) + speed)


if __name__ == "__main__":
    main()
