"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from kakeyalab import _kernels_py
from kakeyalab.generators import GeneratorSpec, generate

try:
    from kakeyalab import _kernels_cy
except ImportError:
    _kernels_cy = None


def raster_case(delta):
    f = generate(GeneratorSpec("random_separated", 2, delta, seed=0))
    h = delta / 4
    lo, hi = f.bounding_box(pad=delta)
    shape = tuple(np.ceil((hi - lo) / h).astype(int))
    w = np.ones(len(f))

    def run(mod):
        return mod.raster_tubes(np.zeros(shape), lo.copy(), h, f.centers.copy(), f.dirs.copy(), delta, 0.0, w)

    return f"raster {len(f)} tubes on {shape[0]}x{shape[1]}", run


def ball_case(size, radius):
    grid = np.random.default_rng(0).uniform(size=(size, size))
    r = np.arange(-radius, radius + 1)
    mesh = np.stack(np.meshgrid(r, r, indexing="ij"), -1).reshape(-1, 2)
    offsets = mesh[np.sum(mesh ** 2, axis=1) <= radius ** 2].astype(np.int64)
    n = (size - 2 * radius) // radius

    def run(mod):
        return mod.ball_sums(grid, [radius, radius], [n, n], radius, offsets)

    return f"ball sums {n * n} balls x {len(offsets)} cells", run


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    a = ap.parse_args()
    cases = [raster_case(0.01), raster_case(0.004), ball_case(800, 8), ball_case(1600, 8)]
    print(f"{'case':<40}{'numpy [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    for name, run in cases:
        tp = min(timeit.repeat(lambda: run(_kernels_py), number=1, repeat=a.repeat))
        if _kernels_cy is None:
            print(f"{name:<40}{tp:>12.4f}{'n/a':>12}{'':>10}")
            continue
        tc = min(timeit.repeat(lambda: run(_kernels_cy), number=1, repeat=a.repeat))
        print(f"{name:<40}{tp:>12.4f}{tc:>12.4f}{tp / tc:>9.1f}x")


if __name__ == "__main__":
    main()
