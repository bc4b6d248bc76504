"""Compare the compiled and numpy backends of the 1-d kernel sums.

    python3 benchmarks/bench_kernels.py [--sizes 1000 100000 1000000] [--repeat 3]

Prints best-of-``repeat`` wall times per routine and size, the speedup, and
the largest difference between the two backends' outputs.
"""

import argparse
import math
import time

import numpy as np

from diamond_heat import _backend
from diamond_heat.kernel1d import EvalOptions, Method, _circle, _dirichlet


def best_time(func, repeat):
    best = math.inf
    out = None
    for _ in range(repeat):
        start = time.perf_counter()
        out = func()
        best = min(best, time.perf_counter() - start)
    return best, out


def cases(n, rng):
    a = rng.uniform(0, 2 * math.pi, n)
    b = rng.uniform(0, 2 * math.pi, n)
    L = math.pi / 4
    u = rng.uniform(0, L, n)
    v = rng.uniform(0, L, n)
    return {
        "circle images t=1e-2": lambda k: _circle(1e-2, a, b, EvalOptions(1e-12, Method.IMAGES), k),
        "circle spectral t=1": lambda k: _circle(1.0, a, b, EvalOptions(1e-12, Method.SPECTRAL), k),
        "dirichlet images t=1e-3": lambda k: _dirichlet(1e-3, L, u, v, EvalOptions(1e-12, Method.IMAGES), k),
        "dirichlet spectral t=1e-2": lambda k: _dirichlet(1e-2, L, u, v, EvalOptions(1e-12, Method.SPECTRAL), k),
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[1_000, 100_000, 1_000_000])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    if "cython" not in _backend.BACKENDS:
        print("compiled backend not built; only the numpy fallback is available")
        return
    py, cy = _backend.BACKENDS["python"], _backend.BACKENDS["cython"]
    rng = np.random.default_rng(0)
    print(f"{'routine':28s} {'n':>9s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s} {'max diff':>10s}")
    for n in args.sizes:
        for name, run in cases(n, rng).items():
            tp, vp = best_time(lambda: run(py), args.repeat)
            tc, vc = best_time(lambda: run(cy), args.repeat)
            diff = float(np.max(np.abs(np.asarray(vp) - np.asarray(vc))))
            print(f"{name:28s} {n:9d} {tp:11.4f} {tc:11.4f} {tp / tc:8.2f} {diff:10.2e}")


if __name__ == "__main__":
    main()
