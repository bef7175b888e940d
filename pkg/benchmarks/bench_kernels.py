"""Time the compiled kernels against the pure-Python fallback.

Usage: ``python3 benchmarks/bench_kernels.py [--repeat N]``
"""

import argparse
import timeit

import numpy as np

from sustain_models import _backend
from sustain_models._backend import ZERO_FLUX


def cases(k):
    steps = np.full(20_000, 0.01)
    u = np.random.default_rng(0).uniform(0, 1, 2_000)
    return {
        "lorenz_rk4 (20k steps)": lambda: k.lorenz_rk4(10.0, 28.0, 8 / 3, [1.0, 1.0, 1.0], steps),
        "lorenz_lyapunov (10k steps x 2)": lambda: k.lorenz_lyapunov(
            10.0, 28.0, 8 / 3, [1.0, 1.0, 1.0], [1e-8, 0.0, 0.0], 0.01, 1_000, 10, 900),
        "lotka_volterra_rk4 (20k steps)": lambda: k.lotka_volterra_rk4(
            1.0, 0.1, 0.02, 0.4, [40.0, 9.0], steps),
        "laplacian_1d (2k cells)": lambda: k.laplacian_1d(u, 0.01, ZERO_FLUX),
        "upwind_1d (2k cells)": lambda: k.upwind_1d(u, 0.5, 0.01, ZERO_FLUX),
    }


def best(fn, repeat):
    number = 1
    while timeit.timeit(fn, number=number) < 0.05:
        number *= 2
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _backend.compiled_kernels is None:
        raise SystemExit("compiled extension not built; reinstall without SUSTAIN_MODELS_NO_EXT")
    py = cases(_backend.python_kernels)
    cc = cases(_backend.compiled_kernels)
    print(f"{'kernel':34s} {'python':>12s} {'compiled':>12s} {'speedup':>9s}")
    for name in py:
        tp, tc = best(py[name], args.repeat), best(cc[name], args.repeat)
        print(f"{name:34s} {tp * 1e3:10.3f}ms {tc * 1e3:10.3f}ms {tp / tc:8.1f}x")


if __name__ == "__main__":
    main()
