"""Compare the compiled kernels against the numpy fallback on representative sizes.

Run with ``python benchmarks/bench_kernels.py``; prints one line per kernel
with the median time of each backend and the speed-up.
"""

import argparse
import timeit

import numpy as np

from kamspectra import _kernels_py

try:
    from kamspectra import _kernels
except ImportError:  # pragma: no cover - depends on the build
    _kernels = None


def cases(rng):
    k = 20.0
    phi = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
    g = np.arange(-12, 13)
    Q = np.array([(i, j) for i in g for j in g if (i, j) != (0, 0)], dtype=float) * np.pi
    n = 600
    basis = rng.integers(-20, 21, size=(n, 2)).astype(np.int64)
    diag = rng.standard_normal(n)
    grid = rng.standard_normal((81, 81)) + 1j * rng.standard_normal((81, 81))
    offset = np.array([40, 40], dtype=np.int64)
    vals = np.exp(1j * np.linspace(0, 6 * np.pi, 20000)) * (2 + np.cos(np.arange(20000)))
    return {
        "gap_scan": lambda m: m.gap_scan(phi, Q, k),
        "fill_matrix": lambda m: m.fill_matrix(basis, diag, grid, offset),
        "winding_phase": lambda m: m.winding_phase(vals),
        "open_phase": lambda m: m.open_phase(vals),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<14} {'python [ms]':>12} {'compiled [ms]':>14} {'speed-up':>9}")
    for name, fn in cases(rng).items():
        tp = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat))
        if _kernels is None:
            print(f"{name:<14} {tp * 1e3:12.3f} {'n/a':>14} {'n/a':>9}")
            continue
        tc = min(timeit.repeat(lambda: fn(_kernels), number=1, repeat=args.repeat))
        print(f"{name:<14} {tp * 1e3:12.3f} {tc * 1e3:14.3f} {tp / tc:9.2f}")


if __name__ == "__main__":
    main()
