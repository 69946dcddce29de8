"""Benchmark the quantile-sketch compression kernel: compiled vs pure Python.

Run:  python3 benchmarks/bench_tdigest.py [--points N] [--delta D]

The kernel is the hot inner loop of preprocessing (every numeric value of
every field passes through it), which is why it ships as a compiled
extension with a pure-Python twin selected at import.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from foundry.stats import _tdkernel_py

try:
    from foundry.stats import _tdkernel  # type: ignore[attr-defined]
except ImportError:
    _tdkernel = None


def bench_kernel(kernel, means: np.ndarray, weights: np.ndarray, delta: float,
                 repeats: int) -> float:
    start = time.perf_counter()
    for _ in range(repeats):
        kernel.compress(means, weights, delta)
    return (time.perf_counter() - start) / repeats


def bench_insert_path(points: int, delta: float, force_python: bool) -> float:
    # End-to-end: stream `points` values through a digest, buffer flushes included.
    import importlib
    import os

    if force_python:
        os.environ["FOUNDRY_PURE_PYTHON"] = "1"
    else:
        os.environ.pop("FOUNDRY_PURE_PYTHON", None)
    import foundry.stats.tdigest as td

    importlib.reload(td)
    rng = np.random.default_rng(0)
    data = rng.normal(size=points)
    digest = td.TDigest(delta=delta)
    start = time.perf_counter()
    digest.extend(data)
    digest.compress()
    elapsed = time.perf_counter() - start
    os.environ.pop("FOUNDRY_PURE_PYTHON", None)
    importlib.reload(td)
    return elapsed


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--points", type=int, default=1_000_000)
    parser.add_argument("--delta", type=float, default=100.0)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    rng = np.random.default_rng(1)
    n = int(5 * args.delta) + 200  # typical flush size: buffer + centroids
    means = np.sort(rng.normal(size=n))
    weights = rng.uniform(0.5, 4.0, size=n)

    print(f"compress kernel, {n} centroids, delta={args.delta}, {args.repeats} repeats")
    t_py = bench_kernel(_tdkernel_py, means, weights, args.delta, args.repeats)
    print(f"  python   {t_py * 1e6:10.1f} us/call")
    if _tdkernel is not None:
        t_c = bench_kernel(_tdkernel, means, weights, args.delta, args.repeats)
        print(f"  compiled {t_c * 1e6:10.1f} us/call   ({t_py / t_c:.1f}x faster)")
        cm, cw = _tdkernel.compress(means, weights, args.delta)
        pm, pw = _tdkernel_py.compress(means, weights, args.delta)
        assert np.array_equal(cm, pm) and np.array_equal(cw, pw), "kernels disagree"
        print("  outputs bit-identical")
    else:
        print("  compiled kernel unavailable (pure-Python build)")

    print(f"\nend-to-end digest build, {args.points} points")
    t_stream_py = bench_insert_path(args.points, args.delta, force_python=True)
    print(f"  python   {t_stream_py:8.3f} s  ({args.points / t_stream_py / 1e6:.2f} M points/s)")
    if _tdkernel is not None:
        t_stream_c = bench_insert_path(args.points, args.delta, force_python=False)
        print(f"  compiled {t_stream_c:8.3f} s  ({args.points / t_stream_c / 1e6:.2f} M points/s, "
              f"{t_stream_py / t_stream_c:.1f}x faster)")


if __name__ == "__main__":
    main()
