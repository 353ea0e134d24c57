#!/usr/bin/env python3
"""Benchmark the compiled kernel core against the numpy fallback.

Run from the repo root after building the extension:

    python benchmarks/bench_backends.py
"""

import time

import numpy as np

from nillab import backend
from nillab.systems import ALPHA, BETA


def _time(fn, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench(kernels):
    res = {}
    p0 = np.zeros(3)
    res["orbit 1e6 steps"] = _time(lambda: kernels.orbit_heis(ALPHA, BETA, 0.0, p0, 1_000_000))

    orb = kernels.orbit_heis(ALPHA, BETA, 0.0, p0, 3 * 64 + 1)
    F = np.ascontiguousarray(np.exp(2j * np.pi * orb[:, 2]))
    res["cube sum k=3, n_side=64, x50"] = _time(
        lambda: [kernels.cube_sum(F, 64, 3) for _ in range(50)])

    pts = np.random.default_rng(0).random((600, 3))
    res["pairwise diameter, 600 pts"] = _time(
        lambda: kernels.max_pairwise_heis(pts, 3), repeat=2)

    v = np.ascontiguousarray(np.exp(2j * np.pi * np.random.default_rng(1).random(1_000_000)))
    res["compensated sum 1e6"] = _time(lambda: kernels.csum(v))
    return res


def main():
    compiled = backend.compiled_kernels_or_none()
    numpy_k = backend.numpy_kernels
    rows = []
    nres = bench(numpy_k)
    cres = bench(compiled) if compiled is not None else None
    for key in nres:
        row = [key, f"{nres[key]*1e3:10.2f} ms"]
        if cres:
            row.append(f"{cres[key]*1e3:10.2f} ms")
            row.append(f"{nres[key]/cres[key]:6.1f}x")
        rows.append(row)
    header = ["kernel", "numpy"] + (["compiled", "speedup"] if cres else [])
    widths = [max(len(str(r[i])) for r in [header] + rows) for i in range(len(header))]
    for r in [header] + rows:
        print("  ".join(str(c).ljust(w) for c, w in zip(r, widths)))
    if compiled is None:
        print("\n(compiled extension not built; showing numpy fallback only)")


if __name__ == "__main__":
    main()
