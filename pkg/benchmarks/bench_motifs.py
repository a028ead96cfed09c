#!/usr/bin/env python3
"""Benchmark the compiled motif-counting kernel against the Python twin.

Counts a few connected motifs exactly in simulated sample graphs of
increasing size with both backends and reports timings plus the speedup.

Run: python benchmarks/bench_motifs.py
"""
import math
import time

import numpy as np

from rdsbm import SbmParams, complete_graph, simulate_walk
from rdsbm import _motifs_py
from rdsbm.metrics import Motif, _enumeration_order

try:
    from rdsbm import _motifs as _motifs_c
except ImportError:
    _motifs_c = None

MOTIFS = {
    "edge": Motif(2, ((0, 1),)),
    "path-3": Motif(3, ((0, 1), (1, 2))),
    "triangle": Motif(3, ((0, 1), (0, 2), (1, 2))),
    "4-cycle": Motif(4, ((0, 1), (1, 2), (2, 3), (0, 3))),
}


def sample_graph(n, seed):
    params = SbmParams([2.0 / 3.0, 1.0 / 3.0], [[0.7, 0.4], [0.4, 0.8]])
    rng = np.random.default_rng(seed)
    x, z = simulate_walk(params, n, rng)
    return complete_graph(params, x, z, rng)


def time_backend(backend, y, n, prev, repeats=3):
    handle = backend.prepare(y)
    best = math.inf
    count = None
    for _ in range(repeats):
        start = time.perf_counter()
        count = backend.count_injective(handle, n, prev)
        best = min(best, time.perf_counter() - start)
    return count, best


def main():
    if _motifs_c is None:
        print("compiled kernel not built; showing the Python backend only")
    sizes = [100, 200, 400, 800]
    header = f"{'n':>5} {'motif':<10} {'count':>14} {'python':>10} {'compiled':>10} {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for n in sizes:
        sample = sample_graph(n, seed=n)
        for name, motif in MOTIFS.items():
            if motif.n_vertices == 4 and n > 400:
                continue  # quartic cost: keep the run short
            _, prev = _enumeration_order(motif)
            count_py, t_py = time_backend(_motifs_py, sample.y, n, prev)
            if _motifs_c is not None:
                count_c, t_c = time_backend(_motifs_c, sample.y, n, prev)
                assert count_c == count_py, f"backend mismatch on {name} at n={n}"
                print(f"{n:>5} {name:<10} {count_py:>14} {t_py:>9.4f}s {t_c:>9.4f}s "
                      f"{t_py / t_c:>7.1f}x")
            else:
                print(f"{n:>5} {name:<10} {count_py:>14} {t_py:>9.4f}s {'-':>10} {'-':>8}")


if __name__ == "__main__":
    main()
