"""Pure-Python motif-counting kernel.

Fallback twin of the compiled extension ``rdsbm._motifs``: identical
interface and identical counts, selected at import time by
:mod:`rdsbm.metrics` when the extension is unavailable.  Adjacency rows are
packed into Python integers used as bitsets; candidate sets at each search
level are intersections of the rows of already-placed neighbours, and the
last level is counted with a popcount instead of being enumerated.
"""
from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def prepare(y: np.ndarray) -> list[int]:
    """Pack an (n, n) 0/1 adjacency matrix into per-row integer bitsets."""
    y = np.asarray(y, dtype=np.uint8)
    packed = np.packbits(y, axis=1, bitorder="little")
    return [int.from_bytes(row.tobytes(), "little") for row in packed]


def count_injective(rows: list[int], n: int, prev: tuple[tuple[int, ...], ...]) -> int:
    """Count ordered injective maps of a motif into the graph.

    ``prev[t]`` lists the earlier search levels whose placed vertex must be
    adjacent to the vertex placed at level ``t``; the caller fixes the
    level-to-motif-vertex order.
    """
    k = len(prev)
    full = (1 << n) - 1
    assigned = [0] * k

    def rec(level: int, used: int) -> int:
        ps = prev[level]
        if ps:
            cand = rows[assigned[ps[0]]]
            for p in ps[1:]:
                cand &= rows[assigned[p]]
        else:
            cand = full
        cand &= ~used
        if level == k - 1:
            return cand.bit_count()
        total = 0
        m = cand
        while m:
            bit = m & -m
            assigned[level] = bit.bit_length() - 1
            total += rec(level + 1, used | bit)
            m ^= bit
        return total

    return rec(0, 0)
