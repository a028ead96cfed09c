"""Deterministic 64-bit seed derivation (splitmix64).

Replicate streams and internal samplers derive their seeds through this
fixed hash so that runs reproduce across machines and across process
boundaries.
"""
from __future__ import annotations

_MASK = (1 << 64) - 1


def splitmix64(state: int) -> int:
    """One splitmix64 output step for the given 64-bit state."""
    z = (state + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive_seed(master: int, *indices: int) -> int:
    """Fold ``master`` and the index path into one 64-bit seed."""
    state = master & _MASK
    for idx in indices:
        state = splitmix64(state ^ (idx & _MASK))
    return splitmix64(state)
