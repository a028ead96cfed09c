"""Random-walk exploration of a step graphon and the completed sample graph.

The walk starts uniformly on [0, 1] and jumps according to the graphon's
transition kernel; for a step graphon this is exact: from class ``q`` the
next class is ``r`` with probability ``pi[q, r] * alpha[r] / pi_bar_q`` and
the position is then uniform on ``I_r``.  The visited chain is completed
into a graph by connecting every non-consecutive pair ``{i, j}``
independently with probability ``pi[z_i, z_j]``; consecutive vertices are
always connected.
"""
from __future__ import annotations

import json
import math
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .graphon import SbmParams, biased_profile, check_connected

__all__ = [
    "RdsSample",
    "CountStats",
    "EmpiricalCdf",
    "simulate_walk",
    "complete_graph",
    "count_stats",
    "sample_to_document",
    "sample_from_document",
    "save_sample",
    "load_sample",
]


@dataclass(frozen=True, eq=False)
class RdsSample:
    """One realized walk-and-completion sample.

    Attributes
    ----------
    x : (n,) array
        Walk positions in [0, 1].
    z : (n,) int array or None
        0-based class labels; ``None`` when the labels were not observed
        (samples loaded from documents that omit them).
    y : (n, n) uint8 array
        Symmetric adjacency with zero diagonal; ``y[i, i+1] == 1`` for
        every step of the chain.
    """

    x: np.ndarray
    z: np.ndarray | None
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.y, dtype=np.uint8)
        z = self.z
        if z is not None:
            z = np.asarray(z, dtype=np.int64)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "z", z)
        n = x.shape[0]
        if n < 2:
            raise ValueError("a sample needs at least two vertices")
        if np.any(x < 0) or np.any(x > 1):
            raise ValueError("positions must lie in [0, 1]")
        if z is not None and z.shape != (n,):
            raise ValueError("labels must have the same length as positions")
        if y.shape != (n, n):
            raise ValueError("adjacency must be n-by-n")
        if np.any(y > 1):
            raise ValueError("adjacency must be binary")
        if np.any(np.diagonal(y) != 0):
            raise ValueError("adjacency must have a zero diagonal")
        if not np.array_equal(y, y.T):
            raise ValueError("adjacency must be symmetric")
        steps = np.arange(n - 1)
        if np.any(y[steps, steps + 1] != 1):
            raise ValueError("consecutive walk vertices must be connected")

    @property
    def n(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True, eq=False)
class CountStats:
    """Sufficient statistics of a labeled sample.

    ``edges[q, r]`` and ``non_edges[q, r]`` count unordered pairs ``i < j``
    with the given (unordered) type pair, so ``edges + non_edges`` equals
    ``N_q * N_r`` off the diagonal and ``N_q * (N_q - 1) / 2`` on it.
    """

    n_per_class: np.ndarray
    edges: np.ndarray
    non_edges: np.ndarray
    last_type: int

    def __post_init__(self):
        object.__setattr__(self, "n_per_class", np.asarray(self.n_per_class, dtype=float))
        object.__setattr__(self, "edges", np.asarray(self.edges, dtype=float))
        object.__setattr__(self, "non_edges", np.asarray(self.non_edges, dtype=float))

    @property
    def q(self) -> int:
        return self.n_per_class.shape[0]

    @property
    def n(self) -> float:
        return float(self.n_per_class.sum())

    @property
    def last_indicator(self) -> np.ndarray:
        ind = np.zeros(self.q)
        ind[self.last_type] = 1.0
        return ind


@dataclass(frozen=True, eq=False)
class EmpiricalCdf:
    """Empirical distribution of the walk positions."""

    sorted_positions: np.ndarray

    def __post_init__(self):
        pos = np.sort(np.asarray(self.sorted_positions, dtype=float))
        pos.flags.writeable = False
        object.__setattr__(self, "sorted_positions", pos)
        if pos.size == 0:
            raise ValueError("empty sample")
        if pos[0] < 0 or pos[-1] > 1:
            raise ValueError("positions must lie in [0, 1]")

    @property
    def n(self) -> int:
        return self.sorted_positions.shape[0]

    def eval(self, x) -> float:
        """Proportion of positions below or at ``x``."""
        x = np.asarray(x, dtype=float)
        if np.any(x < 0) or np.any(x > 1):
            raise ValueError("argument must lie in [0, 1]")
        val = np.searchsorted(self.sorted_positions, x, side="right") / self.n
        if val.ndim == 0:
            return float(val)
        return val

    def inverse(self, v: float) -> float:
        """Generalized inverse ``inf{x: eval(x) >= v}``.

        For ``v`` in (0, 1] this is the order statistic of rank
        ``ceil(v * n)``; for ``v == 0`` every x qualifies, so the infimum
        over [0, 1] is 0.
        """
        if v < 0 or v > 1:
            raise ValueError("argument must lie in [0, 1]")
        if v == 0:
            return 0.0
        # the count constraint is integral; guard the ceil against float fuzz
        rank = math.ceil(v * self.n - 1e-12)
        rank = min(max(rank, 1), self.n)
        return float(self.sorted_positions[rank - 1])


def simulate_walk(params: SbmParams, n: int, rng: np.random.Generator):
    """Simulate ``n`` steps of the exploring walk.

    Returns
    -------
    x : (n,) array of positions
    z : (n,) array of 0-based class labels, derived from the positions
    """
    if n < 2:
        raise ValueError("need at least two steps")
    if not check_connected(params):
        raise ValueError("parameters describe a disconnected graphon")
    part = params.partition
    prof = biased_profile(params)
    trans = params.pi * params.alpha[None, :] / prof.pi_bar_by_class[:, None]
    cum_rows = np.cumsum(trans, axis=1)
    cum_rows[:, -1] = 1.0
    cum_lists = [row.tolist() for row in cum_rows]
    lo = part.cutpoints[:-1].tolist()
    width = params.alpha.tolist()
    n_classes = params.q

    u_pos = rng.random(n)
    u_cls = rng.random(n - 1)
    x = np.empty(n)
    x[0] = u_pos[0]
    cls = part.classify(x[0])
    for m in range(1, n):
        nxt = bisect_right(cum_lists[cls], u_cls[m - 1])
        if nxt >= n_classes:
            nxt = n_classes - 1
        x[m] = lo[nxt] + width[nxt] * u_pos[m]
        cls = nxt
    z = part.classify(x)
    return x, z


def complete_graph(params: SbmParams, x: np.ndarray, z: np.ndarray, rng: np.random.Generator) -> RdsSample:
    """Complete a walk into a sample graph.

    Chain edges are deterministic; every other unordered pair is connected
    independently with the probability given by its endpoint classes.
    """
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=np.int64)
    n = x.shape[0]
    if not np.array_equal(params.partition.classify(x), z):
        raise ValueError("labels are inconsistent with the positions")
    probs = params.pi[np.ix_(z, z)]
    u = rng.random((n, n))
    upper = np.triu(u < probs, k=2)
    y = (upper | upper.T).astype(np.uint8)
    steps = np.arange(n - 1)
    y[steps, steps + 1] = 1
    y[steps + 1, steps] = 1
    return RdsSample(x=x, z=z, y=y)


def count_stats(sample: RdsSample) -> CountStats:
    """Sufficient statistics (class sizes, pair edge counts, last type)."""
    if sample.z is None:
        raise ValueError("sample has no labels")
    z = sample.z
    n_classes = int(z.max()) + 1
    one_hot = np.zeros((sample.n, n_classes))
    one_hot[np.arange(sample.n), z] = 1.0
    n_per_class = one_hot.sum(axis=0)
    both = one_hot.T @ sample.y.astype(float) @ one_hot
    edges = both.copy()
    np.fill_diagonal(edges, np.diagonal(both) / 2.0)
    totals = np.outer(n_per_class, n_per_class)
    np.fill_diagonal(totals, n_per_class * (n_per_class - 1) / 2.0)
    non_edges = totals - edges
    return CountStats(
        n_per_class=n_per_class,
        edges=edges,
        non_edges=non_edges,
        last_type=int(z[-1]),
    )


def sample_to_document(sample: RdsSample) -> dict:
    """Serializable document with fields ``n``, ``x``, ``z`` and ``y``.

    Labels are 1-based in the document and omitted when unobserved; edges
    are 1-based pairs ``[i, j]`` with ``i < j``, chain edges included.
    """
    n = sample.n
    ii, jj = np.nonzero(np.triu(sample.y, k=1))
    doc = {
        "n": n,
        "x": [float(v) for v in sample.x],
        "y": [[int(i) + 1, int(j) + 1] for i, j in zip(ii, jj)],
    }
    if sample.z is not None:
        doc["z"] = [int(v) + 1 for v in sample.z]
    return doc


def sample_from_document(doc: dict) -> RdsSample:
    n = int(doc["n"])
    x = np.asarray(doc["x"], dtype=float)
    if x.shape != (n,):
        raise ValueError("field 'x' must hold n positions")
    z = None
    if doc.get("z") is not None:
        z = np.asarray(doc["z"], dtype=np.int64) - 1
    y = np.zeros((n, n), dtype=np.uint8)
    for i, j in doc["y"]:
        if not (1 <= i < j <= n):
            raise ValueError(f"bad edge pair [{i}, {j}]")
        y[i - 1, j - 1] = 1
        y[j - 1, i - 1] = 1
    return RdsSample(x=x, z=z, y=y)


def save_sample(sample: RdsSample, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(sample_to_document(sample), fh)
        fh.write("\n")


def load_sample(path) -> RdsSample:
    with open(path, encoding="utf-8") as fh:
        return sample_from_document(json.load(fh))
