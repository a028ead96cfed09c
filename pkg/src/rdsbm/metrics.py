"""Subgraph densities, a truncated subgraph-distance, and step-graphon fits.

The injective density of a motif ``F`` with ``k`` vertices in a graph ``G``
is the number of injective adjacency-preserving maps from ``F`` to ``G``
divided by the number of injective k-tuples ``n(n-1)...(n-k+1)``.  The same
density for a step graphon is the closed-form sum over class assignments.
Distances between graphs and/or graphons are weighted sums of absolute
density differences over a fixed enumeration of connected motifs.

Counting is delegated to a compiled kernel when available, otherwise to a
pure-Python twin; set ``RDSBM_MOTIF_BACKEND=python`` (or ``compiled``) to
force a choice.  Beyond a per-backend work budget the density is estimated
from uniformly sampled injective tuples and flagged as approximate.
"""
from __future__ import annotations

import itertools
import math
import os
import string
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .graphon import SbmParams
from .sampler import RdsSample
from .seeds import derive_seed
from . import _motifs_py

__all__ = [
    "Motif",
    "MotifDensity",
    "EmpiricalGraphon",
    "MOTIF_BACKEND",
    "connected_motifs",
    "motif_density_graph",
    "motif_density_step_graphon",
    "dsub_truncated",
    "build_empirical_graphon",
]


def _load_backend():
    choice = os.environ.get("RDSBM_MOTIF_BACKEND", "auto")
    if choice == "python":
        return _motifs_py
    try:
        from . import _motifs  # type: ignore[attr-defined]
        return _motifs
    except ImportError:
        if choice == "compiled":
            raise ImportError("compiled motif kernel requested but not built")
        return _motifs_py


_backend = _load_backend()
MOTIF_BACKEND = _backend.BACKEND_NAME

# limit on the number of partial tuples enumerated before switching to
# sampling; the compiled kernel affords much more work per second
EXACT_BUDGET = {"compiled": 200_000_000, "python": 2_000_000}
SAMPLE_DRAWS = 100_000
_SAMPLE_SEED_TAG = 0x6D0715


@dataclass(frozen=True)
class Motif:
    """A small simple graph given by its vertex count and edge list."""

    n_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n_vertices < 2:
            raise ValueError("a motif needs at least two vertices")
        seen = set()
        canon = []
        for edge in self.edges:
            a, b = edge
            if a == b:
                raise ValueError("motifs may not contain loops")
            if not (0 <= a < self.n_vertices and 0 <= b < self.n_vertices):
                raise ValueError(f"edge {edge} out of range")
            a, b = min(a, b), max(a, b)
            if (a, b) in seen:
                raise ValueError(f"duplicate edge {edge}")
            seen.add((a, b))
            canon.append((a, b))
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    @property
    def degrees(self) -> list[int]:
        deg = [0] * self.n_vertices
        for a, b in self.edges:
            deg[a] += 1
            deg[b] += 1
        return deg


class MotifDensity(float):
    """A density value carrying its exact/approximate provenance.

    Behaves as a plain float; ``exact`` is False when the value came from
    tuple sampling, in which case ``stderr`` is the Monte Carlo standard
    error of the estimate.
    """

    exact: bool
    stderr: float

    def __new__(cls, value: float, exact: bool = True, stderr: float = 0.0):
        obj = super().__new__(cls, value)
        obj.exact = exact
        obj.stderr = stderr
        return obj


def _connected(n_vertices: int, edges) -> bool:
    parent = list(range(n_vertices))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in edges:
        parent[find(a)] = find(b)
    return len({find(v) for v in range(n_vertices)}) == 1


def _canonical_edges(n_vertices: int, edges) -> tuple[tuple[int, int], ...]:
    best = None
    for perm in itertools.permutations(range(n_vertices)):
        relabeled = tuple(sorted(tuple(sorted((perm[a], perm[b]))) for a, b in edges))
        if best is None or relabeled < best:
            best = relabeled
    return best


@lru_cache(maxsize=None)
def connected_motifs(max_k: int) -> tuple[Motif, ...]:
    """Fixed enumeration of connected motifs with at most ``max_k`` vertices.

    One representative per isomorphism class, ordered by vertex count, then
    edge count, then lexicographic (canonical) edge list.  This order
    defines the weights of :func:`dsub_truncated`.
    """
    if not 2 <= max_k <= 5:
        raise ValueError("max_k must be between 2 and 5")
    motifs = []
    for k in range(2, max_k + 1):
        possible = list(itertools.combinations(range(k), 2))
        classes = set()
        for n_edges in range(k - 1, len(possible) + 1):
            for edges in itertools.combinations(possible, n_edges):
                if not _connected(k, edges):
                    continue
                classes.add(_canonical_edges(k, edges))
        for edges in sorted(classes, key=lambda e: (len(e), e)):
            motifs.append(Motif(k, edges))
    return tuple(motifs)


def _enumeration_order(motif: Motif):
    """Vertex placement order plus, per level, the earlier adjacent levels.

    Greedy order: place the highest-degree vertex first, then repeatedly
    the vertex with the most edges into the placed set (ties by degree,
    then by index), which keeps the candidate sets small.
    """
    k = motif.n_vertices
    deg = motif.degrees
    adj = [set() for _ in range(k)]
    for a, b in motif.edges:
        adj[a].add(b)
        adj[b].add(a)
    order = [max(range(k), key=lambda v: (deg[v], -v))]
    placed = set(order)
    while len(order) < k:
        best = max(
            (v for v in range(k) if v not in placed),
            key=lambda v: (len(adj[v] & placed), deg[v], -v),
        )
        order.append(best)
        placed.add(best)
    level_of = {v: t for t, v in enumerate(order)}
    prev = tuple(
        tuple(sorted(level_of[u] for u in adj[v] if level_of[u] < t))
        for t, v in enumerate(order)
    )
    return tuple(order), prev


def _sampled_density(motif: Motif, y: np.ndarray, n: int, draws: int, rng: np.random.Generator):
    k = motif.n_vertices
    kept = 0
    hits = 0
    while kept < draws:
        batch = rng.integers(0, n, size=(max(2 * (draws - kept), 1000), k))
        distinct = np.ones(batch.shape[0], dtype=bool)
        for a in range(k):
            for b in range(a + 1, k):
                distinct &= batch[:, a] != batch[:, b]
        batch = batch[distinct]
        if batch.shape[0] > draws - kept:
            batch = batch[: draws - kept]
        ok = np.ones(batch.shape[0], dtype=bool)
        for a, b in motif.edges:
            ok &= y[batch[:, a], batch[:, b]] != 0
        kept += batch.shape[0]
        hits += int(ok.sum())
    value = hits / draws
    stderr = math.sqrt(max(value * (1.0 - value), 0.0) / draws)
    return value, stderr


def motif_density_graph(motif: Motif, sample: RdsSample, *, budget: int | None = None,
                        draws: int = SAMPLE_DRAWS) -> MotifDensity:
    """Injective density of ``motif`` in the sample graph.

    Exact enumeration while the partial-tuple bound ``(n)_{k-1}`` stays
    within the backend budget; beyond it the density is estimated from
    ``draws`` uniformly sampled injective tuples (deterministic seed) and
    the result is flagged approximate with its standard error attached.
    """
    n = sample.n
    k = motif.n_vertices
    if k > n:
        raise ValueError(f"motif has {k} vertices but the graph only {n}")
    if k > 5:
        raise ValueError("graph densities are enumerated only up to 5 vertices")
    if budget is None:
        budget = EXACT_BUDGET[MOTIF_BACKEND]
    if math.perm(n, k - 1) <= budget:
        _, prev = _enumeration_order(motif)
        handle = _backend.prepare(sample.y)
        count = _backend.count_injective(handle, n, prev)
        return MotifDensity(count / math.perm(n, k))
    seed = derive_seed(_SAMPLE_SEED_TAG, n, k, *[a * 64 + b for a, b in motif.edges])
    rng = np.random.default_rng(seed)
    value, stderr = _sampled_density(motif, sample.y, n, draws, rng)
    return MotifDensity(value, exact=False, stderr=stderr)


def _weights_and_matrix(g):
    if isinstance(g, SbmParams):
        return g.alpha, g.pi
    if isinstance(g, EmpiricalGraphon):
        return g.weights, g.pi
    raise TypeError(f"expected a step graphon, got {type(g).__name__}")


def motif_density_step_graphon(motif: Motif, g) -> float:
    """Closed-form density of ``motif`` in a step graphon (``Q^k`` terms)."""
    k = motif.n_vertices
    if k > 8:
        raise ValueError("step-graphon densities are summed only up to 8 vertices")
    weights, mat = _weights_and_matrix(g)
    letters = string.ascii_lowercase
    subscripts = []
    operands = []
    for a, b in motif.edges:
        subscripts.append(letters[a] + letters[b])
        operands.append(mat)
    for v in range(k):
        subscripts.append(letters[v])
        operands.append(weights)
    return float(np.einsum(",".join(subscripts) + "->", *operands, optimize=True))


def _density_of(motif: Motif, obj) -> float:
    if isinstance(obj, RdsSample):
        return float(motif_density_graph(motif, obj))
    return motif_density_step_graphon(motif, obj)


def dsub_truncated(a, b, max_k: int) -> float:
    """Weighted density distance over connected motifs with <= max_k vertices.

    The i-th motif of :func:`connected_motifs` contributes
    ``2**-i * |t(F_i, a) - t(F_i, b)|``; arguments may be sample graphs or
    step graphons in any combination.
    """
    total = 0.0
    for i, motif in enumerate(connected_motifs(max_k), start=1):
        total += 2.0 ** -i * abs(_density_of(motif, a) - _density_of(motif, b))
    return total


@dataclass(frozen=True, eq=False)
class EmpiricalGraphon:
    """Step graphon fitted from estimated weights and connection matrix.

    Unlike :class:`~rdsbm.graphon.SbmParams`, zero weights are allowed
    (empty fitted classes) and the matrix entries may sit on the clamped
    boundary.
    """

    weights: np.ndarray
    pi: np.ndarray
    cutpoints: np.ndarray


def build_empirical_graphon(weights, pi_hat) -> EmpiricalGraphon:
    """Assemble a step graphon from fitted weights and matrix.

    Cutpoints are the prefix sums of the weights; the matrix is
    symmetrized by averaging (inputs should already be symmetric).
    """
    weights = np.asarray(weights, dtype=float)
    pi_hat = np.asarray(pi_hat, dtype=float)
    if np.any(weights < 0):
        raise ValueError("weights must be nonnegative")
    if abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError("weights must sum to 1")
    q = weights.shape[0]
    if pi_hat.shape != (q, q):
        raise ValueError("matrix shape does not match the weights")
    cut = np.concatenate(([0.0], np.cumsum(weights)))
    cut[-1] = 1.0
    return EmpiricalGraphon(weights=weights, pi=(pi_hat + pi_hat.T) / 2.0, cutpoints=cut)
