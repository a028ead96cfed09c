"""Step-graphon parameterization of a stochastic block model.

A model with ``Q`` classes is described by class weights ``alpha`` (summing
to one) and a symmetric connection matrix ``pi``.  The unit interval is cut
into consecutive classes ``I_q = [A_{q-1}, A_q)`` with ``A_q`` the partial
sums of ``alpha``, and the graphon value at ``(x, y)`` is the connection
probability between the classes containing ``x`` and ``y``.

The module also carries the stationary-measure machinery of the exploring
random walk: the mean connectivities ``pi_bar_q`` and ``pi_bar``, the
size-biased weights ``alpha_tilde``, and the piecewise-affine distribution
function ``gamma_cdf`` with its inverse.  These quantities drive the
sampling bias of walk-based exploration and its correction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SbmParams",
    "ClassPartition",
    "BiasedProfile",
    "graphon_eval",
    "biased_profile",
    "gamma_cdf",
    "gamma_inverse",
    "check_connected",
]

ALPHA_SUM_TOL = 1e-12


def _sum(values: np.ndarray) -> float:
    # compensated summation only pays off for many classes
    if values.size > 16:
        return math.fsum(values.tolist())
    return float(np.sum(values))


def _as_readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class SbmParams:
    """Validated block-model parameter set ``(alpha, pi)``.

    Parameters
    ----------
    alpha : array of shape (Q,)
        Strictly positive class weights summing to one (within 1e-12).
    pi : array of shape (Q, Q)
        Symmetric matrix of connection probabilities, entries strictly
        inside (0, 1).

    Instances are immutable and safe to share between worker processes.
    """

    alpha: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        alpha = _as_readonly(np.atleast_1d(self.alpha))
        pi = _as_readonly(np.atleast_2d(self.pi))
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "pi", pi)
        q = alpha.shape[0]
        if alpha.ndim != 1 or q < 1:
            raise ValueError("alpha must be a non-empty vector")
        if pi.shape != (q, q):
            raise ValueError(f"pi must have shape ({q}, {q}), got {pi.shape}")
        if not np.all(alpha > 0):
            raise ValueError("every class weight must be strictly positive")
        if abs(_sum(alpha) - 1.0) > ALPHA_SUM_TOL:
            raise ValueError(f"class weights must sum to 1, got {_sum(alpha)!r}")
        if not np.array_equal(pi, pi.T):
            raise ValueError("pi must be exactly symmetric")
        if not (np.all(pi > 0.0) and np.all(pi < 1.0)):
            raise ValueError("connection probabilities must lie strictly in (0, 1)")

    @classmethod
    def unchecked(cls, alpha, pi) -> "SbmParams":
        """Bypass validation (degenerate or boundary parameter sets)."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "alpha", _as_readonly(np.atleast_1d(alpha)))
        object.__setattr__(obj, "pi", _as_readonly(np.atleast_2d(pi)))
        return obj

    @property
    def q(self) -> int:
        return self.alpha.shape[0]

    @property
    def partition(self) -> "ClassPartition":
        return ClassPartition.from_weights(self.alpha)


@dataclass(frozen=True, eq=False)
class ClassPartition:
    """Cutpoints ``A_0 = 0 < A_1 < ... < A_Q = 1`` of the class intervals.

    Interval ``I_q`` is half-open ``[A_{q-1}, A_q)``; the point 1 belongs to
    the last class, which makes class lookup total on [0, 1].
    """

    cutpoints: np.ndarray

    def __post_init__(self):
        cut = _as_readonly(self.cutpoints)
        object.__setattr__(self, "cutpoints", cut)
        if cut.ndim != 1 or cut.shape[0] < 2:
            raise ValueError("cutpoints must contain at least both endpoints")
        if cut[0] != 0.0 or cut[-1] != 1.0:
            raise ValueError("cutpoints must start at 0 and end at 1")
        if not np.all(np.diff(cut) > 0):
            raise ValueError("cutpoints must be strictly increasing")

    @classmethod
    def from_weights(cls, weights: np.ndarray) -> "ClassPartition":
        cut = np.concatenate(([0.0], np.cumsum(weights)))
        cut[-1] = 1.0
        return cls(cut)

    @property
    def q(self) -> int:
        return self.cutpoints.shape[0] - 1

    def classify(self, x):
        """0-based class index of position(s) ``x`` in [0, 1]."""
        x = np.asarray(x, dtype=float)
        if np.any(x < 0.0) or np.any(x > 1.0):
            raise ValueError("positions must lie in [0, 1]")
        idx = np.searchsorted(self.cutpoints, x, side="right") - 1
        idx = np.minimum(idx, self.q - 1)
        if idx.ndim == 0:
            return int(idx)
        return idx.astype(np.int64)


@dataclass(frozen=True, eq=False)
class BiasedProfile:
    """Stationary-measure summary of the exploring walk.

    ``pi_bar_by_class[q]`` is the mean connectivity of a class-q node,
    ``pi_bar`` the mean connectivity of a uniform node, ``alpha_tilde`` the
    class weights under the walk's stationary measure, and
    ``cutpoints_tilde`` their partial sums (with both endpoints).
    """

    pi_bar_by_class: np.ndarray
    pi_bar: float
    alpha_tilde: np.ndarray
    cutpoints_tilde: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pi_bar_by_class", _as_readonly(self.pi_bar_by_class))
        object.__setattr__(self, "alpha_tilde", _as_readonly(self.alpha_tilde))
        object.__setattr__(self, "cutpoints_tilde", _as_readonly(self.cutpoints_tilde))


def graphon_eval(params: SbmParams, x, y):
    """Connection probability between positions ``x`` and ``y``.

    Accepts scalars or (broadcastable) arrays in [0, 1]; raises
    ``ValueError`` on out-of-range coordinates.
    """
    part = params.partition
    qx = part.classify(x)
    qy = part.classify(y)
    out = params.pi[qx, qy]
    if np.ndim(out) == 0:
        return float(out)
    return out


def biased_profile(params: SbmParams) -> BiasedProfile:
    """Compute ``pi_bar_q``, ``pi_bar``, ``alpha_tilde`` and their cutpoints."""
    pi_bar_q = params.pi @ params.alpha
    pi_bar = _sum(pi_bar_q * params.alpha)
    alpha_tilde = params.alpha * pi_bar_q / pi_bar
    cut_tilde = np.concatenate(([0.0], np.cumsum(alpha_tilde)))
    cut_tilde[-1] = 1.0
    return BiasedProfile(pi_bar_q, pi_bar, alpha_tilde, cut_tilde)


def gamma_cdf(params: SbmParams, x):
    """Distribution function of the walk's stationary measure.

    Piecewise affine with slope ``pi_bar_q / pi_bar`` on ``I_q``; maps the
    cutpoint ``A_q`` to the biased cutpoint ``A_tilde_q``.
    """
    part = params.partition
    prof = biased_profile(params)
    x_arr = np.asarray(x, dtype=float)
    q = part.classify(x_arr)
    slope = prof.pi_bar_by_class / prof.pi_bar
    val = prof.cutpoints_tilde[q] + slope[q] * (x_arr - part.cutpoints[q])
    val = np.clip(val, 0.0, 1.0)
    if val.ndim == 0:
        return float(val)
    return val


def gamma_inverse(params: SbmParams, v):
    """Inverse of :func:`gamma_cdf`.

    The distribution function is a bijection of [0, 1] whenever all class
    weights and connection probabilities are positive, so the generalized
    inverse ``inf{u: gamma_cdf(u) >= v}`` reduces to the exact piecewise
    affine inverse implemented here.
    """
    part = params.partition
    prof = biased_profile(params)
    v_arr = np.asarray(v, dtype=float)
    if np.any(v_arr < 0.0) or np.any(v_arr > 1.0):
        raise ValueError("values must lie in [0, 1]")
    idx = np.searchsorted(prof.cutpoints_tilde, v_arr, side="right") - 1
    idx = np.minimum(idx, part.q - 1)
    slope = prof.pi_bar / prof.pi_bar_by_class
    val = part.cutpoints[idx] + slope[idx] * (v_arr - prof.cutpoints_tilde[idx])
    val = np.clip(val, 0.0, 1.0)
    if val.ndim == 0:
        return float(val)
    return val


def check_connected(params: SbmParams) -> bool:
    """Whether the step graphon is connected.

    Under the construction invariant (all connection probabilities
    positive) this is always true; the check matters for relaxed parameter
    sets built through :meth:`SbmParams.unchecked` where a block-diagonal
    zero pattern of ``pi`` over the positive-weight classes would split the
    unit interval.
    """
    alpha = np.asarray(params.alpha, dtype=float)
    pi = np.asarray(params.pi, dtype=float)
    active = np.flatnonzero(alpha > 0)
    if active.size <= 1:
        return True
    adj = pi[np.ix_(active, active)] > 0
    seen = {0}
    stack = [0]
    while stack:
        i = stack.pop()
        for j in np.flatnonzero(adj[i]):
            if j not in seen:
                seen.add(int(j))
                stack.append(int(j))
    return len(seen) == active.size
