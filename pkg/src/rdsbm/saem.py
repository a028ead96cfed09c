"""Stochastic-approximation EM for samples whose labels are unobserved.

Each iteration draws a candidate label vector from a proposal, accepts it
with the usual Metropolis ratio (computed entirely in log space), folds the
accepted labels' sufficient statistics into a running weighted average, and
re-maximizes the chosen likelihood on the averaged statistics.  Averaging
the statistics is equivalent to averaging the log-likelihood surrogate
because both likelihoods are linear in the counts for fixed parameters.

Two proposals are provided: an independence sampler from the variational
approximation of the label posterior (rows are independent multinomials
whose parameters solve a fixed-point relation), and, when positions are
observed with two classes, a reflected Gaussian random walk on the
position threshold separating the classes.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import EmptyClassError
from .graphon import SbmParams
from .mle import (
    Estimate,
    _classical_from_counts,
    _loglik_classical_arrays,
    _loglik_rds_arrays,
    _maximize_rds,
    _pack,
    _score_rds_arrays,
    clamp_probability,
)

__all__ = [
    "VariationalParams",
    "SaemData",
    "SaemState",
    "VariationalProposal",
    "ThresholdProposal",
    "PinnedProposal",
    "step_size",
    "variational_fixed_point",
    "saem_step",
    "saem_rds",
    "saem_classical_with_threshold",
]


@dataclass(frozen=True, eq=False)
class VariationalParams:
    """Row-stochastic matrix of approximate label posteriors."""

    tau: np.ndarray
    converged: bool
    iterations: int


def variational_fixed_point(y: np.ndarray, params, max_iter: int = 500, tol: float = 1e-8,
                            *, tau0: np.ndarray | None = None,
                            damping: float = 0.5) -> VariationalParams:
    """Damped fixed-point iteration for the variational parameters.

    For each vertex the unnormalized log weight of class ``q`` accumulates
    ``sum_j sum_r tau[j, r] * log b(y_ij, pi[q, r])`` over the other
    vertices plus the offset ``log(alpha_q / pi_bar_q)``; rows are
    normalized by max subtraction.  Iterates ``tau <- (1 - damping) * tau +
    damping * Phi(tau)`` until the largest row change drops below ``tol``
    or ``max_iter`` is hit (the last iterate is then returned, flagged).
    """
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    alpha = np.asarray(params.alpha, dtype=float)
    pi = np.asarray(params.pi, dtype=float)
    n_classes = alpha.shape[0]
    pi_bar = pi @ alpha
    offset = np.log(alpha) - np.log(pi_bar)
    log_b1 = np.log(pi)
    log_b0 = np.log1p(-pi)

    tau = np.tile(alpha, (n, 1)) if tau0 is None else np.array(tau0, dtype=float)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        s1 = y @ tau
        s0 = tau.sum(axis=0)[None, :] - tau - s1
        log_phi = offset[None, :] + s1 @ log_b1.T + s0 @ log_b0.T
        log_phi -= log_phi.max(axis=1, keepdims=True)
        phi = np.exp(log_phi)
        phi /= phi.sum(axis=1, keepdims=True)
        new = (1.0 - damping) * tau + damping * phi
        delta = float(np.max(np.abs(new - tau)))
        tau = new
        if delta < tol:
            converged = True
            break
    if n_classes == 1:
        converged = True
    return VariationalParams(tau=tau, converged=converged, iterations=iterations)


def step_size(k: int, burn_in: int = 50, decay: float = 0.7) -> float:
    """Robbins-Monro schedule: 1 during burn-in, then (k - burn_in)^-decay.

    Any decay exponent in (1/2, 1] keeps the step sums divergent and the
    squared sums finite.
    """
    if k <= burn_in:
        return 1.0
    return float(k - burn_in) ** (-decay)


def _counts_from_labels(z: np.ndarray, y: np.ndarray, n_classes: int):
    n = z.shape[0]
    one_hot = np.zeros((n, n_classes))
    one_hot[np.arange(n), z] = 1.0
    npc = one_hot.sum(axis=0)
    both = one_hot.T @ y @ one_hot
    edges = both.copy()
    np.fill_diagonal(edges, np.diagonal(both) / 2.0)
    totals = np.outer(npc, npc)
    np.fill_diagonal(totals, npc * (npc - 1) / 2.0)
    last = np.zeros(n_classes)
    last[z[-1]] = 1.0
    return npc, edges, totals - edges, last


@dataclass(frozen=True, eq=False)
class SaemData:
    """Observed data handed to the proposals and the step."""

    y: np.ndarray
    x: np.ndarray | None = None
    n_classes: int = 2

    def __post_init__(self):
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        if self.x is not None:
            object.__setattr__(self, "x", np.asarray(self.x, dtype=float))


@dataclass(frozen=True, eq=False)
class SaemState:
    """State after iteration ``k`` of one chain."""

    k: int
    alpha: np.ndarray
    pi: np.ndarray
    z: np.ndarray
    avg_n_per_class: np.ndarray
    avg_edges: np.ndarray
    avg_non_edges: np.ndarray
    avg_last: np.ndarray
    burn_in: int = 50
    decay: float = 0.7
    accepted: int = 0

    @classmethod
    def initial(cls, alpha, pi, z, data: SaemData, *, burn_in=50, decay=0.7) -> "SaemState":
        npc, edges, non_edges, last = _counts_from_labels(z, data.y, data.n_classes)
        return cls(
            k=0, alpha=np.asarray(alpha, dtype=float), pi=np.asarray(pi, dtype=float),
            z=np.asarray(z), avg_n_per_class=npc, avg_edges=edges,
            avg_non_edges=non_edges, avg_last=last, burn_in=burn_in, decay=decay,
        )


class VariationalProposal:
    """Independence proposal from the variational label posterior.

    The fixed point is recomputed at the current parameters every
    iteration, warm-started from the previous solution.
    """

    def __init__(self, max_iter: int = 500, tol: float = 1e-8):
        self.max_iter = max_iter
        self.tol = tol
        self.tau: np.ndarray | None = None

    def propose(self, data: SaemData, state: SaemState, rng: np.random.Generator):
        params = SbmParams.unchecked(state.alpha, state.pi)
        fp = variational_fixed_point(
            data.y, params, self.max_iter, self.tol, tau0=self.tau
        )
        self.tau = fp.tau
        if not np.all(np.isfinite(fp.tau)):
            raise EmptyClassError("variational proposal degenerated")
        if np.any(fp.tau.sum(axis=0) < 1.0):
            # the rows collapsed away from some class: the chain can no
            # longer repopulate it, so signal the caller to restart
            raise EmptyClassError("variational proposal collapsed a class")
        cum = np.cumsum(fp.tau, axis=1)
        cum[:, -1] = 1.0
        z_cand = (cum < rng.random((len(cum), 1))).sum(axis=1).astype(np.int64)
        log_tau = np.log(np.maximum(fp.tau, 1e-300))
        rows = np.arange(len(z_cand))
        log_q_fwd = float(log_tau[rows, z_cand].sum())
        log_q_rev = float(log_tau[rows, state.z].sum())
        return z_cand, log_q_fwd, log_q_rev

    def notify(self, accepted: bool) -> None:
        pass


class ThresholdProposal:
    """Reflected Gaussian walk on the position threshold (two classes).

    Labels are determined by the threshold: positions at or below it get
    the first class.  The reflected increment is symmetric, so the
    proposal densities cancel in the acceptance ratio.
    """

    def __init__(self, scale: float, threshold: float = 0.5):
        self.scale = scale
        self.threshold = threshold
        self._candidate = threshold

    def propose(self, data: SaemData, state: SaemState, rng: np.random.Generator):
        lam = self.threshold + self.scale * rng.normal()
        while lam < 0.0 or lam > 1.0:
            lam = -lam if lam < 0.0 else 2.0 - lam
        self._candidate = lam
        z_cand = (data.x > lam).astype(np.int64)
        return z_cand, 0.0, 0.0

    def notify(self, accepted: bool) -> None:
        if accepted:
            self.threshold = self._candidate


class PinnedProposal:
    """Degenerate proposal that always offers the same labels."""

    def __init__(self, z: np.ndarray):
        self.z = np.asarray(z, dtype=np.int64)

    def propose(self, data: SaemData, state: SaemState, rng: np.random.Generator):
        return self.z, 0.0, 0.0

    def notify(self, accepted: bool) -> None:
        pass


def _complete_loglik(likelihood: str, counts, alpha, pi) -> float:
    npc, edges, non_edges, last = counts
    if likelihood == "rds":
        return _loglik_rds_arrays(npc, edges, non_edges, last, alpha, pi)
    if likelihood == "classical":
        return _loglik_classical_arrays(npc, edges, non_edges, alpha, pi)
    raise ValueError(f"unknown likelihood {likelihood!r}")


def saem_step(state: SaemState, data: SaemData, proposal, likelihood: str,
              rng: np.random.Generator) -> SaemState:
    """One SAEM iteration: propose, accept/reject, average, re-maximize.

    Candidates that empty a class are rejected outright so the running
    statistics stay maximizable.  Raises ``EmptyClassError`` if the
    averaged statistics nevertheless degenerate (callers restart).
    """
    k = state.k + 1
    z_cand, log_q_fwd, log_q_rev = proposal.propose(data, state, rng)
    counts_cand = _counts_from_labels(z_cand, data.y, data.n_classes)
    counts_cur = _counts_from_labels(state.z, data.y, data.n_classes)

    if np.any(counts_cand[0] == 0):
        accepted = False
    else:
        log_ratio = (
            _complete_loglik(likelihood, counts_cand, state.alpha, state.pi)
            - _complete_loglik(likelihood, counts_cur, state.alpha, state.pi)
            + log_q_rev
            - log_q_fwd
        )
        omega = 1.0 if log_ratio >= 0 else float(np.exp(log_ratio))
        accepted = rng.random() < omega
    proposal.notify(accepted)

    z_new = z_cand if accepted else state.z
    counts_new = counts_cand if accepted else counts_cur
    s_k = step_size(k, state.burn_in, state.decay)
    avg = (
        state.avg_n_per_class + s_k * (counts_new[0] - state.avg_n_per_class),
        state.avg_edges + s_k * (counts_new[1] - state.avg_edges),
        state.avg_non_edges + s_k * (counts_new[2] - state.avg_non_edges),
        state.avg_last + s_k * (counts_new[3] - state.avg_last),
    )
    if np.any(avg[0] <= 0):
        raise EmptyClassError("averaged statistics lost a class")

    if likelihood == "rds":
        alpha0 = np.clip(state.alpha, 1e-12, None)
        alpha0 = alpha0 / alpha0.sum()
        warm = _pack(alpha0, np.clip(state.pi, 1e-9, 1 - 1e-9))
        alpha, pi, _ = _maximize_rds(
            avg[0], avg[1], avg[2], avg[3], [warm],
            max_iter=200, root_first=True, fatol_rel=1e-8,
        )
    else:
        alpha, pi, _ = _classical_from_counts(avg[0], avg[1], avg[2])

    return replace(
        state,
        k=k,
        alpha=alpha,
        pi=clamp_probability(pi),
        z=z_new,
        avg_n_per_class=avg[0],
        avg_edges=avg[1],
        avg_non_edges=avg[2],
        avg_last=avg[3],
        accepted=state.accepted + int(accepted),
    )


def _trajectory_header(n_classes: int) -> str:
    cols = ["k"]
    cols += [f"alpha_{q + 1}" for q in range(n_classes)]
    cols += [f"pi_{q + 1}{r + 1}" for q in range(n_classes) for r in range(q, n_classes)]
    cols += ["accepted", "loglik"]
    return ",".join(cols)


def _trajectory_row(state: SaemState, data: SaemData, likelihood: str,
                    accepted: bool) -> str:
    counts = _counts_from_labels(state.z, data.y, data.n_classes)
    loglik = _complete_loglik(likelihood, counts, state.alpha, state.pi)
    iu = np.triu_indices(data.n_classes)
    values = [str(state.k)]
    values += [f"{v:.8g}" for v in state.alpha]
    values += [f"{v:.8g}" for v in state.pi[iu]]
    values += [str(int(accepted)), f"{loglik:.8g}"]
    return ",".join(values)


def _write_trajectory(path, n_classes: int, rows: list[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_trajectory_header(n_classes) + "\n")
        for row in rows:
            fh.write(row + "\n")


def _random_init(n_classes: int, rng: np.random.Generator):
    alpha = np.full(n_classes, 1.0 / n_classes)
    tri = rng.uniform(0.2, 0.8, size=n_classes * (n_classes + 1) // 2)
    pi = np.zeros((n_classes, n_classes))
    iu = np.triu_indices(n_classes)
    pi[iu] = tri
    pi = pi + np.triu(pi, k=1).T
    return alpha, pi


def _draw_full_support(tau: np.ndarray, n_classes: int, rng: np.random.Generator,
                       attempts: int = 10) -> np.ndarray | None:
    cum = np.cumsum(tau, axis=1)
    cum[:, -1] = 1.0
    for _ in range(attempts):
        z = (cum < rng.random((len(cum), 1))).sum(axis=1).astype(np.int64)
        if len(np.unique(z)) == n_classes:
            return z
    return None


def saem_rds(y: np.ndarray, n_classes: int, n_iter: int, rng: np.random.Generator, *,
             burn_in: int = 50, decay: float = 0.7, max_restarts: int = 3,
             trajectory_path=None) -> Estimate:
    """SAEM on the walk-aware likelihood from the adjacency alone.

    Positions play no role here: the likelihood depends on them only
    through the labels, which are being sampled.  Degenerate chains are
    restarted from a fresh random initialization (at most ``max_restarts``
    times); if every attempt degenerates, the best partial state is
    returned with ``converged = 0``.  When ``trajectory_path`` is given the
    completed chain is logged as CSV (iteration, parameters, acceptance,
    complete-data log-likelihood).
    """
    if n_classes < 2:
        raise ValueError("latent-label estimation needs at least two classes")
    data = SaemData(y=y, n_classes=n_classes)
    last_alpha, last_pi = _random_init(n_classes, rng)
    restarts_used = 0
    for attempt in range(max_restarts + 1):
        restarts_used = attempt
        alpha0, pi0 = _random_init(n_classes, rng)
        last_alpha, last_pi = alpha0, pi0
        params0 = SbmParams.unchecked(alpha0, pi0)
        tau0 = variational_fixed_point(data.y, params0).tau
        z0 = _draw_full_support(tau0, n_classes, rng)
        if z0 is None:
            continue
        proposal = VariationalProposal()
        proposal.tau = tau0
        state = SaemState.initial(alpha0, pi0, z0, data, burn_in=burn_in, decay=decay)
        trajectory: list[str] = []
        try:
            for _ in range(n_iter):
                prev_accepted = state.accepted
                state = saem_step(state, data, proposal, "rds", rng)
                if trajectory_path is not None:
                    trajectory.append(_trajectory_row(
                        state, data, "rds", state.accepted > prev_accepted))
        except EmptyClassError:
            last_alpha, last_pi = state.alpha, state.pi
            continue
        if trajectory_path is not None:
            _write_trajectory(trajectory_path, n_classes, trajectory)
        residual = float(
            np.max(
                np.abs(
                    _score_rds_arrays(
                        state.avg_n_per_class, state.avg_edges, state.avg_non_edges,
                        state.avg_last, state.alpha, state.pi,
                    )
                )
            )
        )
        return Estimate(
            alpha=state.alpha,
            pi=clamp_probability(state.pi),
            method="saem-rds",
            diagnostics={
                "iterations": float(n_iter),
                "accept_rate": state.accepted / n_iter if n_iter else 0.0,
                "restarts": float(attempt),
                "score_residual": residual,
                "converged": 1.0,
            },
        )
    return Estimate(
        alpha=last_alpha,
        pi=clamp_probability(last_pi),
        method="saem-rds",
        diagnostics={"iterations": 0.0, "restarts": float(restarts_used), "converged": 0.0},
    )


def saem_classical_with_threshold(x: np.ndarray, y: np.ndarray, n_iter: int, scale: float,
                                  rng: np.random.Generator, *, burn_in: int = 50,
                                  decay: float = 0.7, threshold0: float = 0.5,
                                  trajectory_path=None) -> Estimate:
    """SAEM on the classical likelihood with a position-threshold latent.

    Two classes only: labels are cut at a threshold moved by a reflected
    Gaussian increment, the acceptance uses classical likelihoods (the
    symmetric proposal cancels), and the maximization is the explicit
    classical estimator on the averaged statistics.  The returned weights
    estimate the walk-biased class weights; pair with a de-biasing step to
    recover the true ones.
    """
    x = np.asarray(x, dtype=float)
    data = SaemData(y=y, x=x, n_classes=2)
    lam0 = threshold0
    z0 = (x > lam0).astype(np.int64)
    if len(np.unique(z0)) < 2:
        lam0 = float(np.median(x))
        z0 = (x > lam0).astype(np.int64)
        if len(np.unique(z0)) < 2:
            raise EmptyClassError("positions cannot be split into two classes")

    weights, pi0, _ = _classical_from_counts(*_counts_from_labels(z0, data.y, 2)[:3])
    proposal = ThresholdProposal(scale, lam0)
    state = SaemState.initial(weights, pi0, z0, data, burn_in=burn_in, decay=decay)
    trajectory: list[str] = []
    for _ in range(n_iter):
        prev_accepted = state.accepted
        state = saem_step(state, data, proposal, "classical", rng)
        if trajectory_path is not None:
            trajectory.append(_trajectory_row(
                state, data, "classical", state.accepted > prev_accepted))
    if trajectory_path is not None:
        _write_trajectory(trajectory_path, 2, trajectory)
    return Estimate(
        alpha=state.alpha,
        pi=clamp_probability(state.pi),
        method="classical",
        diagnostics={
            "iterations": float(n_iter),
            "accept_rate": state.accepted / n_iter if n_iter else 0.0,
            "threshold": proposal.threshold,
            "converged": 1.0,
        },
    )
