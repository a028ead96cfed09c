"""Corrections turning walk-biased weight estimates into true class weights.

A walk that favours well-connected classes discovers weights proportional
to ``alpha_q * pi_bar_q``; three corrections recover ``alpha``:

* inverting the empirical distribution of the observed positions at the
  estimated weight cutpoints;
* the same inversion applied after a threshold-SAEM fit (handled by the
  caller; the inversion itself is identical);
* solving the algebraic relation ``(a' pi a) * lam = a * (pi a)``
  elementwise on the simplex, which needs no positions at all — a
  quadratic in the two-class case, a small simplex optimization otherwise.
"""
from __future__ import annotations

import math

import numpy as np
from scipy import optimize

from .errors import NonConvergenceError, NoValidRootError
from .sampler import EmpiricalCdf

__all__ = [
    "debias_by_empirical_cdf",
    "debias_algebraic_q2",
    "debias_algebraic_general",
]

_START_SEED = 0x5B1A5


def debias_by_empirical_cdf(lambda_hat: np.ndarray, cdf: EmpiricalCdf) -> np.ndarray:
    """Invert the empirical position distribution at the weight cutpoints.

    Returns ``inv(L_q) - inv(L_{q-1})`` for the prefix sums ``L_q`` of the
    estimated weights, renormalized to sum exactly one (the top cutpoint
    maps to the sample maximum, which sits below 1 by O(1/n)).
    """
    lambda_hat = np.asarray(lambda_hat, dtype=float)
    cum = np.clip(np.concatenate(([0.0], np.cumsum(lambda_hat))), 0.0, 1.0)
    cum[-1] = min(cum[-1], 1.0)
    points = np.array([cdf.inverse(v) for v in cum])
    weights = np.diff(points)
    total = weights.sum()
    if total <= 0:
        # all cutpoints collapsed onto one order statistic
        return lambda_hat.copy()
    return weights / total


def _forward_weight_q2(a1: float, pi: np.ndarray) -> float:
    """Biased first-class weight implied by true weight ``a1`` under ``pi``."""
    a = np.array([a1, 1.0 - a1])
    pi_bar_q = pi @ a
    return float(a[0] * pi_bar_q[0] / (a @ pi_bar_q))


def debias_algebraic_q2(lambda1: float, pi_hat: np.ndarray) -> float:
    """Solve the two-class algebraic correction for the first weight.

    The relation between the true weight ``a`` and the biased weight
    ``lambda1`` is quadratic::

        [(p11 + p22 - 2 p12) L - (p11 - p12)] a^2
            + [2 (p12 - p22) L - p12] a + p22 L = 0

    whose discriminant ``p12^2 (2L-1)^2 + 4 p11 p22 L (1-L)`` is never
    negative.  The root inside [0, 1] is returned; if both qualify, the one
    whose forward-mapped biased weight is closest to ``lambda1`` wins.
    """
    pi_hat = np.asarray(pi_hat, dtype=float)
    p11, p12, p22 = pi_hat[0, 0], pi_hat[0, 1], pi_hat[1, 1]
    lam = float(lambda1)
    a = (p11 + p22 - 2.0 * p12) * lam - (p11 - p12)
    b = 2.0 * (p12 - p22) * lam - p12
    c = p22 * lam

    if abs(a) < 1e-12:
        roots = [-c / b] if b != 0.0 else []
    else:
        disc = b * b - 4.0 * a * c
        disc = max(disc, 0.0)
        sq = math.sqrt(disc)
        # cancellation-safe form
        q = -0.5 * (b + math.copysign(sq, b)) if b != 0.0 else 0.5 * sq
        if q == 0.0:
            roots = [0.0]
        else:
            roots = [q / a, c / q]

    inside = [r for r in roots if -1e-9 <= r <= 1.0 + 1e-9]
    if not inside:
        raise NoValidRootError(f"no root of the weight equation in [0, 1]: {roots}")
    inside = [min(max(r, 0.0), 1.0) for r in inside]
    if len(inside) == 1:
        return inside[0]
    return min(inside, key=lambda r: abs(_forward_weight_q2(r, pi_hat) - lam))


def _g_residual(x: np.ndarray, pi_hat: np.ndarray, lam: np.ndarray) -> np.ndarray:
    px = pi_hat @ x
    return (x @ px) * lam - x * px


def _softmax(t: np.ndarray) -> np.ndarray:
    logits = np.concatenate([t, [0.0]])
    logits = logits - logits.max()
    e = np.exp(logits)
    return e / e.sum()


def debias_algebraic_general(lambda_hat: np.ndarray, pi_hat: np.ndarray, *,
                             full_output: bool = False):
    """Solve the algebraic weight relation on the simplex for any Q.

    Minimizes the squared residual of ``(x' pi x) * lam - x * (pi x)``
    over a softmax parameterization with a simplex search (the observed
    weights plus four random interior points as starts), then polishes by
    root-finding on the first Q-1 components (the residual always sums to
    zero).  Accepts as soon as the max-norm drops below 1e-8.

    Raises
    ------
    NonConvergenceError
        If the best residual over all starts stays above 1e-6; the best
        point is attached to the exception.
    """
    lam = np.asarray(lambda_hat, dtype=float)
    pi_hat = np.asarray(pi_hat, dtype=float)
    n_classes = lam.shape[0]

    def res_norm(x):
        return float(np.max(np.abs(_g_residual(x, pi_hat, lam))))

    def objective(t):
        g = _g_residual(_softmax(t), pi_hat, lam)
        return float(g @ g)

    def reduced_root(t):
        return _g_residual(_softmax(t), pi_hat, lam)[:-1]

    interior = np.clip(lam, 1e-6, None)
    starts = [interior / interior.sum()]
    rng = np.random.default_rng(_START_SEED)
    starts += [rng.dirichlet(np.ones(n_classes)) for _ in range(4)]

    solutions = []
    best_x = starts[0]
    best_res = res_norm(best_x)
    for x0 in starts:
        t0 = np.log(np.clip(x0[:-1], 1e-12, None)) - np.log(max(x0[-1], 1e-12))
        t_cur = t0
        res = optimize.minimize(objective, t0, method="Nelder-Mead",
                                options={"maxiter": 2000, "fatol": 1e-20, "xatol": 1e-12})
        if res.fun < objective(t_cur):
            t_cur = res.x
        sol = optimize.root(reduced_root, t_cur, method="hybr")
        if res_norm(_softmax(sol.x)) < res_norm(_softmax(t_cur)):
            t_cur = sol.x
        x = _softmax(t_cur)
        r = res_norm(x)
        solutions.append((x, r))
        if r < best_res:
            best_x, best_res = x, r
        if r < 1e-8:
            break

    converged = [(x, r) for x, r in solutions if r < 1e-6]
    distinct = 0
    for i in range(len(converged)):
        for j in range(i + 1, len(converged)):
            if np.max(np.abs(converged[i][0] - converged[j][0])) > 1e-4:
                distinct += 1
    info = {
        "residual": best_res,
        "starts_run": float(len(solutions)),
        "multi_minima": float(distinct > 0),
    }
    if best_res > 1e-6:
        raise NonConvergenceError(
            f"weight equation residual {best_res:.3e} above tolerance",
            best_point=best_x, residual=best_res,
        )
    if full_output:
        return best_x, info
    return best_x
