import math

import numpy as np
import pytest

from rdsbm import (
    PinnedProposal,
    SaemData,
    SaemState,
    SbmParams,
    classical_estimator,
    count_stats,
    mle_complete,
    saem_classical_with_threshold,
    saem_rds,
    saem_step,
    step_size,
    variational_fixed_point,
)
from rdsbm.saem import _counts_from_labels

from conftest import make_sample


def planted_params():
    return SbmParams([0.5, 0.5], [[0.95, 0.05], [0.05, 0.95]])


def odds_oracle(i, tau, y, params):
    """Scalar re-derivation of the two-class fixed-point odds for vertex i."""
    alpha = params.alpha[0]
    pi = params.pi
    pi_bar = pi @ params.alpha
    log_odds = math.log(alpha / (1 - alpha)) + math.log(pi_bar[1] / pi_bar[0])
    for j in range(len(tau)):
        if j == i:
            continue
        b11 = pi[0, 0] if y[i, j] else 1 - pi[0, 0]
        b12 = pi[0, 1] if y[i, j] else 1 - pi[0, 1]
        b22 = pi[1, 1] if y[i, j] else 1 - pi[1, 1]
        log_odds += math.log(b12 / b22) + tau[j, 0] * math.log(b11 * b22 / b12 ** 2)
    return log_odds


class TestVariationalFixedPoint:
    def test_uniform_on_erdos_renyi(self, theta_star):
        sample = make_sample(theta_star, 50, seed=4)
        er = SbmParams([0.5, 0.5], np.full((2, 2), 0.55))
        result = variational_fixed_point(sample.y, er)
        assert result.converged
        assert np.max(np.abs(result.tau - 0.5)) < 1e-9

    def test_rows_stay_stochastic(self, theta_star, sample_60):
        result = variational_fixed_point(sample_60.y, theta_star)
        assert np.max(np.abs(result.tau.sum(axis=1) - 1.0)) < 1e-9
        assert np.all(result.tau >= 0)

    def test_fixed_point_satisfies_odds_relation(self, theta_star, sample_60):
        result = variational_fixed_point(sample_60.y, theta_star, tol=1e-12)
        assert result.converged
        tau = result.tau
        for i in (0, 13, 59):
            expected = 1.0 / (1.0 + math.exp(-odds_oracle(i, tau, sample_60.y, theta_star)))
            assert tau[i, 0] == pytest.approx(expected, abs=1e-8)

    def test_recovers_planted_partition(self):
        params = planted_params()
        sample = make_sample(params, 40, seed=19)
        rng = np.random.default_rng(2)
        tau0 = np.clip(rng.uniform(0.2, 0.8, size=(40, 2)), None, None)
        tau0 = tau0 / tau0.sum(axis=1, keepdims=True)
        result = variational_fixed_point(sample.y, params, tau0=tau0)
        labels = np.argmax(result.tau, axis=1)
        agreement = np.mean(labels == sample.z)
        assert agreement > 0.95 or agreement < 0.05

    def test_non_convergence_flagged(self, theta_star, sample_60):
        result = variational_fixed_point(sample_60.y, theta_star, max_iter=1)
        assert not result.converged
        assert result.iterations == 1


class TestStepSize:
    def test_burn_in_then_decay(self):
        assert step_size(1) == 1.0
        assert step_size(50) == 1.0
        assert step_size(51) == 1.0
        assert step_size(60) == pytest.approx(10.0 ** -0.7)

    def test_decay_exponent_satisfies_robbins_monro(self):
        # sum s_k diverges, sum s_k^2 converges iff exponent in (1/2, 1]
        exponent = 0.7
        assert 0.5 < exponent <= 1.0
        tail = np.array([step_size(k) for k in range(51, 100_000)])
        assert tail.sum() > 50  # still growing
        assert (tail ** 2).sum() < np.inf


class TestSaemStep:
    def test_identical_candidate_always_accepted(self, theta_star, sample_60):
        data = SaemData(y=sample_60.y, n_classes=2)
        state = SaemState.initial(theta_star.alpha, theta_star.pi, sample_60.z, data)
        proposal = PinnedProposal(sample_60.z)
        rng = np.random.default_rng(0)
        for k in range(5):
            state = saem_step(state, data, proposal, "rds", rng)
        assert state.accepted == 5

    def test_pinned_labels_reproduce_complete_data_mle(self, theta_star, sample_60):
        mle = mle_complete(count_stats(sample_60))
        data = SaemData(y=sample_60.y, n_classes=2)
        state = SaemState.initial(np.array([0.5, 0.5]),
                                  np.array([[0.5, 0.4], [0.4, 0.5]]),
                                  sample_60.z, data)
        proposal = PinnedProposal(sample_60.z)
        rng = np.random.default_rng(1)
        for _ in range(200):
            state = saem_step(state, data, proposal, "rds", rng)
        assert np.max(np.abs(state.alpha - mle.alpha)) < 1e-3
        assert np.max(np.abs(state.pi - mle.pi)) < 1e-3

    def test_pinned_classical_reproduces_classical_estimator(self, theta_star, sample_60):
        cls = classical_estimator(count_stats(sample_60))
        data = SaemData(y=sample_60.y, n_classes=2)
        state = SaemState.initial(np.array([0.5, 0.5]),
                                  np.array([[0.5, 0.4], [0.4, 0.5]]),
                                  sample_60.z, data)
        proposal = PinnedProposal(sample_60.z)
        rng = np.random.default_rng(1)
        for _ in range(60):
            state = saem_step(state, data, proposal, "classical", rng)
        np.testing.assert_allclose(state.alpha, cls.alpha, atol=1e-12)
        np.testing.assert_allclose(state.pi, cls.pi, atol=1e-12)

    def test_theta_update_is_permutation_equivariant(self, theta_star, sample_60):
        data = SaemData(y=sample_60.y, n_classes=2)
        rngs = [np.random.default_rng(9), np.random.default_rng(9)]
        z = sample_60.z
        z_swapped = 1 - z
        a0 = np.array([0.4, 0.6])
        p0 = np.array([[0.55, 0.35], [0.35, 0.7]])
        s1 = SaemState.initial(a0, p0, z, data)
        s2 = SaemState.initial(a0[::-1], p0[::-1, ::-1], z_swapped, data)
        p1, p2 = PinnedProposal(z), PinnedProposal(z_swapped)
        for _ in range(30):
            s1 = saem_step(s1, data, p1, "rds", rngs[0])
            s2 = saem_step(s2, data, p2, "rds", rngs[1])
        np.testing.assert_allclose(s2.alpha, s1.alpha[::-1], atol=1e-6)
        np.testing.assert_allclose(s2.pi, s1.pi[::-1, ::-1], atol=1e-6)


class TestSaemRds:
    def test_zero_iterations_returns_initialization(self, sample_60):
        est = saem_rds(sample_60.y, 2, 0, np.random.default_rng(3))
        np.testing.assert_allclose(est.alpha, [0.5, 0.5])
        assert np.all((est.pi >= 0.2) & (est.pi <= 0.8))
        assert est.diagnostics["iterations"] == 0.0

    def test_single_class_rejected(self, sample_60):
        with pytest.raises(ValueError):
            saem_rds(sample_60.y, 1, 10, np.random.default_rng(0))

    def test_recovers_separated_planted_model(self):
        params = planted_params()
        sample = make_sample(params, 40, seed=23)
        est = saem_rds(sample.y, 2, 150, np.random.default_rng(6))
        diag = sorted([est.pi[0, 0], est.pi[1, 1]])
        assert abs(diag[0] - 0.95) < 0.05 or abs(diag[1] - 0.95) < 0.05
        assert est.pi[0, 1] < 0.3

    def test_positions_are_not_consulted(self, theta_star, sample_60):
        # the adjacency alone determines the estimate
        est1 = saem_rds(sample_60.y, 2, 30, np.random.default_rng(8))
        est2 = saem_rds(sample_60.y.copy(), 2, 30, np.random.default_rng(8))
        np.testing.assert_array_equal(est1.alpha, est2.alpha)


class TestThresholdSaem:
    def test_zero_scale_freezes_chain(self, theta_star):
        sample = make_sample(theta_star, 120, seed=10)
        est = saem_classical_with_threshold(sample.x, sample.y, 80, 0.0,
                                            np.random.default_rng(4))
        z0 = (sample.x > 0.5).astype(np.int64)
        npc, edges, non_edges, _ = _counts_from_labels(z0, sample.y.astype(float), 2)
        from rdsbm.mle import _classical_from_counts
        weights, pi, _ = _classical_from_counts(npc, edges, non_edges)
        np.testing.assert_allclose(est.alpha, weights, atol=1e-12)
        np.testing.assert_allclose(est.pi, pi, atol=1e-12)
        assert est.diagnostics["accept_rate"] == 1.0
        assert est.diagnostics["threshold"] == 0.5

    def test_weight_targets_biased_limit(self, theta_star):
        sample = make_sample(theta_star, 800, seed=37)
        est = saem_classical_with_threshold(sample.x, sample.y, 200, 0.05,
                                            np.random.default_rng(12))
        assert abs(est.alpha[0] - 0.6923) < 0.03
        # the threshold itself hovers near the true class boundary
        assert abs(est.diagnostics["threshold"] - 2.0 / 3.0) < 0.05

    def test_acceptance_rate_in_unit_interval(self, theta_star):
        sample = make_sample(theta_star, 100, seed=44)
        est = saem_classical_with_threshold(sample.x, sample.y, 50, 0.1,
                                            np.random.default_rng(5))
        assert 0.0 <= est.diagnostics["accept_rate"] <= 1.0


class TestTrajectoryLog:
    def test_rds_chain_logged(self, sample_60, tmp_path):
        path = tmp_path / "chain.csv"
        saem_rds(sample_60.y, 2, 25, np.random.default_rng(2), trajectory_path=path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "k,alpha_1,alpha_2,pi_11,pi_12,pi_22,accepted,loglik"
        assert len(lines) == 26
        last = lines[-1].split(",")
        assert last[0] == "25"
        assert last[-2] in {"0", "1"}
        float(last[-1])

    def test_threshold_chain_logged(self, theta_star, tmp_path):
        sample = make_sample(theta_star, 80, seed=3)
        path = tmp_path / "chain.csv"
        saem_classical_with_threshold(sample.x, sample.y, 10, 0.05,
                                      np.random.default_rng(1), trajectory_path=path)
        lines = path.read_text().strip().splitlines()
        assert len(lines) == 11
