"""End-to-end acceptance checks.

Each test prints one PASS/FAIL line (run pytest with ``-s`` to see them
as they complete).  The heavyweight replicated experiment backing the
error-table comparison runs once per session.
"""
import numpy as np
import pytest

from rdsbm import (
    ExperimentConfig,
    PinnedProposal,
    SaemData,
    SaemState,
    SbmParams,
    build_empirical_graphon,
    classical_estimator,
    count_stats,
    debias_algebraic_general,
    debias_algebraic_q2,
    dsub_truncated,
    log_likelihood_rds,
    mle_complete,
    run_experiment,
    saem_step,
    score_residual_rds,
    simulate_walk,
    variational_fixed_point,
)
from conftest import make_sample
from test_debias import forward_biased_weights
from test_mle import product_form_loglik, q1_stats, triangle_stats

THETA = SbmParams([2.0 / 3.0, 1.0 / 3.0], [[0.7, 0.4], [0.4, 0.8]])


def _criterion(num: int, description: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    print(f"[criterion {num}] {status} {description} {detail}".rstrip())
    assert ok, f"criterion {num}: {description} {detail}"


def _within_factor(value: float, target: float, factor: float) -> bool:
    return target / factor <= value <= target * factor


@pytest.fixture(scope="module")
def table_report():
    config = ExperimentConfig(
        q=2,
        alpha=np.array([2.0 / 3.0, 1.0 / 3.0]),
        pi=np.array([[0.7, 0.4], [0.4, 0.8]]),
        n=60,
        replicates=200,
        seed=20250810,
        methods=("mle-complete", "classical", "saem-rds", "debias-complete",
                 "debias-saem", "debias-algebraic"),
        saem_iterations=200,
        proposal_std=0.05,
    )
    return run_experiment(config)


def test_criterion_1_error_table_magnitudes(table_report):
    mse_pi11 = table_report.mse("mle-complete", "pi_11")
    mse_alpha_mle = table_report.mse("mle-complete", "alpha_1")
    mse_alpha_debias = table_report.mse("debias-complete", "alpha_1")
    mse_alpha_saem = table_report.mse("saem-rds", "alpha_1")
    checks = [
        ("mle pi_11 vs 3.52e-4", _within_factor(mse_pi11, 3.52e-4, 3.0), mse_pi11),
        ("mle alpha vs 7.01e-3", _within_factor(mse_alpha_mle, 7.01e-3, 3.0), mse_alpha_mle),
        ("debias-complete alpha vs 6.80e-4",
         _within_factor(mse_alpha_debias, 6.80e-4, 3.0), mse_alpha_debias),
        ("saem alpha vs 3.80e-2 (factor 5)",
         _within_factor(mse_alpha_saem, 3.80e-2, 5.0), mse_alpha_saem),
    ]
    detail = "; ".join(f"{name}: got {got:.3e}" for name, _, got in checks)
    _criterion(1, "replicated-experiment MSE magnitudes", all(ok for _, ok, _ in checks),
               detail)


def test_criterion_2_walk_frequency_targets_biased_weight():
    rng = np.random.default_rng(20250802)
    _, z = simulate_walk(THETA, 100_000, rng)
    freq = float(np.mean(z == 0))
    biased_gap = abs(freq - 0.6923077)
    unbiased_gap = abs(freq - 2.0 / 3.0)
    ok = biased_gap < 0.01 and unbiased_gap > 0.02
    _criterion(2, "class frequency targets the size-biased weight", ok,
               f"freq={freq:.5f}, |freq-0.69231|={biased_gap:.4f}, "
               f"|freq-2/3|={unbiased_gap:.4f}")


def test_criterion_3_debias_round_trips():
    rng = np.random.default_rng(20250803)
    worst_q2 = 0.0
    for _ in range(1000):
        a1 = rng.uniform(0.05, 0.95)
        tri = rng.uniform(0.05, 0.95, size=3)
        pi = np.array([[tri[0], tri[1]], [tri[1], tri[2]]])
        lam = forward_biased_weights([a1, 1.0 - a1], pi)[0]
        worst_q2 = max(worst_q2, abs(debias_algebraic_q2(lam, pi) - a1))
    alpha = np.array([0.5, 0.3, 0.2])
    pi3 = np.array([[0.7, 0.3, 0.2], [0.3, 0.6, 0.25], [0.2, 0.25, 0.5]])
    lam3 = forward_biased_weights(alpha, pi3)
    worst_q3 = float(np.max(np.abs(debias_algebraic_general(lam3, pi3) - alpha)))
    ok = worst_q2 < 1e-8 and worst_q3 < 1e-5
    _criterion(3, "algebraic de-bias round trips", ok,
               f"worst two-class error {worst_q2:.2e}, three-class {worst_q3:.2e}")


def test_criterion_4_likelihood_forms_agree():
    rng = np.random.default_rng(20250804)
    worst = 0.0
    done = 0
    while done < 100:
        n = int(rng.integers(3, 9))
        sample = make_sample(THETA, n, seed=int(rng.integers(1 << 30)))
        stats = count_stats(sample)
        if stats.q < 2:
            continue
        count_form = log_likelihood_rds(stats, THETA)
        pair_form = product_form_loglik(sample, THETA)
        worst = max(worst, abs(count_form - pair_form))
        done += 1
    _, tri_stats = triangle_stats()
    worked = log_likelihood_rds(tri_stats, THETA)
    ok = worst < 1e-10 and abs(worked - (-2.9594)) < 1e-4
    _criterion(4, "pairwise and count likelihood forms agree", ok,
               f"worst gap {worst:.2e}, worked value {worked:.5f}")


def test_criterion_5_mle_certification():
    rng = np.random.default_rng(20250805)
    worst_residual = 0.0
    for _ in range(100):
        sample = make_sample(THETA, 60, seed=int(rng.integers(1 << 30)))
        stats = count_stats(sample)
        est = mle_complete(stats)
        if est.diagnostics["converged"] != 1.0:
            _criterion(5, "score residual below 1e-6 at every fit", False,
                       "a fit failed to converge")
        residual = np.max(np.abs(score_residual_rds(
            stats, SbmParams(est.alpha, est.pi))))
        worst_residual = max(worst_residual, float(residual))
    worst_oracle = 0.0
    for _ in range(100):
        n = int(rng.integers(4, 30))
        total = n * (n - 1) // 2
        n_edges = int(rng.integers(n, total))
        est = mle_complete(q1_stats(n_edges, total - n_edges, n))
        oracle = (n_edges - (n - 1)) / (total - (n - 1))
        worst_oracle = max(worst_oracle, abs(est.pi[0, 0] - oracle))
    ok = worst_residual < 1e-6 and worst_oracle < 1e-8
    _criterion(5, "score certification and single-class oracle", ok,
               f"worst residual {worst_residual:.2e}, worst oracle gap {worst_oracle:.2e}")


def test_criterion_6_consistency_sweep():
    mses = {}
    for n in (100, 400, 1600):
        config = ExperimentConfig(
            q=2, alpha=np.array([2.0 / 3.0, 1.0 / 3.0]),
            pi=np.array([[0.7, 0.4], [0.4, 0.8]]), n=n, replicates=20, seed=606,
            methods=("mle-complete", "debias-complete"),
        )
        report = run_experiment(config)
        mses[n] = {
            "pi_11": report.mse("mle-complete", "pi_11"),
            "pi_12": report.mse("mle-complete", "pi_12"),
            "pi_22": report.mse("mle-complete", "pi_22"),
            "alpha": report.mse("debias-complete", "alpha_1"),
        }
    ok = all(
        mses[100][key] > mses[400][key] > mses[1600][key]
        for key in ("pi_11", "pi_12", "pi_22", "alpha")
    )
    detail = "; ".join(
        f"{key}: " + " > ".join(f"{mses[n][key]:.2e}" for n in (100, 400, 1600))
        for key in ("pi_11", "alpha")
    )
    _criterion(6, "errors shrink strictly as the sample grows", ok, detail)


def test_criterion_7_fitted_graphon_tracks_sample():
    values = []
    for rep in range(20):
        sample = make_sample(THETA, 800, seed=70_000 + rep)
        fit = classical_estimator(count_stats(sample))
        chi = build_empirical_graphon(fit.alpha, fit.pi)
        values.append(dsub_truncated(sample, chi, 3))
    mean_dist = float(np.mean(values))
    _criterion(7, "mean subgraph distance of fitted graphon below 0.02",
               mean_dist < 0.02, f"mean over 20 replicates {mean_dist:.4f}")


def test_criterion_8_saem_degeneracy_checks():
    sample = make_sample(THETA, 60, seed=808)
    mle = mle_complete(count_stats(sample))
    data = SaemData(y=sample.y, n_classes=2)
    state = SaemState.initial(np.array([0.5, 0.5]),
                              np.array([[0.5, 0.4], [0.4, 0.5]]), sample.z, data)
    proposal = PinnedProposal(sample.z)
    rng = np.random.default_rng(0)
    for _ in range(200):
        state = saem_step(state, data, proposal, "rds", rng)
    gap_alpha = float(np.max(np.abs(state.alpha - mle.alpha)))
    gap_pi = float(np.max(np.abs(state.pi - mle.pi)))

    er = SbmParams([0.5, 0.5], np.full((2, 2), 0.55))
    tau = variational_fixed_point(sample.y, er).tau
    gap_tau = float(np.max(np.abs(tau - 0.5)))
    ok = gap_alpha < 1e-3 and gap_pi < 1e-3 and gap_tau < 1e-9
    _criterion(8, "pinned-label collapse and uniform fixed point", ok,
               f"alpha gap {gap_alpha:.1e}, pi gap {gap_pi:.1e}, tau gap {gap_tau:.1e}")


def test_criterion_9_no_bias_when_connectivity_is_flat():
    config = ExperimentConfig(
        q=2, alpha=np.array([0.4, 0.6]), pi=np.full((2, 2), 0.5), n=800,
        replicates=20, seed=909, methods=("classical", "debias-complete"),
    )
    report = run_experiment(config)
    raw = np.array([v for _, m, p, v in report.records
                    if m == "classical" and p == "alpha_1"])
    corrected = np.array([v for _, m, p, v in report.records
                          if m == "debias-complete" and p == "alpha_1"])
    mean_gap = abs(raw.mean() - corrected.mean())
    mean_abs_gap = float(np.abs(raw - corrected).mean())
    ok = mean_gap < 0.02 and mean_abs_gap < 0.02
    _criterion(9, "correction is a no-op for flat connectivity", ok,
               f"mean gap {mean_gap:.4f}, mean absolute gap {mean_abs_gap:.4f}")
