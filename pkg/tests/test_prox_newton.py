from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from proxtik import (
    Estimator,
    LossModel,
    SolverError,
    SubproblemState,
    gram_matrix,
    newton_decrement,
    solve_subproblem,
    subproblem_gradient_coeffs,
    zero_estimator,
)
from proxtik.losses import loss_derivatives


def ridge_subproblem_solution(K, y, lam, beta_ref):
    """Direct normal-equations oracle: (K/n + lam I) beta = y/n + lam beta_ref."""
    n = K.n
    return np.linalg.solve(K.entries / n + lam * np.eye(n), y / n + lam * beta_ref)


def decrement_oracle(K, gamma, d2, lam):
    """Independent spectral evaluation of gamma' K (D K/n + lam I)^{-1} gamma.

    Symmetrized through S = sqrt(D):
      dec^2 = (1/lam) [gamma' K gamma - u' (lam I + S K S / n)^{-1} u / n],  u = S K gamma,
    with the inner inverse applied in the eigenbasis of the weighted matrix.
    """
    n = K.n
    S = np.sqrt(d2)
    Kg = K.entries @ gamma
    u = S * Kg
    W = (S[:, None] * K.entries * S[None, :]) / n
    w_vals, w_vecs = np.linalg.eigh(W)
    proj = w_vecs.T @ u
    inner = float(np.sum(proj**2 / (lam + w_vals)))
    dec_sq = (float(gamma @ Kg) - inner / n) / lam
    return np.sqrt(max(dec_sq, 0.0))


def test_gradient_zero_at_ridge_solution(small_regression, squared):
    dataset, K = small_regression
    lam = 0.05
    beta_ref = np.zeros(K.n)
    beta = ridge_subproblem_solution(K, dataset.labels, lam, beta_ref)
    state = SubproblemState(Estimator(beta, K), Estimator(beta_ref, K), lam)
    gamma = subproblem_gradient_coeffs(squared, dataset.labels, state)
    assert np.max(np.abs(gamma)) <= 1e-9


def test_gradient_stationary_at_reference(small_regression, squared):
    dataset, K = small_regression
    # labels equal to current predictions make d1 = 0, and beta = beta_ref kills the penalty
    beta = np.linspace(-1, 1, K.n)
    y = K.entries @ beta
    state = SubproblemState(Estimator(beta, K), Estimator(beta.copy(), K), lam=3.7)
    gamma = subproblem_gradient_coeffs(squared, y, state)
    assert np.max(np.abs(gamma)) == 0.0


def test_gradient_scalar_case(spline2, squared):
    # n=1: gamma = (k b - y) + lam (b - b_ref), k = 13/12
    K = gram_matrix(spline2, [0.3])
    k = K.entries[0, 0]
    b, b_ref, y, lam = 0.8, 0.2, 1.5, 0.4
    state = SubproblemState(Estimator(np.array([b]), K), Estimator(np.array([b_ref]), K), lam)
    gamma = subproblem_gradient_coeffs(squared, np.array([y]), state)
    assert gamma[0] == pytest.approx((k * b - y) + lam * (b - b_ref), rel=1e-15)


def test_gradient_rejects_nonfinite_predictions(small_regression, squared):
    dataset, K = small_regression
    bad = np.full(K.n, np.inf)
    state = SubproblemState(Estimator(bad, K), zero_estimator(K), 0.1)
    with pytest.raises(SolverError, match="non-finite"):
        subproblem_gradient_coeffs(squared, dataset.labels, state)


def test_decrement_zero_gradient(small_regression, squared):
    dataset, K = small_regression
    beta = np.linspace(-1, 1, K.n)
    y = K.entries @ beta
    state = SubproblemState(Estimator(beta, K), Estimator(beta.copy(), K), lam=0.3)
    assert newton_decrement(squared, y, state) == 0.0


@pytest.mark.parametrize("lam", [1e-3, 1e-1])
def test_decrement_squared_matches_spectral_oracle(small_regression, squared, lam):
    dataset, K = small_regression
    state = SubproblemState(
        Estimator(np.sin(np.arange(K.n) * 0.7), K), zero_estimator(K), lam
    )
    dec = newton_decrement(squared, dataset.labels, state)
    gamma = subproblem_gradient_coeffs(squared, dataset.labels, state)
    # for squared loss D = I: dec^2 = sum g_i^2 sigma_i / (sigma_i/n + lam) in the eigenbasis
    g = K.eigenvectors.T @ gamma
    oracle = np.sqrt(np.sum(g**2 * K.eigenvalues / (K.eigenvalues / K.n + lam)))
    assert dec == pytest.approx(oracle, rel=1e-8)
    assert dec == pytest.approx(decrement_oracle(K, gamma, np.ones(K.n), lam), rel=1e-8)


def test_decrement_logistic_matches_weighted_oracle(small_classification, logistic):
    dataset, K = small_classification
    lam = 0.02
    beta = 0.1 * np.cos(np.arange(K.n))
    state = SubproblemState(Estimator(beta, K), zero_estimator(K), lam)
    dec = newton_decrement(logistic, dataset.labels, state)
    gamma = subproblem_gradient_coeffs(logistic, dataset.labels, state)
    _, d2, _ = loss_derivatives(logistic, dataset.labels, K.entries @ beta)
    assert dec == pytest.approx(decrement_oracle(K, gamma, d2, lam), rel=1e-8)


def test_decrement_invariant_to_null_space_shift(spline2, squared):
    # duplicated inputs: e_1 - e_2 is in the null space of K
    K = gram_matrix(spline2, [0.4, 0.4, 0.8])
    y = np.array([1.0, 1.0, -0.5])
    lam = 0.05
    nu = np.array([1.0, -1.0, 0.0])
    assert np.max(np.abs(K.entries @ nu)) <= 1e-12
    beta = np.array([0.3, -0.1, 0.6])
    ref = zero_estimator(K)
    dec_base = newton_decrement(squared, y, SubproblemState(Estimator(beta, K), ref, lam))
    shifted_ref = Estimator(-nu, K)  # shifts gamma by exactly lam * nu
    dec_shift = newton_decrement(squared, y, SubproblemState(Estimator(beta, K), shifted_ref, lam))
    assert dec_shift == pytest.approx(dec_base, rel=1e-9)


def test_solve_matches_ridge_closed_form(small_regression, squared):
    dataset, K = small_regression
    lam = 0.01
    est, dec = solve_subproblem(squared, K, dataset.labels, zero_estimator(K), lam, tol=1e-10)
    oracle = ridge_subproblem_solution(K, dataset.labels, lam, np.zeros(K.n))
    rel = np.linalg.norm(est.coefficients - oracle) / np.linalg.norm(oracle)
    assert rel <= 1e-8
    assert dec <= 1e-10


def test_solve_postcondition_echo(small_classification, logistic):
    dataset, K = small_classification
    est, dec = solve_subproblem(logistic, K, dataset.labels, zero_estimator(K), 0.05, tol=1e-10)
    assert dec <= 1e-10
    state = SubproblemState(est, zero_estimator(K), 0.05)
    assert newton_decrement(logistic, dataset.labels, state) == dec


def test_solve_fixed_point_at_global_minimizer(spline2, squared):
    # reference interpolates the labels: the unregularized risk gradient vanishes there
    rng = np.random.default_rng(3)
    x = rng.random(12)
    K = gram_matrix(spline2, x)
    beta_star = np.linalg.solve(K.entries, rng.standard_normal(12))
    y = K.entries @ beta_star
    reference = Estimator(beta_star, K)
    est, dec = solve_subproblem(squared, K, y, reference, lam=0.2, tol=1e-10)
    assert np.array_equal(est.coefficients, beta_star)
    assert dec == 0.0


def test_solve_max_iter_exceeded(small_classification, logistic):
    dataset, K = small_classification
    with pytest.raises(SolverError, match="did not reach"):
        solve_subproblem(logistic, K, dataset.labels, zero_estimator(K), 1e-3, tol=1e-10, max_iter=1)


def test_solve_objective_monotone(small_classification, logistic):
    dataset, K = small_classification
    seen = []
    solve_subproblem(
        logistic, K, dataset.labels, zero_estimator(K), 1e-3, tol=1e-10,
        callback=lambda it, obj, dec: seen.append(obj),
    )
    assert len(seen) >= 3
    diffs = np.diff(seen)
    assert np.all(diffs <= 1e-12)


def test_prox_firmly_nonexpansive_spot_check(small_regression, squared):
    dataset, K = small_regression
    lam = 0.03
    rng = np.random.default_rng(8)
    a = Estimator(rng.standard_normal(K.n), K)
    b = Estimator(rng.standard_normal(K.n), K)
    pa, _ = solve_subproblem(squared, K, dataset.labels, a, lam, tol=1e-12)
    pb, _ = solve_subproblem(squared, K, dataset.labels, b, lam, tol=1e-12)

    def k_norm(u):
        return np.sqrt(max(u @ (K.entries @ u), 0.0))

    assert k_norm(pa.coefficients - pb.coefficients) <= k_norm(a.coefficients - b.coefficients) + 1e-8


def test_estimator_invariants(small_regression):
    dataset, K = small_regression
    est = Estimator(np.linspace(-2, 2, K.n), K)
    assert np.allclose(est.predictions(), K.entries @ est.coefficients)
    assert est.rkhs_norm_sq() >= -1e-10


def test_concurrent_solves_match_serial(small_classification, logistic):
    dataset, K = small_classification
    lams = [0.2, 0.05, 0.01, 0.002]

    def run(lam):
        est, dec = solve_subproblem(logistic, K, dataset.labels, zero_estimator(K), lam, tol=1e-9)
        return est.coefficients, dec

    serial = [run(lam) for lam in lams]
    with ThreadPoolExecutor(max_workers=4) as pool:
        threaded = list(pool.map(run, lams))
    for (cs, ds), (ct, dt) in zip(serial, threaded):
        assert np.array_equal(cs, ct)
        assert ds == dt
