"""Linear estimators: covariance algebra, LMMSE optimality, subspace LS."""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from nfris.channel import color_factor, complex_normal, trial_rng
from nfris.errors import InfeasibleError, NumericalError
from nfris.estimators import (
    LinearEstimator,
    PhaseSchedule,
    analytic_mse,
    emi_training_cov,
    lmmse_matrix,
    observation_cov,
    rsls_basis,
    rsls_matrix,
)
from nfris.spatial import numerical_rank


def dft_schedule(n_uses: int, n_elements: int) -> np.ndarray:
    i, n = np.meshgrid(np.arange(n_uses), np.arange(n_elements), indexing="ij")
    return np.exp(-2j * np.pi * i * n / n_elements)


def random_schedule(rng, n_uses: int, n_elements: int) -> np.ndarray:
    return np.exp(2j * np.pi * rng.random((n_uses, n_elements)))


def batch_observations(model, phi, rho, sigma_e, sigma_z, trials, seed):
    """Vectorized draws of (x, y) following the single-trial contract."""
    fac_h, fac_g, fac_e = model.factors
    rng = trial_rng(seed, 0, 0, 0)
    h = fac_h.color(complex_normal(rng, (trials, fac_h.rank)))
    g = fac_g.color(complex_normal(rng, (trials, fac_g.rank)))
    e = fac_e.color(complex_normal(rng, (trials, phi.shape[0], fac_e.rank)))
    z = complex_normal(rng, (trials, phi.shape[0]))
    x = g * h
    y = np.sqrt(rho) * (x @ phi.T)
    y += sigma_e * np.einsum("in,tn,tin->ti", phi, g, e)
    y += sigma_z * z
    return x, y


# ---------------------------------------------------------------- schedules


def test_phase_schedule_validation():
    with pytest.raises(ValueError, match="uses, elements"):
        PhaseSchedule(np.zeros(4))
    with pytest.raises(ValueError, match="unit modulus"):
        PhaseSchedule.from_matrix(np.full((2, 3), 0.5 + 0j))
    sched = PhaseSchedule.from_matrix(dft_schedule(3, 4))
    assert sched.n_uses == 3 and sched.n_elements == 4
    assert_allclose(sched.matrix, dft_schedule(3, 4), atol=1e-12)


def test_phase_schedule_shift(rng):
    sched = PhaseSchedule(rng.random((3, 4)))
    delta = rng.random((3, 4))
    moved = sched.shifted(delta)
    assert_allclose(moved.angles, sched.angles + delta, atol=0)
    assert_allclose(np.abs(moved.matrix), 1.0, atol=1e-12)


# --------------------------------------------------------------- covariance


def test_emi_training_cov_oracle(toy_model, rng):
    phi = random_schedule(rng, 4, toy_model.grid.n_elements)
    cov = emi_training_cov(phi, toy_model.r_q)
    full = phi @ toy_model.r_q.entries @ phi.conj().T
    assert_allclose(cov, np.diag(np.diag(full).real), atol=1e-12)
    assert np.all(np.diag(cov) > 0)


def test_observation_cov_against_sample_covariance(toy_model, rng):
    phi = random_schedule(rng, 5, toy_model.grid.n_elements)
    rho, sigma_e, sigma_z = 2.0, 0.6, 0.4
    r_y = observation_cov(phi, toy_model.r_x, toy_model.r_q,
                          sigma_e ** 2, sigma_z ** 2, rho)
    assert_allclose(r_y, r_y.conj().T, atol=0)

    _, y = batch_observations(toy_model, phi, rho, sigma_e, sigma_z,
                              trials=200_000, seed=21)
    yn = y / np.sqrt(rho)
    sample = yn.T @ yn.conj() / len(yn)
    rel = np.linalg.norm(sample - r_y) / np.linalg.norm(r_y)
    assert rel < 0.02


# -------------------------------------------------------------------- LMMSE


def test_lmmse_isotropic_closed_form():
    n, beta, sigma_z2 = 16, 1.0, 0.5
    r = beta * np.eye(n, dtype=complex)
    phi = dft_schedule(n, n)
    est = lmmse_matrix(phi, r, r, 0.0, sigma_z2)
    mse = analytic_mse(est, phi, r, r, 0.0, sigma_z2)
    expected = n * beta - beta ** 2 * n ** 2 / (beta * n + sigma_z2)
    assert mse == pytest.approx(expected, rel=1e-12)


def test_analytic_mse_collapses_at_lmmse_point(toy_model, rng):
    phi = random_schedule(rng, 6, toy_model.grid.n_elements)
    est = lmmse_matrix(phi, toy_model.r_x, toy_model.r_q, 0.3, 0.2)
    general = analytic_mse(est, phi, toy_model.r_x, toy_model.r_q, 0.3, 0.2)
    r_x = toy_model.r_x.entries
    collapsed = np.trace(r_x).real - np.trace(est.matrix @ phi @ r_x).real
    assert general == pytest.approx(collapsed, rel=1e-10)


def test_lmmse_is_a_stationary_point(toy_model, rng):
    phi = random_schedule(rng, 6, toy_model.grid.n_elements)
    args = (phi, toy_model.r_x, toy_model.r_q, 0.3, 0.2)
    est = lmmse_matrix(*args)
    base = analytic_mse(est, *args)
    for _ in range(10):
        delta = complex_normal(rng, est.matrix.shape)
        for eps in (1e-3, 1e-2, 0.1):
            bumped = LinearEstimator(matrix=est.matrix + eps * delta)
            assert analytic_mse(bumped, *args) >= base - 1e-12


def test_analytic_mse_against_monte_carlo(toy_model, rng):
    phi = random_schedule(rng, 6, toy_model.grid.n_elements)
    rho, se2, sz2 = 1.5, 0.4, 0.25
    matched = lmmse_matrix(phi, toy_model.r_x, toy_model.r_q, se2, sz2, rho)
    # deliberately mismatched combiner: the formula must hold for it too
    stale = LinearEstimator(
        matrix=lmmse_matrix(phi, toy_model.r_x, toy_model.r_q, 0.0, 4.0, rho).matrix,
        rho_tr=rho,
    )
    x, y = batch_observations(toy_model, phi, rho, np.sqrt(se2), np.sqrt(sz2),
                              trials=200_000, seed=33)
    for est in (matched, stale):
        xh = (y @ est.matrix.T) / np.sqrt(rho)
        mc = float(np.mean(np.sum(np.abs(xh - x) ** 2, axis=1)))
        ana = analytic_mse(est, phi, toy_model.r_x, toy_model.r_q, se2, sz2)
        assert mc == pytest.approx(ana, rel=0.02)
    matched_mse = analytic_mse(matched, phi, toy_model.r_x, toy_model.r_q, se2, sz2)
    stale_mse = analytic_mse(stale, phi, toy_model.r_x, toy_model.r_q, se2, sz2)
    assert matched_mse < stale_mse


def test_mse_monotone_in_impairments(toy_model, rng):
    phi = random_schedule(rng, 8, toy_model.grid.n_elements)
    prior = np.trace(toy_model.r_x.entries).real

    def solved_mse(se2, sz2):
        est = lmmse_matrix(phi, toy_model.r_x, toy_model.r_q, se2, sz2)
        return analytic_mse(est, phi, toy_model.r_x, toy_model.r_q, se2, sz2)

    noise_curve = [solved_mse(0.1, sz2) for sz2 in (0.01, 0.1, 1.0, 10.0)]
    emi_curve = [solved_mse(se2, 0.1) for se2 in (0.01, 0.1, 1.0, 10.0)]
    for curve in (noise_curve, emi_curve):
        assert all(a < b for a, b in zip(curve, curve[1:]))
        assert all(0.0 < v <= prior for v in curve)


def test_lmmse_scaling_invariance(toy_model, rng):
    # rho only rescales the effective impairment powers
    phi = random_schedule(rng, 5, toy_model.grid.n_elements)
    rho = 7.0
    a = lmmse_matrix(phi, toy_model.r_x, toy_model.r_q, 0.9, 0.5, rho)
    b = lmmse_matrix(phi, toy_model.r_x, toy_model.r_q, 0.9 / rho, 0.5 / rho, 1.0)
    assert_allclose(a.matrix, b.matrix, atol=1e-12)
    assert a.rho_tr == rho
    y = complex_normal(rng, phi.shape[0])
    assert_allclose(a.estimate(y), (a.matrix @ y) / np.sqrt(rho), atol=0)


def test_lmmse_rejects_singular_observation(toy_model, rng):
    # more pilot uses than elements with no noise: R_y cannot be PD
    n = toy_model.grid.n_elements
    phi = random_schedule(rng, n + 2, n)
    with pytest.raises(NumericalError, match="not positive definite"):
        lmmse_matrix(phi, toy_model.r_x, toy_model.r_q, 0.0, 0.0)


# ------------------------------------------------------------- subspace LS


def test_rsls_basis_properties(toy_model):
    basis = rsls_basis(toy_model.r_x)
    r_x = toy_model.r_x.entries
    assert basis.shape == (toy_model.grid.n_elements, numerical_rank(r_x, tol=1e-6))
    assert_allclose(basis.conj().T @ basis, np.eye(basis.shape[1]), atol=1e-12)
    captured = np.trace(basis.conj().T @ r_x @ basis).real / np.trace(r_x).real
    assert captured > 0.999


def test_rsls_basis_rank_one(rng):
    a = complex_normal(rng, 6)
    basis = rsls_basis(np.outer(a, a.conj()))
    assert basis.shape == (6, 1)
    assert abs(basis[:, 0].conj() @ a) == pytest.approx(np.linalg.norm(a), rel=1e-12)


def test_rsls_basis_rejects_zero_matrix():
    with pytest.raises(NumericalError, match="rank zero"):
        rsls_basis(np.zeros((4, 4), dtype=complex))


def test_rsls_exact_recovery_in_subspace(toy_model, rng):
    basis = rsls_basis(toy_model.r_x)
    r = basis.shape[1]
    phi = random_schedule(rng, r + 2, toy_model.grid.n_elements)
    est = rsls_matrix(phi, basis)
    x = basis @ complex_normal(rng, r)
    xh = est.estimate(phi @ x)
    assert_allclose(xh, x, atol=1e-10)
    assert_allclose(est.estimate(np.zeros(r + 2)), 0.0, atol=0)


def test_rsls_infeasibility(toy_model, rng):
    basis = rsls_basis(toy_model.r_x)
    r = basis.shape[1]
    n = toy_model.grid.n_elements
    with pytest.raises(InfeasibleError, match="cannot resolve"):
        rsls_matrix(random_schedule(rng, r - 1, n), basis)
    # repeated rows make the projected combining matrix singular
    row = random_schedule(rng, 1, n)
    with pytest.raises(InfeasibleError, match="condition"):
        rsls_matrix(np.repeat(row, r, axis=0), basis)


def test_rsls_unbiased_under_noise(toy_model, rng):
    # with zero-mean noise the subspace estimate is unbiased for subspace x
    basis = rsls_basis(toy_model.r_x)
    r = basis.shape[1]
    phi = random_schedule(rng, r + 3, toy_model.grid.n_elements)
    est = rsls_matrix(phi, basis)
    x = basis @ complex_normal(rng, r)
    y_clean = phi @ x
    noise = 0.1 * complex_normal(rng, (50_000, len(y_clean)))
    xh = (y_clean + noise) @ est.matrix.T
    assert_allclose(xh.mean(axis=0), x, atol=2e-3)
