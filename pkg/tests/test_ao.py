"""Alternating schedule optimization: gradients, line search, trace contract."""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from nfris.ao import (
    AoOptions,
    AoTrace,
    ao_optimize,
    init_phases_random,
    init_phases_rsls,
    mse_gradient_angles,
    phase_step,
)
from nfris.channel import complex_normal, trial_rng
from nfris.errors import ConfigError
from nfris.estimators import LinearEstimator, analytic_mse, lmmse_matrix
from nfris.spatial import psd_project


def random_psd(rng, n):
    b = complex_normal(rng, (n, n + 2))
    return psd_project(b @ b.conj().T).entries


def test_options_validation():
    AoOptions(max_outer=0)  # evaluate-only configuration is allowed
    with pytest.raises(ConfigError):
        AoOptions(tol_rel=-1e-9)
    with pytest.raises(ConfigError):
        AoOptions(max_outer=-1)
    for c in (0.0, 1.0):
        with pytest.raises(ConfigError):
            AoOptions(armijo_c=c)


def test_init_rsls_collects_dominant_mode_coherently(rng):
    # rank-one correlation: the first row must sum the magnitudes of the
    # generating vector, which only the conjugate phase convention does
    a = complex_normal(rng, 7)
    sched = init_phases_rsls(np.outer(a, a.conj()), n_uses=3)
    collected = np.abs(sched.matrix[0] @ a)
    assert collected == pytest.approx(np.sum(np.abs(a)), rel=1e-12)


def test_init_rsls_zero_entries_and_fill_rows(rng):
    a = complex_normal(rng, 3) * 2.0
    b = complex_normal(rng, 3)
    r = np.zeros((6, 6), dtype=complex)
    r[:3, :3] = np.outer(a, a.conj())
    r[3:, 3:] = np.outer(b, b.conj())
    sched = init_phases_rsls(r, n_uses=8)
    assert sched.angles.shape == (8, 6)
    # the dominant eigenvector lives in the upper block; exact zeros in the
    # lower block map to phase zero rather than numerical garbage
    assert_allclose(sched.angles[0, 3:], 0.0, atol=0)
    # rows past the matrix dimension come from a fixed stream
    again = init_phases_rsls(r, n_uses=8)
    assert_allclose(again.angles, sched.angles, atol=0)
    assert np.all(np.abs(sched.angles[6:]) <= np.pi)


def test_init_random_uses_supplied_generator():
    a = init_phases_random(4, 6, trial_rng(5, 0, 1, 0))
    b = init_phases_random(4, 6, trial_rng(5, 0, 1, 0))
    c = init_phases_random(4, 6, trial_rng(5, 0, 1, 1))
    assert_allclose(a.angles, b.angles, atol=0)
    assert not np.array_equal(a.angles, c.angles)
    assert a.angles.shape == (4, 6)


def test_gradient_against_finite_differences(rng):
    n, uses = 6, 3
    r_x = random_psd(rng, n)
    r_q = random_psd(rng, n)
    se2, sz2 = 0.4, 0.3
    angles = rng.uniform(-np.pi, np.pi, (uses, n))
    est = lmmse_matrix(np.exp(1j * rng.uniform(-np.pi, np.pi, (uses, n))),
                       r_x, r_q, se2, sz2)

    grad = mse_gradient_angles(angles, est.matrix, r_x, r_q, se2, sz2)

    def objective(a):
        return analytic_mse(est, np.exp(1j * a), r_x, r_q, se2, sz2)

    eps = 1e-6
    fd = np.zeros_like(grad)
    for i in range(uses):
        for k in range(n):
            up, down = angles.copy(), angles.copy()
            up[i, k] += eps
            down[i, k] -= eps
            fd[i, k] = (objective(up) - objective(down)) / (2 * eps)
    assert np.max(np.abs(grad - fd)) / np.max(np.abs(fd)) < 1e-6

    # the noise term of the objective does not depend on the schedule
    other = mse_gradient_angles(angles, est.matrix, r_x, r_q, se2, 100.0)
    assert_allclose(other, grad, atol=0)


def test_zero_combiner_gives_zero_step(rng):
    n, uses = 5, 2
    r_x = random_psd(rng, n)
    sched = init_phases_random(uses, n, rng)
    est = LinearEstimator(matrix=np.zeros((n, uses), dtype=complex))
    grad = mse_gradient_angles(sched.angles, est.matrix, r_x, r_x, 0.2, 0.1)
    assert_allclose(grad, 0.0, atol=0)
    out, alpha = phase_step(sched, est, r_x, r_x, 0.2, 0.1)
    assert out is sched and alpha == 0.0


def test_phase_step_satisfies_armijo_decrease(rng):
    n, uses = 6, 4
    r_x = random_psd(rng, n)
    r_q = random_psd(rng, n)
    sched = init_phases_random(uses, n, rng)
    est = lmmse_matrix(sched.matrix, r_x, r_q, 0.3, 0.2)
    before = analytic_mse(est, sched.matrix, r_x, r_q, 0.3, 0.2)
    stepped, alpha = phase_step(sched, est, r_x, r_q, 0.3, 0.2)
    assert alpha > 0.0
    after = analytic_mse(est, stepped.matrix, r_x, r_q, 0.3, 0.2)
    assert after < before


def test_single_use_optimum_matches_brute_force():
    # two elements, one pilot use: the matched error has a closed form on
    # a dense angle grid, giving an independent global optimum
    rng = trial_rng(17, 0, 0, 0)
    r_x = random_psd(rng, 2)
    r_q = random_psd(rng, 2)
    se2, sz2 = 0.5, 0.3

    k = 1441
    alpha, beta = np.meshgrid(np.linspace(-np.pi, np.pi, k),
                              np.linspace(-np.pi, np.pi, k), indexing="ij")
    phi = np.stack([np.exp(1j * alpha).ravel(), np.exp(1j * beta).ravel()], axis=1)
    r_y = np.einsum("ki,ij,kj->k", phi, r_x, phi.conj()).real
    r_y += se2 * np.einsum("ki,ij,kj->k", phi, r_q, phi.conj()).real + sz2
    cross = np.sum(np.abs(phi @ r_x) ** 2, axis=1)
    grid_best = float(np.min(np.trace(r_x).real - cross / r_y))

    result = ao_optimize(r_x, r_q, n_uses=1, sigma_e2=se2, sigma_z2=sz2,
                         options=AoOptions(tol_rel=1e-12, max_outer=2000))
    assert result.trace.mse[-1] <= grid_best + 1e-4 * np.trace(r_x).real


def test_ao_trace_contract(toy_model):
    r_x, r_q = toy_model.r_x, toy_model.r_q
    result = ao_optimize(r_x, r_q, n_uses=6, sigma_e2=0.3, sigma_z2=0.2)
    trace = result.trace
    assert np.all(np.diff(trace.mse) <= 1e-12 * trace.mse[0])
    assert trace.mse[-1] < trace.mse[0]
    assert trace.step_sizes[0] == 0.0
    assert trace.n_iterations == len(trace.mse) - 1
    assert trace.prior_power == pytest.approx(np.trace(r_x.entries).real, rel=1e-12)
    assert_allclose(trace.nmse_db, 10 * np.log10(trace.mse / trace.prior_power),
                    atol=0)
    with pytest.raises(ValueError):
        trace.mse[0] = 0.0
    # the returned estimator is matched to the returned schedule
    matched = lmmse_matrix(result.schedule.matrix, r_x, r_q, 0.3, 0.2)
    assert_allclose(result.estimator.matrix, matched.matrix, atol=1e-12)


def test_ao_stopping_modes(toy_model):
    r_x, r_q = toy_model.r_x, toy_model.r_q
    # iteration cap: runs exactly max_outer steps without claiming convergence
    capped = ao_optimize(r_x, r_q, n_uses=6, sigma_e2=0.3, sigma_z2=0.2,
                         options=AoOptions(max_outer=7, tol_rel=0.0)).trace
    assert not capped.converged
    assert len(capped.mse) == 8
    # stall tolerance: stops early and the last decrease is below it
    loose = AoOptions(tol_rel=1e-3, max_outer=500)
    stalled = ao_optimize(r_x, r_q, n_uses=6, sigma_e2=0.3, sigma_z2=0.2,
                          options=loose).trace
    assert stalled.converged
    assert len(stalled.mse) < 501
    assert stalled.mse[-2] - stalled.mse[-1] < loose.tol_rel * stalled.mse[-2]


def test_ao_evaluate_only(toy_model):
    r_x, r_q = toy_model.r_x, toy_model.r_q
    init = init_phases_rsls(r_x, 6)
    result = ao_optimize(r_x, r_q, n_uses=6, sigma_e2=0.1, sigma_z2=0.1,
                         init=init, options=AoOptions(max_outer=0))
    assert result.schedule is init
    assert len(result.trace.mse) == 1
    assert result.trace.step_sizes[0] == 0.0
    assert not result.trace.converged
    direct = lmmse_matrix(init.matrix, r_x, r_q, 0.1, 0.1)
    assert_allclose(result.estimator.matrix, direct.matrix, atol=0)


def test_ao_rejects_mismatched_init(toy_model):
    bad = init_phases_rsls(toy_model.r_x, 4)
    with pytest.raises(ConfigError, match="initial schedule"):
        ao_optimize(toy_model.r_x, toy_model.r_q, n_uses=6,
                    sigma_e2=0.1, sigma_z2=0.1, init=bad)


def test_ao_trace_shape_mismatch():
    with pytest.raises(ConfigError, match="matching length"):
        AoTrace(mse=np.ones(3), step_sizes=np.ones(2), prior_power=1.0,
                converged=False)


def test_ao_trace_to_csv(tmp_path, toy_model):
    result = ao_optimize(toy_model.r_x, toy_model.r_q, n_uses=6,
                         sigma_e2=0.3, sigma_z2=0.2,
                         options=AoOptions(max_outer=5, tol_rel=0.0))
    path = tmp_path / "trace.csv"
    result.trace.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "k,mse,nmse_db,step_size"
    assert len(lines) == len(result.trace.mse) + 1
    rows = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    assert_allclose(rows[:, 0], np.arange(len(result.trace.mse)), atol=0)
    assert_allclose(rows[:, 1], result.trace.mse, rtol=1e-11)
    assert_allclose(rows[:, 2], result.trace.nmse_db, rtol=1e-11)
    assert_allclose(rows[:, 3], result.trace.step_sizes, rtol=1e-11)
