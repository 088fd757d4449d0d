"""Invariant suite behind the `validate` subcommand.

Each check is small, deterministic, and self-contained; together they
cover the documented invariants of every module, from closed-form
geometry values through Monte Carlo/analytic agreement. Checks raise
AssertionError with a diagnostic on violation and return a one-line
detail string on success.
"""
from __future__ import annotations

import math

import numpy as np

from . import _kernels
from .ao import AoOptions, ao_optimize, init_phases_random, init_phases_rsls, mse_gradient_angles
from .channel import color_factor, realize_training, trial_rng
from .errors import InfeasibleError
from .estimators import (
    LinearEstimator,
    PhaseSchedule,
    analytic_mse,
    lmmse_matrix,
    rsls_basis,
    rsls_matrix,
)
from .geometry import (
    ArrayGeometry,
    build_grid,
    element_distance,
    ff_response,
    fraunhofer_distance,
    nf_response,
    wave_vector,
)
from .spatial import ScatteringProfile, numerical_rank
from .experiments import (
    SweepConfig,
    high_band_scenario,
    nmse_monte_carlo,
    prepare_estimator,
    run_sweep,
    baseline_scenario,
    write_records_csv,
)

__all__ = ["run_validation", "CHECKS"]


def _baseline_model(field_kind: str = "NF"):
    return baseline_scenario().build(field_kind)


def check_fraunhofer_closed_form() -> str:
    wide = ArrayGeometry(n_h=100, n_v=50, spacing=2e-3, wavelength=1e-3)
    base = baseline_scenario().geometry()
    r_wide = fraunhofer_distance(wide)
    r_base = fraunhofer_distance(base)
    assert r_wide == 100.0, f"expected 100 m, got {r_wide!r}"
    assert r_base == 29.6, f"expected 29.6 m, got {r_base!r}"
    return f"panel examples give {r_wide:g} m and {r_base:g} m"


def check_response_unit_modulus() -> str:
    grid = build_grid(baseline_scenario().geometry())
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(20):
        r = rng.uniform(2.0, 40.0)
        az = rng.uniform(-1.4, 1.4)
        el = rng.uniform(-1.4, 1.4)
        a_nf = nf_response(r, az, el, grid)
        a_ff = ff_response(az, el, grid)
        worst = max(worst, np.abs(np.abs(a_nf) - 1.0).max(),
                    np.abs(np.abs(a_ff) - 1.0).max())
        assert a_nf[0] == 1.0 + 0.0j, "reference element must have zero phase"
        assert a_ff[0] == 1.0 + 0.0j, "reference element must have zero phase"
    assert worst < 1e-12, f"modulus deviates by {worst:.2e}"
    return f"20 random draws, modulus deviation {worst:.1e}"


def check_element_distance_norm() -> str:
    rng = np.random.default_rng(12)
    worst = 0.0
    for _ in range(200):
        r = rng.uniform(1.0, 50.0)
        az, el = rng.uniform(-1.5, 1.5, 2)
        u = rng.uniform(-0.2, 0.2, 3)
        direct = float(np.linalg.norm(r * wave_vector(az, el) - u))
        worst = max(worst, abs(element_distance(r, az, el, u) - direct))
    assert worst < 1e-9, f"distance mismatch {worst:.2e}"
    return f"matches vector norm within {worst:.1e} over 200 draws"


def check_far_field_limit() -> str:
    grid = build_grid(baseline_scenario().geometry())
    az, el = math.radians(40), math.radians(-25)
    a_nf = nf_response(1e7, az, el, grid)
    a_ff = ff_response(az, el, grid)
    gap = np.abs(a_nf - a_ff).max()
    assert gap < 1e-4, f"far response does not converge: {gap:.2e}"
    return f"response at 10^7 m within {gap:.1e} of the plane wave"


def check_spread_derivation() -> str:
    from .spatial import derive_spreads
    dr, dphi = derive_spreads(15.0, math.radians(-20), math.radians(1))
    expect_dr = abs(15.0 / 2 * (math.cos(math.radians(-19)) - math.cos(math.radians(-21))))
    expect_dphi = math.atan(expect_dr / (15.0 * math.cos(math.radians(-20))))
    assert abs(dr - expect_dr) < 1e-12 and abs(dphi - expect_dphi) < 1e-12
    dr_e, _ = derive_spreads(25.0, math.radians(20), math.radians(3))
    assert abs(dr_e - 0.4475) < 5e-4, f"interference range spread {dr_e:.4f}"
    return f"range spread {dr:.5f} m, azimuth spread {dphi:.5f} rad"


def check_correlation_hygiene() -> str:
    model = _baseline_model()
    for name in ("r_h", "r_g", "r_e", "r_x", "r_q"):
        getattr(model, name).validate(rtol=1e-6)
    return "r_h r_g r_e r_x r_q all Hermitian PSD with consistent trace"


def check_quadrature_doubling() -> str:
    worst = 0.0
    for spec in (baseline_scenario(), high_band_scenario()):
        base = spec.build()
        doubled_profile = ScatteringProfile(
            quadrature_points=tuple(2 * v for v in spec.quadrature))
        from dataclasses import replace
        fine = replace(base, profile=doubled_profile)
        for name in ("r_h", "r_g", "r_e"):
            a = getattr(base, name).entries
            b = getattr(fine, name).entries
            worst = max(worst, float(np.linalg.norm(a - b) / np.linalg.norm(b)))
    assert worst < 1e-4, f"doubling changes a matrix by {worst:.2e}"
    return f"both panel regimes converged, worst change {worst:.1e}"


def check_cascade_rank() -> str:
    rank = numerical_rank(_baseline_model().r_x)
    assert 12 <= rank <= 18, f"cascaded rank {rank} outside [12, 18]"
    return f"rank of the cascaded correlation is {rank}"


def check_coloring_roundtrip() -> str:
    model = _baseline_model()
    worst = 0.0
    for name in ("r_h", "r_g", "r_e"):
        matrix = getattr(model, name)
        factor = color_factor(matrix)
        err = np.abs(factor.matrix @ factor.matrix.conj().T - matrix.entries).max()
        worst = max(worst, float(err))
    assert worst < 1e-10, f"factor reconstruction error {worst:.2e}"
    return f"L L^H reconstructs each matrix within {worst:.1e}"


def check_training_reproducible() -> str:
    model = _baseline_model()
    a = realize_training(model, 15, trial_rng(99, 0, 0, 5))
    b = realize_training(model, 15, trial_rng(99, 0, 0, 5))
    assert np.array_equal(a.h, b.h) and np.array_equal(a.e, b.e)
    trials = 3000
    acc = np.zeros((model.grid.n_elements,) * 2, dtype=complex)
    for t in range(trials):
        h = realize_training(model, 1, trial_rng(99, 0, 0, t)).h
        acc += np.outer(h, h.conj())
    rel = np.linalg.norm(acc / trials - model.r_h.entries) / np.linalg.norm(model.r_h.entries)
    assert rel < 0.15, f"sample covariance off by {rel:.3f}"
    return f"bit-reproducible; sample covariance within {rel:.3f} at {trials} trials"


def check_lmmse_forms_agree() -> str:
    model = _baseline_model()
    schedule = init_phases_rsls(model.r_x, 15)
    est = lmmse_matrix(schedule.matrix, model.r_x, model.r_q, 0.3, 0.7)
    general = analytic_mse(est, schedule.matrix, model.r_x, model.r_q, 0.3, 0.7)
    matched = float(np.trace(model.r_x.entries
                             - est.matrix @ schedule.matrix @ model.r_x.entries).real)
    assert abs(general - matched) < 1e-9 * matched
    return f"generalized and matched forms agree at {general:.6f}"


def check_isotropic_closed_form() -> str:
    from .spatial import CorrelationMatrix
    n, beta, sz2 = 16, 1.0, 0.5
    r_iso = CorrelationMatrix(entries=beta * np.eye(n, dtype=complex), power=beta)
    dft = np.exp(-2j * np.pi * np.outer(np.arange(n), np.arange(n)) / n)
    est = lmmse_matrix(dft, r_iso, r_iso, 0.0, sz2)
    mse = analytic_mse(est, dft, r_iso, r_iso, 0.0, sz2)
    closed = n * beta - beta**2 * n**2 / (beta * n + sz2)
    assert abs(mse - closed) < 1e-9, f"{mse} != {closed}"
    return f"full-pilot isotropic error {mse:.6f} matches {closed:.6f}"


def check_gradient_finite_difference() -> str:
    rng = np.random.default_rng(42)
    worst = 0.0
    for _ in range(100):
        n, uses = 8, 6
        a = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
        r_x = a @ a.conj().T / n
        b = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n)))
        r_q = b @ b.conj().T / n
        theta = rng.uniform(-np.pi, np.pi, (uses, n))
        lam = (rng.standard_normal((n, uses)) + 1j * rng.standard_normal((n, uses)))
        se2, sz2, rho = rng.uniform(0.1, 2.0, 3)
        est = LinearEstimator(matrix=lam, rho_tr=rho)

        grad = mse_gradient_angles(theta, lam, r_x, r_q, se2, sz2, rho)
        fd = np.zeros_like(theta)
        h = 1e-6
        for idx in np.ndindex(theta.shape):
            tp, tm = theta.copy(), theta.copy()
            tp[idx] += h
            tm[idx] -= h
            fd[idx] = (analytic_mse(est, np.exp(1j * tp), r_x, r_q, se2, sz2)
                       - analytic_mse(est, np.exp(1j * tm), r_x, r_q, se2, sz2)) / (2 * h)
        rel = np.abs(grad - fd).max() / max(np.abs(fd).max(), 1.0)
        worst = max(worst, float(rel))
    assert worst < 1e-6, f"gradient mismatch {worst:.2e}"
    return f"100 draws, worst relative error {worst:.1e}"


def check_ao_monotone() -> str:
    model = _baseline_model()
    options = AoOptions(max_outer=60)
    drops = []
    for init in (init_phases_rsls(model.r_x, 15),
                 init_phases_random(15, model.grid.n_elements, trial_rng(5, 0, 1, 0))):
        res = ao_optimize(model.r_x, model.r_q, 15, 10 ** -0.5, 1.0,
                          init=init, options=options)
        mse = res.trace.mse
        assert np.all(np.diff(mse) <= 1e-12 * mse[0]), "trace increased"
        drops.append(10 * math.log10(mse[0] / mse[-1]))
    return f"both inits non-increasing, drops {drops[0]:.1f} and {drops[1]:.1f} dB"


def check_mc_analytic_agreement() -> str:
    model = _baseline_model()
    options = AoOptions(max_outer=80)
    worst = 0.0
    for kind in ("LMMSE-Phi0", "LMMSE-AO"):
        prep = prepare_estimator(kind, model, None, 15, 10 ** -0.5, 1.0, 1.0, options)
        rec = nmse_monte_carlo(model, prep.schedule, prep.estimator, 4000, 17,
                               prep.eval_sigma_e2, 1.0, label=kind)
        rel = abs(rec.nmse_linear - rec.nmse_analytic_linear) / rec.nmse_analytic_linear
        worst = max(worst, rel)
    assert worst < 0.05, f"MC off analytic by {worst:.3f}"
    return f"two combiners within {worst:.3f} of closed form at 4000 trials"


def check_null_estimator() -> str:
    model = _baseline_model()
    schedule = init_phases_rsls(model.r_x, 15)
    null = LinearEstimator(matrix=np.zeros((model.grid.n_elements, 15), dtype=complex))
    rec = nmse_monte_carlo(model, schedule, null, 500, 23, 0.3, 1.0, label="null")
    assert abs(rec.nmse_linear - 1.0) < 1e-12, f"null NMSE {rec.nmse_linear}"
    return "zero estimator scores NMSE exactly 1"


def check_exact_recovery_limit() -> str:
    model = _baseline_model()
    n = model.grid.n_elements
    rng = np.random.default_rng(31)
    phi = np.exp(1j * rng.uniform(-np.pi, np.pi, (n, n)))
    est = lmmse_matrix(phi, model.r_x, model.r_q, 0.0, 1e-12)
    rec = nmse_monte_carlo(model, PhaseSchedule(np.angle(phi)), est, 300, 3,
                           0.0, 1e-12, label="full-pilot")
    assert rec.nmse_linear < 1e-6, f"recovery NMSE {rec.nmse_linear:.2e}"
    return f"noise-free full-pilot NMSE {rec.nmse_linear:.1e}"


def check_rsls_feasibility() -> str:
    model = _baseline_model()
    basis = rsls_basis(model.r_x)
    r = basis.shape[1]
    schedule = init_phases_rsls(model.r_x, r)
    rsls_matrix(schedule.matrix, basis)
    try:
        rsls_matrix(schedule.matrix[: r - 1], basis)
    except InfeasibleError:
        return f"feasible at {r} uses, infeasible at {r - 1}"
    raise AssertionError("short schedule unexpectedly feasible")


def check_schedule_inits() -> str:
    model = _baseline_model()
    a = init_phases_rsls(model.r_x, 30)
    b = init_phases_rsls(model.r_x, 30)
    assert np.array_equal(a.angles, b.angles), "eigen-based init not deterministic"
    assert np.abs(np.abs(a.matrix) - 1.0).max() < 1e-12, "schedule not unit modulus"
    r1 = init_phases_random(15, 24, trial_rng(1, 0, 1, 0))
    r2 = init_phases_random(15, 24, trial_rng(2, 0, 1, 0))
    assert not np.array_equal(r1.angles, r2.angles), "seeds produce equal schedules"
    return "deterministic eigen init, seed-dependent random init"


def check_analytic_ordering() -> str:
    model = _baseline_model()
    se2, sz2 = 10 ** -0.5, 1.0
    options = AoOptions(max_outer=120)
    values = {}
    for kind in ("LMMSE-AO", "LMMSE-Phi0", "RS-LS"):
        prep = prepare_estimator(kind, model, None, 15, se2, sz2, 1.0, options)
        values[kind] = analytic_mse(prep.estimator, prep.schedule.matrix,
                                    model.r_x, model.r_q, se2, sz2)
    assert values["LMMSE-AO"] <= values["LMMSE-Phi0"] <= values["RS-LS"], values
    return ("closed-form errors ordered: "
            + " <= ".join(f"{values[k]:.3f}" for k in ("LMMSE-AO", "LMMSE-Phi0", "RS-LS")))


def check_csv_deterministic(tmp_dir=None) -> str:
    import tempfile
    from pathlib import Path

    cfg = SweepConfig(
        name="determinism", scenario=baseline_scenario(), sweep_var="snr_db",
        grid=(0.0, 10.0), estimators=("LMMSE-Phi0", "RS-LS"), trials=200, seed=7)
    with tempfile.TemporaryDirectory(dir=tmp_dir) as tmp:
        p1, p2 = Path(tmp) / "a.csv", Path(tmp) / "b.csv"
        write_records_csv(run_sweep(cfg), p1)
        write_records_csv(run_sweep(cfg), p2)
        b1, b2 = p1.read_bytes(), p2.read_bytes()
    assert b1 == b2, "repeated runs differ"
    return f"repeated two-point sweep byte-identical ({len(b1)} bytes)"


CHECKS = (
    ("fraunhofer_closed_form", check_fraunhofer_closed_form),
    ("response_unit_modulus", check_response_unit_modulus),
    ("element_distance_norm", check_element_distance_norm),
    ("far_field_limit", check_far_field_limit),
    ("spread_derivation", check_spread_derivation),
    ("correlation_hygiene", check_correlation_hygiene),
    ("quadrature_doubling", check_quadrature_doubling),
    ("cascade_rank", check_cascade_rank),
    ("coloring_roundtrip", check_coloring_roundtrip),
    ("training_reproducible", check_training_reproducible),
    ("lmmse_forms_agree", check_lmmse_forms_agree),
    ("isotropic_closed_form", check_isotropic_closed_form),
    ("gradient_finite_difference", check_gradient_finite_difference),
    ("ao_monotone", check_ao_monotone),
    ("mc_analytic_agreement", check_mc_analytic_agreement),
    ("null_estimator", check_null_estimator),
    ("exact_recovery_limit", check_exact_recovery_limit),
    ("rsls_feasibility", check_rsls_feasibility),
    ("schedule_inits", check_schedule_inits),
    ("analytic_ordering", check_analytic_ordering),
    ("csv_deterministic", check_csv_deterministic),
)


def run_validation(quiet: bool = False) -> int:
    """Run every check; print one line each; return the failure count."""
    failures = 0
    if not quiet:
        print(f"backend: {_kernels.get_backend()}")
    for name, fn in CHECKS:
        try:
            detail = fn()
        except AssertionError as exc:
            failures += 1
            if not quiet:
                print(f"FAIL {name}: {exc}")
        except Exception as exc:  # surface unexpected breakage as a failure
            failures += 1
            if not quiet:
                print(f"FAIL {name}: unexpected {type(exc).__name__}: {exc}")
        else:
            if not quiet:
                print(f"  ok {name}: {detail}")
    if not quiet:
        print(f"{len(CHECKS) - failures}/{len(CHECKS)} checks passed")
    return failures
