"""Sweep machinery: presets, record schema, pairing, and CSV output."""
import csv
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

import nfris.experiments as experiments
from nfris.ao import AoOptions, init_phases_rsls
from nfris.errors import ConfigError
from nfris.estimators import lmmse_matrix
from nfris.experiments import (
    AO_TRACE_PRESETS,
    CSV_COLUMNS,
    ESTIMATOR_KINDS,
    SWEEP_PRESETS,
    AoTraceConfig,
    NmseRecord,
    NodeSpec,
    ScenarioSpec,
    SweepConfig,
    ao_trace_experiment,
    ao_trace_preset,
    nmse_monte_carlo,
    prepare_estimator,
    run_sweep,
    sweep_preset,
    baseline_scenario,
    write_records_csv,
)
from nfris.spatial import numerical_rank


def tiny_scenario() -> ScenarioSpec:
    return ScenarioSpec(
        wavelength=1e-3, n_h=4, n_v=2, spacing_wavelengths=10.0,
        tx=NodeSpec(5.0, math.radians(40), math.radians(-15), math.radians(2)),
        rx=NodeSpec(7.0, math.radians(-50), math.radians(-25), math.radians(2)),
        emi=NodeSpec(9.0, math.radians(-5), math.radians(15), math.radians(4)),
    )


def tiny_sweep(**overrides) -> SweepConfig:
    base = dict(
        name="tiny", scenario=tiny_scenario(), sweep_var="snr_db",
        grid=(0.0, 10.0), estimators=("LMMSE-Phi0", "RS-LS"),
        trials=64, seed=5,
        ao_options=AoOptions(max_outer=3),
    )
    base.update(overrides)
    return SweepConfig(**base)


# ------------------------------------------------------------------ presets


def test_presets_construct():
    for name in SWEEP_PRESETS:
        config = sweep_preset(name, trials=10, seed=3)
        assert config.name == name
        assert config.trials == 10 and config.seed == 3
        assert set(config.estimators) <= set(ESTIMATOR_KINDS)
    for name in AO_TRACE_PRESETS:
        assert ao_trace_preset(name, seed=2).name == name
    with pytest.raises(ConfigError, match="unknown sweep preset"):
        sweep_preset("fig99")
    with pytest.raises(ConfigError, match="unknown trace preset"):
        ao_trace_preset("fig99")


def test_sweep_config_validation():
    with pytest.raises(ConfigError, match="sweep variable"):
        tiny_sweep(sweep_var="bandwidth")
    with pytest.raises(ConfigError, match="non-empty"):
        tiny_sweep(grid=())
    with pytest.raises(ConfigError, match="trials"):
        tiny_sweep(trials=0)
    with pytest.raises(ConfigError, match="estimator kinds"):
        tiny_sweep(estimators=("LMMSE-AO", "GENIE"))
    with pytest.raises(ConfigError, match="stats_mode"):
        tiny_sweep(stats_mode="exact")
    with pytest.raises(ConfigError, match="init kinds"):
        AoTraceConfig(name="t", scenario=tiny_scenario(), init_kinds=("newton",))


def test_nmse_record_validation():
    ok = NmseRecord("e", "k", "snr_db", 0.0, 0.5, 10 * math.log10(0.5), 0.5, 10, 1)
    assert ok.status == "ok"
    with pytest.raises(ValueError, match="positive"):
        NmseRecord("e", "k", "snr_db", 0.0, 0.0, float("-inf"), 0.5, 10, 1)
    with pytest.raises(ValueError, match="does not match"):
        NmseRecord("e", "k", "snr_db", 0.0, 0.5, -3.3, 0.5, 10, 1)
    # failed points carry NaN without tripping the consistency checks
    nan = float("nan")
    bad = NmseRecord("e", "k", "tau", 3.0, nan, nan, nan, 10, 1, status="infeasible")
    assert bad.status == "infeasible"


# ------------------------------------------------------------- Monte Carlo


def test_monte_carlo_matches_analytic(toy_model, rng):
    n = toy_model.grid.n_elements
    n_uses = numerical_rank(toy_model.r_x)
    schedule = init_phases_rsls(toy_model.r_x, n_uses)
    se2, sz2 = 0.5, 1.0
    est = lmmse_matrix(schedule.matrix, toy_model.r_x, toy_model.r_q, se2, sz2)
    rec = nmse_monte_carlo(toy_model, schedule, est, trials=4000, seed=11,
                           sigma_e2=se2, sigma_z2=sz2)
    assert rec.trials == 4000 and rec.n_uses == n_uses
    assert rec.nmse_db == pytest.approx(10 * math.log10(rec.nmse_linear), abs=1e-9)
    assert rec.nmse_std > 0
    assert abs(rec.nmse_linear - rec.nmse_analytic_linear) < 6 * rec.nmse_std
    assert abs(rec.nmse_linear / rec.nmse_analytic_linear - 1) < 0.1


def test_common_draws_pair_estimators():
    # adding or removing other estimator kinds must not move a kind's
    # numbers: every kind sees the same channel and impairment draws
    both = run_sweep(tiny_sweep())
    solo = run_sweep(tiny_sweep(estimators=("LMMSE-Phi0",)))
    paired = [r for r in both if r.estimator == "LMMSE-Phi0"]
    assert len(paired) == len(solo) == 2
    for a, b in zip(paired, solo):
        assert a.nmse_linear == b.nmse_linear
        assert a.nmse_std == b.nmse_std


def test_chunking_does_not_change_results(monkeypatch):
    config = tiny_sweep(estimators=("LMMSE-Phi0",), grid=(0.0,))
    whole = run_sweep(config)
    monkeypatch.setattr(experiments, "_CHUNK_BUDGET", 1)  # one trial per chunk
    pieces = run_sweep(config)
    assert pieces[0].nmse_linear == pytest.approx(whole[0].nmse_linear, rel=1e-12)
    assert pieces[0].nmse_std == pytest.approx(whole[0].nmse_std, rel=1e-9)


def test_run_sweep_deterministic():
    a = run_sweep(tiny_sweep())
    b = run_sweep(tiny_sweep())
    assert a == b


def test_tau_sweep_marks_infeasible_points():
    spec = tiny_scenario()
    rank = numerical_rank(spec.build().r_x)
    config = tiny_sweep(sweep_var="tau", grid=(rank - 1, rank),
                        estimators=("LMMSE-Phi0", "RS-LS"), trials=16)
    records = run_sweep(config)
    by_key = {(r.estimator, r.sweep_value): r for r in records}
    short = by_key[("RS-LS", float(rank - 1))]
    assert short.status == "infeasible"
    assert math.isnan(short.nmse_linear) and math.isnan(short.nmse_db)
    assert by_key[("RS-LS", float(rank))].status == "ok"
    # the feasible kind is unaffected by its neighbor's failure
    assert by_key[("LMMSE-Phi0", float(rank - 1))].status == "ok"
    assert by_key[("LMMSE-Phi0", float(rank - 1))].n_uses == rank - 1


def test_prepare_estimator_modes(toy_model):
    opts = AoOptions(max_outer=2)
    no_emi = prepare_estimator("LMMSE-w/o-EMI", toy_model, None, 6, 0.5, 0.2,
                               1.0, opts)
    assert no_emi.eval_sigma_e2 == 0.0
    with_emi = prepare_estimator("LMMSE-Phi0", toy_model, None, 6, 0.5, 0.2,
                                 1.0, opts)
    assert with_emi.eval_sigma_e2 == 0.5
    with pytest.raises(ConfigError, match="far-field"):
        prepare_estimator("LMMSE-FF-stats", toy_model, None, 6, 0.5, 0.2, 1.0, opts)
    with pytest.raises(ConfigError, match="unknown estimator"):
        prepare_estimator("MUSIC", toy_model, None, 6, 0.5, 0.2, 1.0, opts)
    ff = toy_model.with_field("FF")
    mismatched = prepare_estimator("LMMSE-FF-stats", toy_model, ff, 6, 0.5, 0.2,
                                   1.0, opts)
    assert not np.array_equal(mismatched.schedule.angles, with_emi.schedule.angles)


# ------------------------------------------------------------ AO trace runs


def test_ao_trace_experiment_schema():
    config = AoTraceConfig(name="trace", scenario=tiny_scenario(),
                           sir_grid=(5.0,), init_kinds=("rsls", "random"),
                           ao_options=AoOptions(max_outer=6, tol_rel=0.0))
    records = ao_trace_experiment(config)
    labels = sorted({r.estimator for r in records})
    assert labels == ["LMMSE-AO[random-init,SIR=5dB]", "LMMSE-AO[rsls-init,SIR=5dB]"]
    for label in labels:
        rows = [r for r in records if r.estimator == label]
        assert [r.sweep_value for r in rows] == [float(k) for k in range(len(rows))]
        assert all(r.sweep_var == "ao_iteration" for r in rows)
        assert all(r.trials == 0 for r in rows)
        assert all(r.nmse_linear == r.nmse_analytic_linear for r in rows)
        curve = [r.nmse_linear for r in rows]
        assert all(b <= a * (1 + 1e-12) for a, b in zip(curve, curve[1:]))


# -------------------------------------------------------------- CSV output


def test_write_records_csv_roundtrip(tmp_path):
    config = AoTraceConfig(name="trace", scenario=tiny_scenario(),
                           sir_grid=(0.0,), init_kinds=("rsls",),
                           ao_options=AoOptions(max_outer=2, tol_rel=0.0))
    records = ao_trace_experiment(config) + run_sweep(
        tiny_sweep(estimators=("LMMSE-Phi0",), grid=(0.0,), trials=8))
    path = tmp_path / "records.csv"
    write_records_csv(records, path)

    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == list(CSV_COLUMNS)
    assert len(rows) == len(records) + 1
    # labels with commas survive the quoting round trip
    assert rows[1][1] == "LMMSE-AO[rsls-init,SIR=0dB]"
    for row, rec in zip(rows[1:], records):
        assert float(row[4]) == pytest.approx(rec.nmse_linear, rel=1e-11)
        assert int(row[7]) == rec.trials
        assert int(row[8]) == rec.seed
    # twelve significant digits in the numeric cells
    assert rows[-1][4] == format(records[-1].nmse_linear, ".12g")
