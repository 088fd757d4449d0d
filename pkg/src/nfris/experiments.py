"""Monte Carlo NMSE experiments, parameter sweeps, and figure presets.

A sweep point is evaluated with common random numbers: every estimator
kind sees the same channel, interference, and noise draws, so estimator
comparisons are paired. Per-trial generator streams are keyed by
(seed, point index, stream, trial index), which makes results
independent of chunking or execution order.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ._kernels import mc_trial_errors
from .ao import AoOptions, ao_optimize, init_phases_random, init_phases_rsls
from .channel import ScenarioModel, draw_white, trial_rng
from .errors import ConfigError, InfeasibleError, NumericalError
from .estimators import (
    LinearEstimator,
    PhaseSchedule,
    analytic_mse,
    lmmse_matrix,
    rsls_basis,
    rsls_matrix,
)
from .geometry import ArrayGeometry, build_grid
from .spatial import DEFAULT_QUAD_POINTS, ScatteringProfile, numerical_rank, place_node

__all__ = [
    "NodeSpec",
    "ScenarioSpec",
    "SweepConfig",
    "AoTraceConfig",
    "NmseRecord",
    "ESTIMATOR_KINDS",
    "baseline_scenario",
    "high_band_scenario",
    "nmse_monte_carlo",
    "prepare_estimator",
    "PreparedEstimator",
    "run_sweep",
    "ao_trace_experiment",
    "sweep_preset",
    "ao_trace_preset",
    "SWEEP_PRESETS",
    "AO_TRACE_PRESETS",
    "write_records_csv",
    "CSV_COLUMNS",
]

ESTIMATOR_KINDS = (
    "LMMSE-AO",
    "LMMSE-Phi0",
    "RS-LS",
    "LMMSE-w/o-EMI",
    "LMMSE-FF-stats",
    "RS-LS-FF-stats",
)

SWEEP_VARS = ("snr_db", "sir_db", "tau", "n_v", "distance_m")

CSV_COLUMNS = (
    "experiment",
    "estimator",
    "sweep_var",
    "sweep_value",
    "nmse_linear",
    "nmse_db",
    "nmse_analytic_linear",
    "trials",
    "seed",
)

_STREAM_TRAINING = 0
_STREAM_AO_INIT = 1

# cap on the per-chunk interference draw buffer (complex128 entries)
_CHUNK_BUDGET = 8_000_000


@dataclass(frozen=True)
class NodeSpec:
    """Sweep-level node description; spreads are derived at placement time."""

    range_m: float
    azimuth: float
    elevation: float
    spread_elevation: float

    def place(self, range_m: float | None = None):
        return place_node(
            self.range_m if range_m is None else range_m,
            self.azimuth, self.elevation, self.spread_elevation,
        )


@dataclass(frozen=True)
class ScenarioSpec:
    """Geometry and placement template from which sweep points build models."""

    wavelength: float
    n_h: int
    n_v: int
    spacing_wavelengths: float
    tx: NodeSpec
    rx: NodeSpec
    emi: NodeSpec
    quadrature: tuple = DEFAULT_QUAD_POINTS

    def geometry(self, n_v: int | None = None) -> ArrayGeometry:
        return ArrayGeometry(
            n_h=self.n_h,
            n_v=self.n_v if n_v is None else n_v,
            spacing=self.spacing_wavelengths * self.wavelength,
            wavelength=self.wavelength,
        )

    def build(self, field_kind: str = "NF", n_v: int | None = None,
              distance: float | None = None) -> ScenarioModel:
        """Instantiate the statistics model, optionally overriding panel
        height or placing all three nodes at a common distance."""
        grid = build_grid(self.geometry(n_v))
        return ScenarioModel(
            grid=grid,
            tx=self.tx.place(distance),
            rx=self.rx.place(distance),
            emi=self.emi.place(distance),
            profile=ScatteringProfile(quadrature_points=self.quadrature),
            field_kind=field_kind,
        )


def baseline_scenario() -> ScenarioSpec:
    """Baseline system: 0.3 THz, 12x2 panel, ten-wavelength spacing."""
    return ScenarioSpec(
        wavelength=1e-3,
        n_h=12,
        n_v=2,
        spacing_wavelengths=10.0,
        tx=NodeSpec(15.0, math.radians(70), math.radians(-20), math.radians(1)),
        rx=NodeSpec(20.0, math.radians(-60), math.radians(-30), math.radians(1)),
        emi=NodeSpec(25.0, math.radians(-10), math.radians(20), math.radians(3)),
    )


def high_band_scenario() -> ScenarioSpec:
    """3 THz variant with a 36x4 panel so the nodes stay in the near field."""
    return replace(baseline_scenario(), wavelength=1e-4, n_h=36, n_v=4)


@dataclass(frozen=True)
class SweepConfig:
    """One experiment: a grid over one variable, a set of estimator kinds."""

    name: str
    scenario: ScenarioSpec
    sweep_var: str
    grid: tuple
    estimators: tuple
    snr_db: float = 0.0
    sir_db: float = 5.0
    n_uses: int | None = None
    trials: int = 10_000
    seed: int = 1
    stats_mode: str = "NF"
    ao_options: AoOptions = field(default_factory=AoOptions)

    def __post_init__(self):
        if self.sweep_var not in SWEEP_VARS:
            raise ConfigError(f"unknown sweep variable {self.sweep_var!r}")
        if len(self.grid) == 0:
            raise ConfigError("sweep grid must be non-empty")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        unknown = set(self.estimators) - set(ESTIMATOR_KINDS)
        if unknown:
            raise ConfigError(f"unknown estimator kinds: {sorted(unknown)}")
        if self.stats_mode not in ("NF", "FF"):
            raise ConfigError(f"stats_mode must be NF or FF, got {self.stats_mode!r}")


@dataclass(frozen=True)
class AoTraceConfig:
    """Convergence-trace experiment: one curve per (SIR, initialization)."""

    name: str
    scenario: ScenarioSpec
    sir_grid: tuple = (0.0, 5.0, 10.0)
    init_kinds: tuple = ("rsls", "random")
    snr_db: float = 0.0
    n_uses: int | None = None
    seed: int = 1
    ao_options: AoOptions = field(default_factory=AoOptions)

    def __post_init__(self):
        unknown = set(self.init_kinds) - {"rsls", "random"}
        if unknown:
            raise ConfigError(f"unknown init kinds: {sorted(unknown)}")
        if len(self.sir_grid) == 0:
            raise ConfigError("sir_grid must be non-empty")


@dataclass(frozen=True)
class NmseRecord:
    """One CSV row: an estimator evaluated at one sweep point."""

    experiment: str
    estimator: str
    sweep_var: str
    sweep_value: float
    nmse_linear: float
    nmse_db: float
    nmse_analytic_linear: float
    trials: int
    seed: int
    nmse_std: float = float("nan")
    n_uses: int = 0
    status: str = "ok"

    def __post_init__(self):
        if self.status == "ok" and self.trials > 0 and not self.nmse_linear > 0.0:
            raise ValueError("Monte Carlo NMSE must be positive")
        if np.isfinite(self.nmse_linear):
            expected = 10.0 * math.log10(self.nmse_linear)
            if abs(self.nmse_db - expected) > 1e-9 * max(abs(expected), 1.0):
                raise ValueError("nmse_db does not match nmse_linear")


def _db(linear: float) -> float:
    return 10.0 * math.log10(linear) if linear > 0 else float("nan")


def _sigma2(level_db: float) -> float:
    return 10.0 ** (-level_db / 10.0)


@dataclass(frozen=True)
class PreparedEstimator:
    """Design output for one estimator kind at one sweep point."""

    label: str
    schedule: PhaseSchedule
    estimator: LinearEstimator
    eval_sigma_e2: float


def prepare_estimator(kind: str, truth: ScenarioModel, ff: ScenarioModel | None,
                      n_uses: int, sigma_e2: float, sigma_z2: float, rho: float,
                      options: AoOptions) -> PreparedEstimator:
    """Design the schedule and combining matrix for one estimator kind.

    Mismatched kinds design against their own statistics but are always
    evaluated against the truth; the interference-free kind is both
    designed and evaluated with the interference switched off.
    """
    design = truth
    design_se2 = sigma_e2
    eval_se2 = sigma_e2
    if kind == "LMMSE-w/o-EMI":
        design_se2 = 0.0
        eval_se2 = 0.0
    elif kind.endswith("FF-stats"):
        if ff is None:
            raise ConfigError("far-field design statistics were not built")
        design = ff

    if kind in ("LMMSE-AO", "LMMSE-w/o-EMI", "LMMSE-FF-stats"):
        result = ao_optimize(design.r_x, design.r_q, n_uses, design_se2, sigma_z2,
                             rho=rho, options=options)
        return PreparedEstimator(kind, result.schedule, result.estimator, eval_se2)
    if kind == "LMMSE-Phi0":
        schedule = init_phases_rsls(design.r_x, n_uses)
        est = lmmse_matrix(schedule.matrix, design.r_x, design.r_q,
                           design_se2, sigma_z2, rho)
        return PreparedEstimator(kind, schedule, est, eval_se2)
    if kind in ("RS-LS", "RS-LS-FF-stats"):
        schedule = init_phases_rsls(design.r_x, n_uses)
        basis = rsls_basis(design.r_x)
        est = rsls_matrix(schedule.matrix, basis, rho)
        return PreparedEstimator(kind, schedule, est, eval_se2)
    raise ConfigError(f"unknown estimator kind {kind!r}")


def _mc_point(truth: ScenarioModel, prepared: list, n_uses: int, trials: int,
              seed: int, point_key: int, rho: float, sigma_z2: float) -> dict:
    """Shared-draw Monte Carlo over one sweep point.

    Returns label -> (nmse, std) with the delta-method standard deviation
    of the ratio-of-sums estimate.
    """
    l_h, l_g, l_e = truth.factors
    lh_t, lg_t, le_t = l_h.transposed, l_g.transposed, l_e.transposed
    m_h, m_g, m_e = l_h.rank, l_g.rank, l_e.rank
    sqrt_rho = math.sqrt(rho)
    sigma_z = math.sqrt(sigma_z2)

    sums = {p.label: np.zeros(5) for p in prepared}
    lam_ts = {p.label: np.ascontiguousarray(p.estimator.matrix.T) for p in prepared}

    chunk = max(1, min(trials, _CHUNK_BUDGET // max(1, n_uses * m_e)))
    for start in range(0, trials, chunk):
        stop = min(trials, start + chunk)
        count = stop - start
        v_h = np.empty((count, m_h), dtype=np.complex128)
        v_g = np.empty((count, m_g), dtype=np.complex128)
        v_e = np.empty((count, n_uses, m_e), dtype=np.complex128)
        v_z = np.empty((count, n_uses), dtype=np.complex128)
        for i, t in enumerate(range(start, stop)):
            rng = trial_rng(seed, point_key, _STREAM_TRAINING, t)
            v_h[i], v_g[i], v_e[i], v_z[i] = draw_white(rng, m_h, m_g, m_e, n_uses)
        for p in prepared:
            err, pwr = mc_trial_errors(
                v_h, v_g, v_e, v_z, lh_t, lg_t, le_t,
                p.schedule.matrix, lam_ts[p.label],
                sqrt_rho, math.sqrt(p.eval_sigma_e2), sigma_z,
            )
            s = sums[p.label]
            s[0] += err.sum()
            s[1] += pwr.sum()
            s[2] += (err * err).sum()
            s[3] += (pwr * pwr).sum()
            s[4] += (err * pwr).sum()

    out = {}
    for label, (se, sp, see, spp, sep) in sums.items():
        nmse = se / sp
        var_e = see - se * se / trials
        var_p = spp - sp * sp / trials
        cov = sep - se * sp / trials
        var_ratio = (var_e - 2.0 * nmse * cov + nmse * nmse * var_p) / (sp * sp)
        out[label] = (float(nmse), float(math.sqrt(max(var_ratio, 0.0))))
    return out


def nmse_monte_carlo(model: ScenarioModel, schedule: PhaseSchedule,
                     estimator: LinearEstimator, trials: int, seed: int,
                     sigma_e2: float, sigma_z2: float, *, label: str = "estimator",
                     experiment: str = "single", sweep_var: str = "snr_db",
                     sweep_value: float = float("nan"),
                     point_key: int = 0) -> NmseRecord:
    """Evaluate one linear estimator by simulation and by closed form."""
    prep = PreparedEstimator(label, schedule, estimator, sigma_e2)
    mc = _mc_point(model, [prep], schedule.n_uses, trials, seed, point_key,
                   estimator.rho_tr, sigma_z2)
    nmse, std = mc[label]
    trace = float(np.trace(model.r_x.entries).real)
    analytic = analytic_mse(estimator, schedule.matrix, model.r_x, model.r_q,
                            sigma_e2, sigma_z2) / trace
    return NmseRecord(
        experiment=experiment, estimator=label, sweep_var=sweep_var,
        sweep_value=sweep_value, nmse_linear=nmse, nmse_db=_db(nmse),
        nmse_analytic_linear=analytic, trials=trials, seed=seed,
        nmse_std=std, n_uses=schedule.n_uses,
    )


def _failed_record(config: SweepConfig, kind: str, value: float, n_uses: int,
                   status: str) -> NmseRecord:
    nan = float("nan")
    return NmseRecord(
        experiment=config.name, estimator=kind, sweep_var=config.sweep_var,
        sweep_value=value, nmse_linear=nan, nmse_db=nan,
        nmse_analytic_linear=nan, trials=config.trials, seed=config.seed,
        n_uses=n_uses, status=status,
    )


def run_sweep(config: SweepConfig) -> list:
    """Evaluate every requested estimator at every grid value.

    Statistics are rebuilt only when the swept variable changes the
    geometry or the placements; estimator design failures produce
    not-a-number records and the sweep continues.
    """
    records = []
    models: dict = {}
    needs_ff = any(k.endswith("FF-stats") for k in config.estimators)

    def model_for(field_kind: str, n_v: int | None, distance: float | None):
        key = (field_kind, n_v, distance)
        if key not in models:
            models[key] = config.scenario.build(field_kind, n_v, distance)
        return models[key]

    for point_key, value in enumerate(config.grid):
        snr_db, sir_db = config.snr_db, config.sir_db
        n_v = distance = None
        n_uses = config.n_uses
        if config.sweep_var == "snr_db":
            snr_db = float(value)
        elif config.sweep_var == "sir_db":
            sir_db = float(value)
        elif config.sweep_var == "tau":
            n_uses = int(value)
        elif config.sweep_var == "n_v":
            n_v = int(value)
        elif config.sweep_var == "distance_m":
            distance = float(value)

        truth = model_for(config.stats_mode, n_v, distance)
        ff = model_for("FF", n_v, distance) if needs_ff else None
        if n_uses is None:
            n_uses = numerical_rank(truth.r_x)
        sigma_e2, sigma_z2, rho = _sigma2(sir_db), _sigma2(snr_db), 1.0

        prepared = []
        for kind in config.estimators:
            try:
                prepared.append(prepare_estimator(
                    kind, truth, ff, n_uses, sigma_e2, sigma_z2, rho,
                    config.ao_options))
            except InfeasibleError:
                records.append(_failed_record(config, kind, value, n_uses,
                                              "infeasible"))
            except NumericalError:
                records.append(_failed_record(config, kind, value, n_uses,
                                              "failed"))

        if not prepared:
            continue
        mc = _mc_point(truth, prepared, n_uses, config.trials, config.seed,
                       point_key, rho, sigma_z2)
        trace = float(np.trace(truth.r_x.entries).real)
        for p in prepared:
            nmse, std = mc[p.label]
            analytic = analytic_mse(p.estimator, p.schedule.matrix, truth.r_x,
                                    truth.r_q, p.eval_sigma_e2, sigma_z2) / trace
            records.append(NmseRecord(
                experiment=config.name, estimator=p.label,
                sweep_var=config.sweep_var, sweep_value=float(value),
                nmse_linear=nmse, nmse_db=_db(nmse),
                nmse_analytic_linear=analytic, trials=config.trials,
                seed=config.seed, nmse_std=std, n_uses=n_uses,
            ))
    return records


def ao_trace_experiment(config: AoTraceConfig) -> list:
    """Optimizer convergence traces folded into the record schema.

    Rows carry the analytic NMSE per outer iteration with sweep variable
    ao_iteration and zero trials, one labeled curve per (SIR, init).
    """
    truth = config.scenario.build()
    n_uses = config.n_uses if config.n_uses is not None else numerical_rank(truth.r_x)
    sigma_z2 = _sigma2(config.snr_db)
    trace_norm = float(np.trace(truth.r_x.entries).real)
    records = []
    for point_key, sir_db in enumerate(config.sir_grid):
        sigma_e2 = _sigma2(float(sir_db))
        for init_kind in config.init_kinds:
            if init_kind == "rsls":
                init = init_phases_rsls(truth.r_x, n_uses)
            else:
                rng = trial_rng(config.seed, point_key, _STREAM_AO_INIT, 0)
                init = init_phases_random(n_uses, truth.grid.n_elements, rng)
            result = ao_optimize(truth.r_x, truth.r_q, n_uses, sigma_e2, sigma_z2,
                                 init=init, options=config.ao_options)
            label = f"LMMSE-AO[{init_kind}-init,SIR={float(sir_db):g}dB]"
            for k, mse in enumerate(result.trace.mse):
                nmse = float(mse) / trace_norm
                records.append(NmseRecord(
                    experiment=config.name, estimator=label,
                    sweep_var="ao_iteration", sweep_value=float(k),
                    nmse_linear=nmse, nmse_db=_db(nmse),
                    nmse_analytic_linear=nmse, trials=0, seed=config.seed,
                    n_uses=n_uses,
                ))
    return records


_SNR_GRID = tuple(float(v) for v in range(-10, 35, 5))
_SIR_GRID = tuple(float(v) for v in range(-10, 35, 5))


def sweep_preset(name: str, trials: int = 10_000, seed: int = 1) -> SweepConfig:
    """Named sweep configuration; grids follow the reference experiments."""
    if name not in SWEEP_PRESETS:
        raise ConfigError(f"unknown sweep preset {name!r} "
                          f"(have {', '.join(sorted(SWEEP_PRESETS))})")
    return SWEEP_PRESETS[name](trials, seed)


def ao_trace_preset(name: str, seed: int = 1) -> AoTraceConfig:
    if name not in AO_TRACE_PRESETS:
        raise ConfigError(f"unknown trace preset {name!r} "
                          f"(have {', '.join(sorted(AO_TRACE_PRESETS))})")
    return AO_TRACE_PRESETS[name](seed)


SWEEP_PRESETS = {
    "fig1a": lambda trials, seed: SweepConfig(
        name="fig1a", scenario=baseline_scenario(), sweep_var="snr_db",
        grid=_SNR_GRID, estimators=ESTIMATOR_KINDS, sir_db=5.0,
        trials=trials, seed=seed),
    "fig1c": lambda trials, seed: SweepConfig(
        name="fig1c", scenario=high_band_scenario(), sweep_var="snr_db",
        grid=_SNR_GRID,
        estimators=("LMMSE-AO", "LMMSE-Phi0", "RS-LS", "LMMSE-w/o-EMI"),
        sir_db=5.0, trials=trials, seed=seed),
    "fig2": lambda trials, seed: SweepConfig(
        name="fig2", scenario=baseline_scenario(), sweep_var="sir_db",
        grid=_SIR_GRID,
        estimators=("LMMSE-AO", "LMMSE-Phi0", "RS-LS", "LMMSE-w/o-EMI"),
        snr_db=0.0, trials=trials, seed=seed),
    "fig3": lambda trials, seed: SweepConfig(
        name="fig3", scenario=baseline_scenario(), sweep_var="tau",
        grid=tuple(range(1, 25)),
        estimators=("LMMSE-AO", "LMMSE-Phi0", "RS-LS"),
        snr_db=0.0, sir_db=5.0, trials=trials, seed=seed),
    "fig4": lambda trials, seed: SweepConfig(
        name="fig4", scenario=baseline_scenario(), sweep_var="n_v",
        grid=(2, 4, 6, 8, 10, 12),
        estimators=("LMMSE-AO", "LMMSE-Phi0", "RS-LS"),
        snr_db=0.0, sir_db=5.0, trials=trials, seed=seed),
    "fig5": lambda trials, seed: SweepConfig(
        name="fig5", scenario=baseline_scenario(), sweep_var="snr_db",
        grid=_SNR_GRID,
        estimators=("LMMSE-AO", "LMMSE-FF-stats", "RS-LS", "RS-LS-FF-stats"),
        sir_db=5.0, trials=trials, seed=seed),
    "fig6": lambda trials, seed: SweepConfig(
        name="fig6", scenario=baseline_scenario(), sweep_var="distance_m",
        grid=(5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0),
        estimators=("LMMSE-AO", "LMMSE-FF-stats", "RS-LS", "RS-LS-FF-stats"),
        snr_db=0.0, sir_db=5.0, n_uses=15, trials=trials, seed=seed),
}

AO_TRACE_PRESETS = {
    "fig7": lambda seed: AoTraceConfig(
        name="fig7", scenario=baseline_scenario(), sir_grid=(0.0, 5.0, 10.0),
        init_kinds=("rsls", "random"), snr_db=0.0, seed=seed),
}


def _format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".12g")


def write_records_csv(records, path) -> None:
    """Write records in the fixed nine-column schema, one row per record."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in records:
            writer.writerow([_format_value(getattr(r, col)) for col in CSV_COLUMNS])
