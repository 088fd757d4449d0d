"""Command-line front end: config in, CSV and matrix dumps out.

Angles cross this boundary in degrees and are converted to radians
immediately; the carrier frequency is mapped to wavelength with the
round c = 3e8 m/s convention so stated frequency/wavelength pairs like
0.3 THz and 1 mm match exactly.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .ao import AoOptions
from .errors import ConfigError, InfeasibleError, NumericalError
from .geometry import fraunhofer_distance
from .experiments import (
    AO_TRACE_PRESETS,
    ESTIMATOR_KINDS,
    SWEEP_PRESETS,
    SWEEP_VARS,
    AoTraceConfig,
    NodeSpec,
    ScenarioSpec,
    SweepConfig,
    ao_trace_experiment,
    ao_trace_preset,
    nmse_monte_carlo,
    prepare_estimator,
    run_sweep,
    sweep_preset,
    write_records_csv,
)
from .spatial import DEFAULT_QUAD_POINTS, numerical_rank, save_matrix
from .validate import run_validation

__all__ = ["RunConfig", "load_config", "main"]

LIGHT_SPEED = 3e8

_NODE_KEYS = {"range_m", "azimuth_deg", "elevation_deg", "spread_deg"}

_TOP_KEYS = {
    "name", "carrier_frequency_hz", "wavelength_m", "n_h", "n_v",
    "spacing_in_wavelengths", "snr_db", "sir_db", "tau", "tx", "rx", "emi",
    "trials", "seed", "estimators", "stats_mode", "quadrature", "ao", "sweep",
}

_AO_KEYS = {"tol_rel", "max_outer", "armijo_c", "max_backtracks"}


def _node_spec(name: str, raw) -> NodeSpec:
    if not isinstance(raw, dict):
        raise ConfigError(f"{name}: expected a mapping with keys {sorted(_NODE_KEYS)}")
    unknown = set(raw) - _NODE_KEYS
    if unknown:
        raise ConfigError(f"{name}: unknown keys {sorted(unknown)}")
    missing = _NODE_KEYS - set(raw)
    if missing:
        raise ConfigError(f"{name}: missing keys {sorted(missing)}")
    return NodeSpec(
        range_m=float(raw["range_m"]),
        azimuth=math.radians(float(raw["azimuth_deg"])),
        elevation=math.radians(float(raw["elevation_deg"])),
        spread_elevation=math.radians(float(raw["spread_deg"])),
    )


@dataclass(frozen=True)
class RunConfig:
    """Parsed experiment configuration with degrees already converted."""

    name: str = "custom"
    wavelength: float = 1e-3
    n_h: int = 12
    n_v: int = 2
    spacing_in_wavelengths: float = 10.0
    snr_db: float = 0.0
    sir_db: float = 5.0
    tau: int | None = None
    tx: NodeSpec = NodeSpec(15.0, math.radians(70), math.radians(-20), math.radians(1))
    rx: NodeSpec = NodeSpec(20.0, math.radians(-60), math.radians(-30), math.radians(1))
    emi: NodeSpec = NodeSpec(25.0, math.radians(-10), math.radians(20), math.radians(3))
    trials: int = 10_000
    seed: int = 1
    estimators: tuple = ESTIMATOR_KINDS
    stats_mode: str = "NF"
    quadrature: tuple = DEFAULT_QUAD_POINTS
    ao_options: AoOptions = field(default_factory=AoOptions)
    sweep_var: str | None = None
    sweep_grid: tuple | None = None

    def scenario(self) -> ScenarioSpec:
        return ScenarioSpec(
            wavelength=self.wavelength, n_h=self.n_h, n_v=self.n_v,
            spacing_wavelengths=self.spacing_in_wavelengths,
            tx=self.tx, rx=self.rx, emi=self.emi, quadrature=self.quadrature,
        )

    def sweep_config(self) -> SweepConfig:
        if self.sweep_var is None or self.sweep_grid is None:
            raise ConfigError("sweep: needs variable and grid in the config file "
                              "(or use --preset)")
        return SweepConfig(
            name=self.name, scenario=self.scenario(), sweep_var=self.sweep_var,
            grid=self.sweep_grid, estimators=self.estimators, snr_db=self.snr_db,
            sir_db=self.sir_db, n_uses=self.tau, trials=self.trials,
            seed=self.seed, stats_mode=self.stats_mode, ao_options=self.ao_options,
        )


def load_config(path) -> RunConfig:
    """Parse a YAML config file into a RunConfig, diagnosing bad fields by name."""
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    kw = {}
    if "wavelength_m" in raw:
        kw["wavelength"] = float(raw["wavelength_m"])
    elif "carrier_frequency_hz" in raw:
        freq = float(raw["carrier_frequency_hz"])
        if freq <= 0:
            raise ConfigError("carrier_frequency_hz: must be positive")
        kw["wavelength"] = LIGHT_SPEED / freq
    if "tau" in raw and raw["tau"] is not None:
        kw["tau"] = None if raw["tau"] == "auto" else int(raw["tau"])
    for key, conv in (("name", str), ("n_h", int), ("n_v", int),
                      ("spacing_in_wavelengths", float), ("snr_db", float),
                      ("sir_db", float), ("trials", int), ("seed", int),
                      ("stats_mode", str)):
        if key in raw:
            kw[key] = conv(raw[key])
    for node in ("tx", "rx", "emi"):
        if node in raw:
            kw[node] = _node_spec(node, raw[node])
    if "estimators" in raw:
        kinds = tuple(str(k) for k in raw["estimators"])
        unknown = set(kinds) - set(ESTIMATOR_KINDS)
        if unknown:
            raise ConfigError(f"estimators: unknown kinds {sorted(unknown)} "
                              f"(have {', '.join(ESTIMATOR_KINDS)})")
        kw["estimators"] = kinds
    if "quadrature" in raw:
        quad = tuple(int(v) for v in raw["quadrature"])
        if len(quad) != 3 or any(v < 1 for v in quad):
            raise ConfigError("quadrature: expected three positive integers")
        kw["quadrature"] = quad
    if "ao" in raw:
        ao_raw = raw["ao"] or {}
        unknown = set(ao_raw) - _AO_KEYS
        if unknown:
            raise ConfigError(f"ao: unknown keys {sorted(unknown)}")
        kw["ao_options"] = AoOptions(**{k: v for k, v in ao_raw.items()})
    if "sweep" in raw:
        sweep_raw = raw["sweep"] or {}
        unknown = set(sweep_raw) - {"variable", "grid"}
        if unknown:
            raise ConfigError(f"sweep: unknown keys {sorted(unknown)}")
        if "variable" in sweep_raw:
            var = str(sweep_raw["variable"])
            if var not in SWEEP_VARS:
                raise ConfigError(f"sweep.variable: must be one of {SWEEP_VARS}")
            kw["sweep_var"] = var
        if "grid" in sweep_raw:
            kw["sweep_grid"] = tuple(float(v) for v in sweep_raw["grid"])

    try:
        return RunConfig(**kw)
    except (ValueError, ConfigError) as exc:
        raise ConfigError(str(exc)) from exc


class _Parser(argparse.ArgumentParser):
    """Argument parser that exits 1 (not 2) on usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="nfris", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, trials=True):
        p.add_argument("--config", type=Path, help="YAML config file")
        p.add_argument("--out", type=Path, default=Path("."),
                       help="output directory (default: current)")
        p.add_argument("--seed", type=int, help="override the config/preset seed")
        if trials:
            p.add_argument("--trials", type=int,
                           help="override the config/preset trial count")
        p.add_argument("--quiet", action="store_true", help="suppress progress text")

    p = sub.add_parser("correlation", help="emit correlation matrix dumps and a rank report")
    common(p, trials=False)

    p = sub.add_parser("estimate", help="single-point NMSE for the configured estimators")
    common(p)

    p = sub.add_parser("sweep", help="run a sweep preset or a config-defined grid")
    common(p)
    p.add_argument("--preset", choices=sorted(SWEEP_PRESETS),
                   help="named sweep configuration")

    p = sub.add_parser("ao-trace", help="optimizer convergence traces")
    common(p, trials=False)
    p.add_argument("--preset", choices=sorted(AO_TRACE_PRESETS),
                   help="named trace configuration")

    p = sub.add_parser("validate", help="run the invariant suite")
    common(p)
    return parser


def _say(args, text: str) -> None:
    if not args.quiet:
        print(text)


def _config_from(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "trials", None) is not None:
        cfg = replace(cfg, trials=args.trials)
    return cfg


def _cmd_correlation(args) -> int:
    cfg = _config_from(args)
    model = cfg.scenario().build(cfg.stats_mode)
    args.out.mkdir(parents=True, exist_ok=True)
    names = {"r_h": model.r_h, "r_g": model.r_g, "r_e": model.r_e,
             "r_x": model.r_x, "r_q": model.r_q}
    _say(args, f"fraunhofer_distance_m {fraunhofer_distance(model.grid.geometry):g}")
    for name, matrix in names.items():
        path = args.out / f"{name}.nfcm"
        save_matrix(matrix, path)
        rank = numerical_rank(matrix)
        _say(args, f"{name} n {matrix.n} rank {rank} "
                   f"trace {float(np.trace(matrix.entries).real):.6g} -> {path}")
    _say(args, f"pilot_length_auto {numerical_rank(model.r_x)}")
    return 0


def _cmd_estimate(args) -> int:
    cfg = _config_from(args)
    truth = cfg.scenario().build(cfg.stats_mode)
    needs_ff = any(k.endswith("FF-stats") for k in cfg.estimators)
    ff = cfg.scenario().build("FF") if needs_ff else None
    n_uses = cfg.tau if cfg.tau is not None else numerical_rank(truth.r_x)
    sigma_e2 = 10.0 ** (-cfg.sir_db / 10.0)
    sigma_z2 = 10.0 ** (-cfg.snr_db / 10.0)
    records = []
    for kind in cfg.estimators:
        prep = prepare_estimator(kind, truth, ff, n_uses, sigma_e2, sigma_z2,
                                 1.0, cfg.ao_options)
        rec = nmse_monte_carlo(
            truth, prep.schedule, prep.estimator, cfg.trials, cfg.seed,
            prep.eval_sigma_e2, sigma_z2, label=kind, experiment=cfg.name,
            sweep_var="snr_db", sweep_value=cfg.snr_db)
        records.append(rec)
        _say(args, f"{kind:16s} nmse {rec.nmse_db:8.3f} dB  "
                   f"analytic {10 * math.log10(rec.nmse_analytic_linear):8.3f} dB  "
                   f"({rec.trials} trials)")
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"{cfg.name}_estimate.csv"
    write_records_csv(records, path)
    _say(args, f"wrote {path}")
    return 0


def _cmd_sweep(args) -> int:
    if args.preset and args.config:
        raise ConfigError("give either --preset or --config, not both")
    if args.preset:
        config = sweep_preset(args.preset,
                              trials=args.trials if args.trials else 10_000,
                              seed=args.seed if args.seed is not None else 1)
    else:
        config = _config_from(args).sweep_config()
    records = run_sweep(config)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"{config.name}.csv"
    write_records_csv(records, path)
    _say(args, f"wrote {path} ({len(records)} rows)")
    return 0


def _cmd_ao_trace(args) -> int:
    if args.preset and args.config:
        raise ConfigError("give either --preset or --config, not both")
    if args.preset:
        config = ao_trace_preset(args.preset,
                                 seed=args.seed if args.seed is not None else 1)
    else:
        cfg = _config_from(args)
        config = AoTraceConfig(name=cfg.name, scenario=cfg.scenario(),
                               snr_db=cfg.snr_db, n_uses=cfg.tau, seed=cfg.seed,
                               ao_options=cfg.ao_options)
    records = ao_trace_experiment(config)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"{config.name}.csv"
    write_records_csv(records, path)
    _say(args, f"wrote {path} ({len(records)} rows)")
    return 0


def _cmd_validate(args) -> int:
    failures = run_validation(quiet=args.quiet)
    return 0 if failures == 0 else 2


_COMMANDS = {
    "correlation": _cmd_correlation,
    "estimate": _cmd_estimate,
    "sweep": _cmd_sweep,
    "ao-trace": _cmd_ao_trace,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except InfeasibleError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
