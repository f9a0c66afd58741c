"""Command-line entry point for reproducible selection, simulation,
forecast-comparison and bound-calculator runs.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure.  Failures print a machine-readable JSON object to stderr.  Every
report embeds the statistical parameters and the seed; execution-only
settings (worker count, output paths) are excluded so reruns are
byte-identical regardless of parallelism.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import evaluation, lasso, sim, stability
from .blocks import auto_block_length, partition
from .core import (
    LagSpec,
    build_design,
    detrend_multiseries,
    make_multiseries,
    read_csv_table,
    standardize,
)
from .errors import ConfigError, DataError, NumericalError

WORKERS_ENV = "BLOCKSTAB_WORKERS"


@dataclass(frozen=True)
class RunConfig:
    """Validated settings of one CLI invocation."""

    command: str
    input_csv: Optional[str] = None
    target: Optional[str] = None
    exogenous: Sequence[str] | str = "all"
    p_tilde: int = 1
    s: int = 0
    block_length: Optional[int] = None  # resolved; None means sqrt rule at run time
    block_spec: str = "auto"
    seasonality: Optional[int] = None
    B: int = 50
    q: Optional[float] = None
    phi: Optional[float] = None  # None when l drives the threshold
    l: Optional[float] = None
    theta: Optional[float] = None
    p: Optional[int] = None
    seed: int = 0
    detrend: bool = False
    standardize: bool = True
    train_fraction: float = 0.67
    sigmas: tuple[float, ...] = sim.DEFAULT_SIGMA_GRID
    n_seeds: int = 10
    sim_T: int = 2000
    n_true: int = 10
    n_decoy: int = 20
    n_noise: int = 2
    beta_sd: float = 0.05
    innovation_sd: float = 1.0
    burn_in: int = 500
    methods: tuple[str, ...] = ("bpa", "lasso_q", "lasso_cv")
    lambda_count: int = 100
    lambda_ratio: float = 1e-3
    output: Optional[str] = None
    workers: int = 1


def _canonical_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _to_native(value):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (list, tuple)):
        return [_to_native(v) for v in value]
    if isinstance(value, dict):
        return {k: _to_native(v) for k, v in value.items()}
    return value


def _write_output(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _parse_block_spec(spec: str, seasonality: Optional[int], T: int, errors: list[str]) -> Optional[int]:
    """Resolve --block-length: an integer, 'auto' (ceil sqrt T) or 'auto:<k>'
    meaning k seasonal periods (requires --seasonality)."""
    spec = str(spec)
    if spec == "auto":
        return auto_block_length(T, seasonality=seasonality)
    if spec.startswith("auto:"):
        try:
            multiple = int(spec.split(":", 1)[1])
        except ValueError:
            errors.append(f"block-length: cannot parse multiplier in '{spec}'")
            return None
        if seasonality is None:
            errors.append("block-length: 'auto:<k>' requires --seasonality")
            return None
        return auto_block_length(T, seasonality=seasonality, multiple=multiple)
    try:
        value = int(spec)
    except ValueError:
        errors.append(f"block-length: expected integer, 'auto' or 'auto:<k>', got '{spec}'")
        return None
    if value < 1:
        errors.append("block-length: must be positive")
        return None
    return value


def _parse_q(raw: str, errors: list[str]):
    try:
        value = float(raw)
    except ValueError:
        errors.append(f"q: cannot parse '{raw}'")
        return None
    if value <= 0:
        errors.append("q: must be positive")
        return None
    return value if 0 < value < 1 else int(value)


def _load_series(cfg: RunConfig):
    table = read_csv_table(cfg.input_csv)
    exo = cfg.exogenous
    if isinstance(exo, str) and exo != "all":
        exo = [c.strip() for c in exo.split(",") if c.strip()]
    series = make_multiseries(table, [cfg.target], exo)
    if cfg.detrend:
        series = detrend_multiseries(series)
    return series


def _selection_params(cfg: RunConfig, extra: dict) -> dict:
    params = {
        "command": cfg.command,
        "input_csv": cfg.input_csv,
        "target": cfg.target,
        "exogenous": cfg.exogenous if isinstance(cfg.exogenous, str) else list(cfg.exogenous),
        "p_tilde": cfg.p_tilde,
        "s": cfg.s,
        "block_spec": cfg.block_spec,
        "seasonality": cfg.seasonality,
        "B": cfg.B,
        "q": cfg.q,
        "phi": cfg.phi,
        "l": cfg.l,
        "seed": cfg.seed,
        "detrend": cfg.detrend,
        "standardize": cfg.standardize,
        "lambda_count": cfg.lambda_count,
        "lambda_ratio": cfg.lambda_ratio,
    }
    params.update(extra)
    return _to_native(params)


def run_select(cfg: RunConfig) -> int:
    series = _load_series(cfg)
    errors: list[str] = []
    block_length = _parse_block_spec(cfg.block_spec, cfg.seasonality, series.T, errors)
    if errors:
        raise ConfigError(errors)
    try:
        lags = LagSpec(p_tilde=cfg.p_tilde, s=cfg.s)
        data = build_design(series, target=0, lags=lags)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    if cfg.standardize:
        data = standardize(data)
    q_int = lasso.resolve_q(cfg.q, data.p)
    part = partition(series.T, block_length)
    path = lasso.lambda_path(data, count=cfg.lambda_count, ratio=cfg.lambda_ratio)
    est = lasso.q_estimate(data, path, q_int)

    theta = q_int / data.p
    phi_solved = cfg.phi is None
    if phi_solved:
        phi = stability.solve_phi(q_int, data.p, cfg.B, cfg.l)
    else:
        phi = cfg.phi
    bound = None
    bound_note = None
    try:
        bound = stability.selection_bound(q_int, data.p, phi, cfg.B)
    except (ValueError, NumericalError) as exc:
        bound_note = f"no finite-sample guarantee at these settings: {exc}"

    scores = stability.bpa_scores(
        data, part, cfg.B, est.lambda_q, seed=cfg.seed, q=q_int, workers=cfg.workers
    )
    stable = sorted(stability.threshold(scores, phi))
    names = tuple(d.label(series) for d in data.descriptors)
    report = stability.SelectionReport(
        predictor_names=names,
        pi_av=tuple(float(v) for v in scores.pi_av),
        pi_sim=tuple(float(v) for v in scores.pi_sim),
        stable_set=tuple(stable),
        stable_names=tuple(names[k] for k in stable),
        lambda_q=float(est.lambda_q),
        lambda_q_exact=est.exact,
        q=q_int,
        phi=float(phi),
        phi_solved=phi_solved,
        theta=float(theta),
        bound=bound,
        bound_note=bound_note,
        B=cfg.B,
        block_length=block_length,
        n_odd_blocks=part.n_odd_blocks,
        seed=cfg.seed,
        params=_selection_params(cfg, {"n": data.n, "p": data.p, "T": series.T}),
    )
    _write_output(_canonical_json(_to_native(report.to_dict())), cfg.output)
    return 0


def run_simulate(cfg: RunConfig) -> int:
    config = sim.ArxConfig(
        T=cfg.sim_T,
        n_true=cfg.n_true,
        n_decoy_ar=cfg.n_decoy,
        n_noise=cfg.n_noise,
        beta_sd=cfg.beta_sd,
        sigma=cfg.innovation_sd,
        burn_in=cfg.burn_in,
    )
    block_length = None
    if cfg.block_spec != "auto":
        errors: list[str] = []
        block_length = _parse_block_spec(cfg.block_spec, cfg.seasonality, cfg.sim_T, errors)
        if errors:
            raise ConfigError(errors)
    rows = sim.run_noise_sweep(
        config,
        q=cfg.q,
        phi=cfg.phi if cfg.phi is not None else 0.8,
        B=cfg.B,
        sigmas=cfg.sigmas,
        n_seeds=cfg.n_seeds,
        seed=cfg.seed,
        block_length=block_length,
        methods=cfg.methods,
        workers=cfg.workers,
    )
    lines = ["sigma,seed,method,tpr,fpr"]
    lines += [f"{r.sigma:.6g},{r.seed},{r.method},{r.tpr:.6f},{r.fpr:.6f}" for r in rows]
    _write_output("\n".join(lines) + "\n", cfg.output)
    return 0


def run_forecast(cfg: RunConfig) -> int:
    series = _load_series(cfg)
    errors: list[str] = []
    block_length = _parse_block_spec(cfg.block_spec, cfg.seasonality, series.T, errors)
    if errors:
        raise ConfigError(errors)
    try:
        lags = LagSpec(p_tilde=cfg.p_tilde, s=cfg.s)
        data = build_design(series, target=0, lags=lags)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    phi = cfg.phi if cfg.phi is not None else 0.8
    methods = []
    for name in cfg.methods:
        if name == "bpa":
            methods.append(
                evaluation.bpa_method(
                    cfg.q, phi, B=cfg.B, block_length=block_length,
                    seed=cfg.seed, workers=cfg.workers,
                )
            )
        elif name == "lasso_q":
            methods.append(evaluation.lasso_q_method(cfg.q))
        elif name == "lasso_cv":
            methods.append(evaluation.lasso_cv_method())
        else:
            raise ConfigError([f"methods: unknown method '{name}'"])
    results = evaluation.compare_methods(data, methods, train_fraction=cfg.train_fraction)
    payload = {
        "params": _selection_params(
            cfg,
            {"train_fraction": cfg.train_fraction, "methods": list(cfg.methods),
             "n": data.n, "p": data.p, "T": series.T},
        ),
        "results": _to_native(evaluation.comparison_dict(results)),
    }
    if cfg.output is None:
        sys.stdout.write(_canonical_json(payload))
    else:
        with open(cfg.output + ".json", "w") as fh:
            fh.write(_canonical_json(payload))
        with open(cfg.output + ".csv", "w") as fh:
            fh.write(evaluation.comparison_csv(results, dataset=os.path.basename(cfg.input_csv)))
    return 0


def run_bound(cfg: RunConfig) -> int:
    theta = cfg.theta if cfg.theta is not None else (cfg.q / cfg.p)
    if cfg.phi is not None:
        phi = cfg.phi
        solved = False
    else:
        phi = stability.solve_phi(int(cfg.q), cfg.p, cfg.B, cfg.l)
        solved = True
    C = stability.error_constant(phi, cfg.B, theta)
    bound = stability.selection_bound(int(cfg.q), cfg.p, phi, cfg.B)
    lines = []
    if solved:
        lines.append(f"phi = {phi:.6f} (smallest grid threshold with bound <= l*p = {cfg.l * cfg.p:.6f})")
    lines.append(f"C(phi={phi:g}, B={cfg.B}) = {C:.6f}")
    lines.append(
        f"bound on expected low-probability inclusions = {bound:.6f} (theta = {theta:.6f}, q = {int(cfg.q)}, p = {cfg.p})"
    )
    sys.stdout.write("\n".join(lines) + "\n")
    if cfg.output is not None:
        payload = {
            "phi": phi,
            "phi_solved": solved,
            "C": C,
            "bound": bound,
            "theta": theta,
            "q": int(cfg.q),
            "p": cfg.p,
            "B": cfg.B,
            "l": cfg.l,
        }
        with open(cfg.output, "w") as fh:
            fh.write(_canonical_json(payload))
    return 0


# -- argument parsing -----------------------------------------------------------


def _add_common_selection_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--input", required=True, help="input CSV (header row; optional leading 't'/'timestamp' column)")
    p.add_argument("--target", required=True, help="endogenous response column name")
    p.add_argument("--exogenous", default="all", help="comma-separated exogenous columns, or 'all' (default)")
    p.add_argument("--endo-lags", type=int, default=1, help="max endogenous lag (default 1)")
    p.add_argument("--exo-lags", type=int, default=0, help="number of exogenous lags 0..s-1 (default 0)")
    p.add_argument("--detrend", action="store_true", help="linearly detrend every column first")
    p.add_argument("--no-standardize", action="store_true", help="skip column standardization")


def _add_stability_args(p: argparse.ArgumentParser, q_required: bool) -> None:
    p.add_argument("--q", required=q_required, default=None, help="target active-set size (integer) or fraction of p")
    p.add_argument("--phi", default=None, help="stability threshold in (0,1], or 'solve' to derive it from --l")
    p.add_argument("--l", type=float, default=None, help="target bound fraction in (0,1] (used when phi is solved)")
    p.add_argument("--n-pairs", "-B", dest="B", type=int, default=50, help="complementary pair draws B (default 50)")
    p.add_argument("--block-length", default="auto", help="block length: integer, 'auto' (ceil sqrt T) or 'auto:<k>' (k seasonal periods)")
    p.add_argument("--seasonality", type=int, default=None, help="seasonal period used by 'auto:<k>'")
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--workers", type=int, default=None, help=f"worker threads (default ${WORKERS_ENV} or 1)")
    p.add_argument("--lambda-count", type=int, default=100, help="penalty grid size (default 100)")
    p.add_argument("--lambda-ratio", type=float, default=1e-3, help="smallest/largest penalty ratio (default 1e-3)")
    p.add_argument("--output", default=None, help="report path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blockstab",
        description="Stable predictor selection for time series by complementary block-pair subsampling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sel = sub.add_parser("select", help="run stable selection on a CSV and emit a JSON report")
    _add_common_selection_args(p_sel)
    _add_stability_args(p_sel, q_required=True)

    p_sim = sub.add_parser("simulate", help="noise-robustness sweep on synthetic data; emits tpr/fpr CSV")
    p_sim.add_argument("--T", dest="sim_T", type=int, default=2000, help="series length (default 2000)")
    p_sim.add_argument("--n-true", type=int, default=10, help="true exogenous series (default 10)")
    p_sim.add_argument("--n-decoy", type=int, default=20, help="decoy AR series (default 20)")
    p_sim.add_argument("--n-noise", type=int, default=2, help="i.i.d. noise series (default 2)")
    p_sim.add_argument("--beta-sd", type=float, default=0.05, help="sd of true coefficients (default 0.05)")
    p_sim.add_argument("--innovation-sd", type=float, default=1.0, help="response innovation sd (default 1.0)")
    p_sim.add_argument("--burn-in", type=int, default=500, help="discarded initial draws (default 500)")
    p_sim.add_argument("--sigmas", default=",".join(str(s) for s in sim.DEFAULT_SIGMA_GRID),
                       help="comma-separated added-noise levels (default %(default)s; a documented choice, not a reference value)")
    p_sim.add_argument("--n-seeds", type=int, default=10, help="replicates per noise level (default 10)")
    p_sim.add_argument("--methods", default="bpa,lasso_q,lasso_cv", help="comma-separated methods to sweep")
    _add_stability_args(p_sim, q_required=False)

    p_fc = sub.add_parser("forecast", help="rolling forecast comparison of selection methods on a CSV")
    _add_common_selection_args(p_fc)
    p_fc.add_argument("--train-fraction", type=float, default=0.67, help="chronological train share (default 0.67)")
    p_fc.add_argument("--methods", default="bpa,lasso_q,lasso_cv", help="comma-separated methods to compare")
    _add_stability_args(p_fc, q_required=True)

    p_bd = sub.add_parser("bound", help="finite-sample error-control calculator")
    p_bd.add_argument("--q", required=True, type=int, help="expected base-selection size")
    p_bd.add_argument("--p", required=True, type=int, help="number of candidate predictors")
    p_bd.add_argument("--phi", default=None, help="threshold on the guarantee grid, or 'solve'")
    p_bd.add_argument("--l", type=float, default=None, help="target bound fraction in (0,1]")
    p_bd.add_argument("--theta", type=float, default=None, help="low-probability cutoff (default q/p)")
    p_bd.add_argument("--n-pairs", "-B", dest="B", type=int, default=50, help="pair draws B (default 50)")
    p_bd.add_argument("--output", default=None, help="also write the values as JSON here")
    return parser


def _resolve_workers(raw: Optional[int], errors: list[str]) -> int:
    if raw is None:
        env = os.environ.get(WORKERS_ENV)
        if env is None:
            return 1
        try:
            raw = int(env)
        except ValueError:
            errors.append(f"workers: cannot parse ${WORKERS_ENV}='{env}'")
            return 1
    if raw < 1:
        errors.append("workers: must be >= 1")
        return 1
    return raw


def _validate_phi_l(phi_raw, l, errors: list[str], require_one: bool) -> Optional[float]:
    """Returns the numeric phi, or None when l drives the threshold."""
    phi = None
    solve = False
    if phi_raw is not None:
        if str(phi_raw) == "solve":
            solve = True
        else:
            try:
                phi = float(phi_raw)
            except ValueError:
                errors.append(f"phi: cannot parse '{phi_raw}'")
                return None
            if not 0.0 < phi <= 1.0:
                errors.append("phi: must lie in (0, 1]")
    if l is not None and not 0.0 < l <= 1.0:
        errors.append("l: must lie in (0, 1]")
    if phi is not None and l is not None:
        errors.append("phi/l: provide exactly one of a numeric --phi or --l")
    if (solve or phi is None) and l is None and require_one:
        errors.append("phi/l: provide a numeric --phi, or --l (optionally with --phi solve)")
    return phi


def config_from_args(args: argparse.Namespace) -> RunConfig:
    errors: list[str] = []
    command = args.command
    workers = _resolve_workers(getattr(args, "workers", None), errors)

    kwargs: dict = {"command": command, "workers": workers}
    if command in ("select", "forecast"):
        p_tilde, s = args.endo_lags, args.exo_lags
        if p_tilde < 0 or s < 0:
            errors.append("endo-lags/exo-lags: must be non-negative")
        if p_tilde + s < 1:
            errors.append("endo-lags/exo-lags: at least one lag class required")
        q = _parse_q(args.q, errors)
        phi = _validate_phi_l(args.phi, args.l, errors, require_one=(command == "select"))
        if command == "forecast" and args.phi is None:
            phi = 0.8
        kwargs.update(
            input_csv=args.input,
            target=args.target,
            exogenous=args.exogenous,
            p_tilde=p_tilde,
            s=s,
            q=q,
            phi=phi,
            l=args.l,
            B=args.B,
            block_spec=args.block_length,
            seasonality=args.seasonality,
            seed=args.seed,
            detrend=args.detrend,
            standardize=not args.no_standardize,
            lambda_count=args.lambda_count,
            lambda_ratio=args.lambda_ratio,
            output=args.output,
        )
        if command == "forecast":
            if not 0.0 < args.train_fraction < 1.0:
                errors.append("train-fraction: must lie in (0, 1)")
            kwargs.update(
                train_fraction=args.train_fraction,
                methods=tuple(m.strip() for m in args.methods.split(",") if m.strip()),
            )
    elif command == "simulate":
        q = _parse_q(args.q, errors) if args.q is not None else 0.4
        phi = _validate_phi_l(args.phi, args.l, errors, require_one=False)
        try:
            sigmas = tuple(float(v) for v in str(args.sigmas).split(","))
        except ValueError:
            errors.append(f"sigmas: cannot parse '{args.sigmas}'")
            sigmas = sim.DEFAULT_SIGMA_GRID
        if any(v < 0 for v in sigmas):
            errors.append("sigmas: must be non-negative")
        if args.n_seeds < 1:
            errors.append("n-seeds: must be >= 1")
        kwargs.update(
            q=q,
            phi=phi,
            l=args.l,
            B=args.B,
            block_spec=args.block_length,
            seasonality=args.seasonality,
            seed=args.seed,
            sigmas=sigmas,
            n_seeds=args.n_seeds,
            sim_T=args.sim_T,
            n_true=args.n_true,
            n_decoy=args.n_decoy,
            n_noise=args.n_noise,
            beta_sd=args.beta_sd,
            innovation_sd=args.innovation_sd,
            burn_in=args.burn_in,
            methods=tuple(m.strip() for m in args.methods.split(",") if m.strip()),
            lambda_count=args.lambda_count,
            lambda_ratio=args.lambda_ratio,
            output=args.output,
        )
    elif command == "bound":
        if args.q < 0:
            errors.append("q: must be non-negative")
        if args.p < 1:
            errors.append("p: must be >= 1")
        if args.B < 2:
            errors.append("n-pairs: must be >= 2")
        phi = _validate_phi_l(args.phi, args.l, errors, require_one=True)
        if args.theta is not None and not 0.0 <= args.theta < stability.THETA_LIMIT:
            errors.append("theta: must lie in [0, 1/sqrt(3))")
        kwargs.update(q=args.q, p=args.p, phi=phi, l=args.l, theta=args.theta, B=args.B, output=args.output)
    if errors:
        raise ConfigError(errors)
    return RunConfig(**kwargs)


def run(cfg: RunConfig) -> int:
    if cfg.command == "select":
        return run_select(cfg)
    if cfg.command == "simulate":
        return run_simulate(cfg)
    if cfg.command == "forecast":
        return run_forecast(cfg)
    if cfg.command == "bound":
        return run_bound(cfg)
    raise ConfigError([f"unknown command '{cfg.command}'"])


def _emit_error(kind: str, code: int, messages: Sequence[str]) -> int:
    payload = {"status": "error", "kind": kind, "exit_code": code, "messages": list(messages)}
    sys.stderr.write(json.dumps(payload, sort_keys=True) + "\n")
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        cfg = config_from_args(args)
        return run(cfg)
    except ConfigError as exc:
        return _emit_error("config", 2, exc.messages)
    except (DataError, FileNotFoundError) as exc:
        return _emit_error("data", 3, [str(exc)])
    except NumericalError as exc:
        return _emit_error("numerical", 4, [str(exc)])
    except ValueError as exc:
        # parameter problems surfacing from the library are config errors
        return _emit_error("config", 2, [str(exc)])


if __name__ == "__main__":
    sys.exit(main())
