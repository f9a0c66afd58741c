"""Synthetic autoregressive DGPs, noise sweeps and selection scoring.

The main generator produces a response driven by its own three lags plus a
bank of autocorrelated exogenous series, padded with decoy AR series and
pure-noise series that take no part in the data-generating process.  The
sweep driver re-runs selection methods while white noise of growing
variance is added to every candidate and to the response, and scores each
selected set against the known signal set.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.signal import lfilter

from . import lasso, stability
from ._rng import STREAM_NOISE, STREAM_SIM, STREAM_SWEEP, substream
from .blocks import auto_block_length, partition
from .core import LagSpec, MultiSeries, RegressionData, build_design, standardize

DEFAULT_SIGMA_GRID = (0.0, 0.25, 0.5, 1.0, 2.0)


def ar_spectral_radius(coeffs: Sequence[float]) -> float:
    """Spectral radius of the AR companion matrix (0 for no coefficients)."""
    a = np.asarray(coeffs, dtype=np.float64)
    if a.size and not np.all(np.isfinite(a)):
        raise ValueError("AR coefficients must be finite")
    if a.size == 0 or not a.any():
        return 0.0
    comp = np.zeros((a.size, a.size))
    comp[0, :] = a
    if a.size > 1:
        comp[1:, :-1] = np.eye(a.size - 1)
    return float(np.abs(np.linalg.eigvals(comp)).max())


def is_stationary(coeffs: Sequence[float]) -> bool:
    return ar_spectral_radius(coeffs) < 1.0


def simulate_ar(
    coeffs: Sequence[float],
    T: int,
    sigma: float,
    rng: np.random.Generator,
    burn_in: int = 500,
) -> np.ndarray:
    """Length-T sample of an AR process with Gaussian innovations.

    The recursion starts from zeros and the first `burn_in` draws are
    discarded.  Non-stationary coefficient vectors are rejected.
    """
    a = np.asarray(coeffs, dtype=np.float64)
    if T < 1 or burn_in < 0:
        raise ValueError("need T >= 1 and burn_in >= 0")
    if not is_stationary(a):
        raise ValueError(
            f"AR coefficients are non-stationary (companion spectral radius "
            f"{ar_spectral_radius(a):.4f} >= 1)"
        )
    eps = sigma * rng.standard_normal(T + burn_in)
    if a.size == 0:
        return eps[burn_in:]
    y = lfilter([1.0], np.concatenate([[1.0], -a]), eps)
    return y[burn_in:]


def _draw_ar2_coeffs(rng: np.random.Generator, max_radius: float = 0.95) -> tuple[float, float]:
    # rejection sample from the AR(2) stationarity triangle, capped radius
    while True:
        a1 = rng.uniform(-2.0, 2.0)
        a2 = rng.uniform(-1.0, 1.0)
        if abs(a2) < 1.0 and a1 + a2 < 1.0 and a2 - a1 < 1.0:
            if ar_spectral_radius((a1, a2)) <= max_radius:
                return (a1, a2)


def _draw_ar_coeffs(rng: np.random.Generator, order: int, max_radius: float = 0.95) -> tuple[float, ...]:
    # uniform draw, rescaled into the stationary region when needed
    a = rng.uniform(-1.0, 1.0, order)
    rho = ar_spectral_radius(a)
    if rho > max_radius:
        gamma = max_radius / rho
        a = a * gamma ** np.arange(1, order + 1)
    return tuple(float(v) for v in a)


@dataclass(frozen=True)
class ArxConfig:
    """Configuration of the synthetic response-plus-candidates generator.

    `n_true` exogenous AR(2) series enter the response with coefficients
    drawn N(0, beta_sd^2); `n_decoy_ar` AR(3) series and `n_noise` i.i.d.
    series are appended as candidates only.  `sigma` is the innovation
    standard deviation of the response equation.  `beta` and
    `true_ar_coeffs` override the random draws when supplied.
    """

    T: int = 10000
    theta: tuple[float, ...] = (0.35, 0.25, 0.2)
    n_true: int = 50
    n_decoy_ar: int = 52
    n_noise: int = 2
    beta_sd: float = 0.05
    sigma: float = 1.0
    burn_in: int = 500
    beta: Optional[tuple[float, ...]] = None
    true_ar_coeffs: Optional[tuple[tuple[float, ...], ...]] = None

    def __post_init__(self):
        if self.T < 10:
            raise ValueError("T must be >= 10")
        if min(self.n_true, self.n_decoy_ar, self.n_noise) < 0:
            raise ValueError("series counts must be non-negative")
        if self.n_true + self.n_decoy_ar + self.n_noise < 1:
            raise ValueError("need at least one exogenous candidate")
        if self.beta_sd < 0 or self.sigma < 0 or self.burn_in < 0:
            raise ValueError("beta_sd, sigma and burn_in must be non-negative")
        if not is_stationary(self.theta):
            raise ValueError("response AR coefficients must be stationary")
        if self.beta is not None and len(self.beta) != self.n_true:
            raise ValueError("beta override must have n_true entries")
        if self.true_ar_coeffs is not None:
            if len(self.true_ar_coeffs) != self.n_true:
                raise ValueError("true_ar_coeffs override must have n_true entries")
            for a in self.true_ar_coeffs:
                if not is_stationary(a):
                    raise ValueError("all exogenous AR coefficients must be stationary")

    @property
    def n_candidates(self) -> int:
        return self.n_true + self.n_decoy_ar + self.n_noise


def paper_profile(**overrides) -> ArxConfig:
    """The 104-candidate benchmark profile (50 true, 52 decoy, 2 noise)."""
    return replace(ArxConfig(), **overrides) if overrides else ArxConfig()


@dataclass(frozen=True)
class SelectionTruth:
    """Signal columns of the canonical design built from a simulated run.

    Indices refer to `build_design(series, target=0, lags=lag_spec)` columns:
    response lags first, then every exogenous candidate at lag 0.
    """

    true_set: frozenset[int]
    candidate_count: int
    lag_spec: LagSpec

    def __post_init__(self):
        if any(not 0 <= k < self.candidate_count for k in self.true_set):
            raise ValueError("true_set indices must lie in [0, candidate_count)")


def simulate_arx(config: ArxConfig, rng: np.random.Generator) -> tuple[MultiSeries, SelectionTruth]:
    """Draw one dataset from the configured DGP.

    Returns the observations plus the ground-truth signal columns: the
    response lags with non-zero coefficients and the true exogenous series
    (at lag 0) with non-zero coefficients.
    """
    total = config.T + config.burn_in
    n_true = config.n_true

    if config.true_ar_coeffs is not None:
        x_coeffs = list(config.true_ar_coeffs)
    else:
        x_coeffs = [_draw_ar2_coeffs(rng) for _ in range(n_true)]
    x_true = np.column_stack(
        [simulate_ar(a, total, 1.0, rng, burn_in=0) for a in x_coeffs]
    ) if n_true else np.empty((total, 0))

    if config.beta is not None:
        beta = np.asarray(config.beta, dtype=np.float64)
    else:
        beta = rng.normal(0.0, config.beta_sd, n_true)

    eps = config.sigma * rng.standard_normal(total)
    drive = (x_true @ beta if n_true else 0.0) + eps
    theta = np.asarray(config.theta, dtype=np.float64)
    if theta.size and theta.any():
        y = lfilter([1.0], np.concatenate([[1.0], -theta]), drive)
    else:
        y = np.asarray(drive, dtype=np.float64)

    decoys = np.column_stack(
        [simulate_ar(_draw_ar_coeffs(rng, 3), config.T, 1.0, rng, burn_in=config.burn_in)
         for _ in range(config.n_decoy_ar)]
    ) if config.n_decoy_ar else np.empty((config.T, 0))
    noise = rng.standard_normal((config.T, config.n_noise))

    exo = np.column_stack([x_true[config.burn_in :], decoys, noise])
    names = (
        ("Y",)
        + tuple(f"xt{j}" for j in range(n_true))
        + tuple(f"xd{j}" for j in range(config.n_decoy_ar))
        + tuple(f"xn{j}" for j in range(config.n_noise))
    )
    series = MultiSeries(y[config.burn_in :][:, None], exo, names)

    lag_spec = LagSpec(p_tilde=len(config.theta), s=1)
    true_lags = {i for i, t in enumerate(theta) if t != 0.0}
    true_exo = {lag_spec.p_tilde + j for j in range(n_true) if beta[j] != 0.0}
    truth = SelectionTruth(
        true_set=frozenset(true_lags | true_exo),
        candidate_count=lag_spec.n_predictors(d=1, m=series.m),
        lag_spec=lag_spec,
    )
    return series, truth


def add_noise(series: MultiSeries, sigma: float, rng: np.random.Generator) -> MultiSeries:
    """Add independent N(0, sigma^2) measurement noise to every candidate
    series and to the response; sigma = 0 returns the input unchanged."""
    if sigma < 0:
        raise ValueError("sigma must be non-negative")
    if sigma == 0.0:
        return series
    endo = series.endogenous + sigma * rng.standard_normal(series.endogenous.shape)
    exo = series.exogenous + sigma * rng.standard_normal(series.exogenous.shape)
    return MultiSeries(endo, exo, series.names, series.timestamps)


@dataclass(frozen=True)
class Rates:
    """True/false positive rates of a selected set against the truth."""

    tpr: float
    fpr: float
    tpr_by_convention: bool = False
    fpr_by_convention: bool = False


def tpr_fpr(selected, truth: SelectionTruth) -> Rates:
    """Score a selected index set: tpr over the signal set, fpr over its
    complement.  An empty signal set scores tpr = 1 by convention and an
    empty complement fpr = 0, both flagged."""
    sel = {int(k) for k in selected}
    p = truth.candidate_count
    if any(not 0 <= k < p for k in sel):
        raise ValueError("selected indices out of range")
    true = set(truth.true_set)
    n_true = len(true)
    if n_true == 0:
        tpr, tpr_conv = 1.0, True
    else:
        tpr, tpr_conv = len(sel & true) / n_true, False
    if p == n_true:
        fpr, fpr_conv = 0.0, True
    else:
        fpr, fpr_conv = len(sel - true) / (p - n_true), False
    return Rates(tpr=tpr, fpr=fpr, tpr_by_convention=tpr_conv, fpr_by_convention=fpr_conv)


# -- noise sweep ----------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    sigma: float
    seed: int
    method: str
    tpr: float
    fpr: float


def _sweep_methods(data: RegressionData, part, q: int, phi: float, B: int, cell_seed: int,
                   workers: int, methods: Sequence[str]) -> dict[str, frozenset[int]]:
    out: dict[str, frozenset[int]] = {}
    est = None
    if "bpa" in methods or "lasso_q" in methods:
        est = lasso.q_estimate(data, lasso.lambda_path(data), q)
    if "bpa" in methods:
        scores = stability.bpa_scores(
            data, part, B, est.lambda_q, seed=cell_seed, q=q, workers=workers
        )
        out["bpa"] = stability.threshold(scores, phi)
    if "lasso_q" in methods:
        out["lasso_q"] = est.fit.active_set
    if "lasso_cv" in methods:
        out["lasso_cv"] = lasso.select(data, lasso.cv_lambda(data))
    unknown = set(methods) - set(out)
    if unknown:
        raise ValueError(f"unknown sweep method(s): {sorted(unknown)}")
    return out


def run_noise_sweep(
    config: ArxConfig,
    q,
    phi: float,
    B: int = 50,
    sigmas: Sequence[float] = DEFAULT_SIGMA_GRID,
    n_seeds: int = 10,
    seed: int = 0,
    block_length: Optional[int] = None,
    methods: Sequence[str] = ("bpa", "lasso_q", "lasso_cv"),
    workers: int = 1,
) -> list[SweepRow]:
    """Re-run the selection methods over a grid of added-noise levels.

    For every replicate a fresh dataset is drawn, then each noise level
    perturbs candidates and response before selection; rows report
    tpr/fpr per (sigma, replicate, method).
    """
    rows: list[SweepRow] = []
    for s in range(n_seeds):
        series, truth = simulate_arx(config, substream(seed, STREAM_SIM, s))
        for i, sigma in enumerate(sigmas):
            noisy = add_noise(series, float(sigma), substream(seed, STREAM_NOISE, s, i))
            data = standardize(build_design(noisy, 0, truth.lag_spec))
            L = block_length if block_length is not None else auto_block_length(series.T)
            part = partition(series.T, L)
            q_int = lasso.resolve_q(q, data.p)
            cell_seed = int(substream(seed, STREAM_SWEEP, s, i).integers(2**62))
            selections = _sweep_methods(data, part, q_int, phi, B, cell_seed, workers, methods)
            for method in methods:
                r = tpr_fpr(selections[method], truth)
                rows.append(SweepRow(sigma=float(sigma), seed=s, method=method, tpr=r.tpr, fpr=r.fpr))
    return rows


def write_sweep_csv(rows: Sequence[SweepRow], path) -> None:
    """Plot-ready CSV: sigma, seed, method, tpr, fpr."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["sigma", "seed", "method", "tpr", "fpr"])
        for r in rows:
            w.writerow([f"{r.sigma:.6g}", r.seed, r.method, f"{r.tpr:.6f}", f"{r.fpr:.6f}"])
