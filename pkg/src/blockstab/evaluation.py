"""Post-selection least squares and rolling one-step forecast evaluation.

Selection happens once on the chronological training portion; the
regression is then refit from scratch after every absorbed test point, so
each prediction uses exactly the rows observed before it.
"""
from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import lasso, stability
from .blocks import auto_block_length, partition
from .core import PredictorDescriptor, RegressionData, standardize

MAPE_EPS = 1e-8


def split(data: RegressionData, train_fraction: float) -> tuple[RegressionData, RegressionData]:
    """Chronological split: first floor(fraction * n) rows train, rest test."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    n_train = int(train_fraction * data.n)
    if n_train < 1 or n_train >= data.n:
        raise ValueError(f"split leaves an empty side (n={data.n}, fraction={train_fraction})")
    idx = np.arange(data.n)
    return data.take_rows(idx[:n_train]), data.take_rows(idx[n_train:])


def ols_fit(
    train: RegressionData,
    selected,
    allow_intercept_only: bool = False,
) -> np.ndarray:
    """Least-squares coefficients (intercept first) on the selected columns.

    Solved by SVD, so rank-deficient selections get the minimum-norm
    solution with a warning.  An empty selection is an error unless the
    intercept-only model is explicitly allowed.
    """
    sel = sorted(int(k) for k in selected)
    if not sel and not allow_intercept_only:
        raise ValueError("empty selection; pass allow_intercept_only=True for a mean model")
    if train.n <= len(sel):
        raise ValueError(f"need more training rows ({train.n}) than predictors ({len(sel)})")
    X = np.column_stack([np.ones(train.n), train.Z[:, sel]])
    coefs, _, rank, _ = np.linalg.lstsq(X, train.Y, rcond=None)
    if rank < X.shape[1]:
        warnings.warn(
            f"rank-deficient selection (rank {rank} < {X.shape[1]}); "
            "returning the minimum-norm solution",
            stacklevel=2,
        )
    return coefs


def _predict(Z: np.ndarray, sel: list[int], coefs: np.ndarray) -> np.ndarray:
    return coefs[0] + Z[:, sel] @ coefs[1:]


@dataclass(frozen=True)
class ForecastReport:
    """Rolling one-step forecast accuracy over the test rows."""

    rmse: float
    mape: float
    n_test: int
    predictions: np.ndarray
    actuals: np.ndarray
    selected_predictors: tuple[PredictorDescriptor, ...]
    mape_skipped: int = 0

    def to_dict(self) -> dict:
        return {
            "rmse": self.rmse,
            "mape": self.mape,
            "n_test": self.n_test,
            "mape_skipped": self.mape_skipped,
            "selected": [
                {"kind": d.kind, "series_index": d.series_index, "lag": d.lag}
                for d in self.selected_predictors
            ],
        }


def forecast_metrics(predictions: np.ndarray, actuals: np.ndarray) -> tuple[float, float, int]:
    """(rmse, mape in percent, #points skipped by the mape near zero)."""
    predictions = np.asarray(predictions, dtype=np.float64)
    actuals = np.asarray(actuals, dtype=np.float64)
    err = predictions - actuals
    rmse = float(np.sqrt(np.mean(err**2)))
    ok = np.abs(actuals) > MAPE_EPS
    skipped = int((~ok).sum())
    mape = float(np.mean(np.abs(err[ok]) / np.abs(actuals[ok])) * 100.0) if ok.any() else 0.0
    return rmse, mape, skipped


def rolling_forecast(
    data: RegressionData,
    selected,
    train_fraction: float = 0.67,
    allow_intercept_only: bool = False,
) -> ForecastReport:
    """One-step-ahead evaluation with refitting after every test point.

    The model at test row i is a fresh least-squares fit on all rows before
    i, so no prediction ever sees its own or later responses.
    """
    sel = sorted(int(k) for k in selected)
    train, test = split(data, train_fraction)
    n_train = train.n
    preds = np.empty(test.n)
    for i in range(test.n):
        seen = data.take_rows(np.arange(n_train + i))
        coefs = ols_fit(seen, sel, allow_intercept_only=allow_intercept_only)
        preds[i] = _predict(data.Z[n_train + i : n_train + i + 1], sel, coefs)[0]
    rmse, mape, skipped = forecast_metrics(preds, test.Y)
    return ForecastReport(
        rmse=rmse,
        mape=mape,
        n_test=test.n,
        predictions=preds,
        actuals=test.Y.copy(),
        selected_predictors=tuple(data.descriptors[k] for k in sel),
        mape_skipped=skipped,
    )


# -- selection strategies for comparisons --------------------------------------


@dataclass(frozen=True)
class SelectionMethod:
    """Named strategy mapping raw training data to a set of column indices."""

    name: str
    select: Callable[[RegressionData], frozenset]


def bpa_method(
    q,
    phi: float,
    B: int = 50,
    block_length: Optional[int] = None,
    seed: int = 0,
    workers: int = 1,
    name: str = "bpa",
) -> SelectionMethod:
    """Stable selection: threshold the pair-average score of a lasso base
    selector calibrated to q active predictors on the training data."""

    def _select(train: RegressionData) -> frozenset:
        data = standardize(train)
        horizon = int(train.response_times.max())
        L = block_length if block_length is not None else auto_block_length(horizon)
        part = partition(horizon, L)
        q_int = lasso.resolve_q(q, data.p)
        est = lasso.q_estimate(data, lasso.lambda_path(data), q_int)
        scores = stability.bpa_scores(
            data, part, B, est.lambda_q, seed=seed, q=q_int, workers=workers
        )
        return stability.threshold(scores, phi)

    return SelectionMethod(name=name, select=_select)


def lasso_q_method(q, name: str = "lasso_q") -> SelectionMethod:
    """Plain lasso at the penalty calibrated to q active predictors."""

    def _select(train: RegressionData) -> frozenset:
        data = standardize(train)
        q_int = lasso.resolve_q(q, data.p)
        return lasso.q_estimate(data, lasso.lambda_path(data), q_int).fit.active_set

    return SelectionMethod(name=name, select=_select)


def lasso_cv_method(n_folds: int = 10, name: str = "lasso_cv") -> SelectionMethod:
    """Plain lasso at the cross-validated penalty."""

    def _select(train: RegressionData) -> frozenset:
        data = standardize(train)
        return lasso.select(data, lasso.cv_lambda(data, n_folds=n_folds))

    return SelectionMethod(name=name, select=_select)


@dataclass(frozen=True)
class MethodResult:
    """Outcome of one strategy: its selection and forecast report, or the
    error message when the strategy failed."""

    name: str
    selected: Optional[tuple[int, ...]] = None
    report: Optional[ForecastReport] = None
    error: Optional[str] = None


def compare_methods(
    data: RegressionData,
    methods: Sequence[SelectionMethod],
    train_fraction: float = 0.67,
    workers: int = 1,
) -> list[MethodResult]:
    """Run each strategy's selection on the training rows only, then score
    it with a rolling forecast.  Per-method failures are reported in the
    result rather than raised."""
    train, _ = split(data, train_fraction)

    def run_one(method: SelectionMethod) -> MethodResult:
        try:
            selected = frozenset(method.select(train))
            report = rolling_forecast(data, selected, train_fraction=train_fraction)
            return MethodResult(
                name=method.name, selected=tuple(sorted(selected)), report=report
            )
        except Exception as exc:  # noqa: BLE001 - comparisons survive one bad method
            return MethodResult(name=method.name, error=str(exc))

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_one, methods))
    return [run_one(m) for m in methods]


def comparison_csv(results: Sequence[MethodResult], dataset: str = "dataset") -> str:
    """Comparison table as CSV text: one row per method, cells rmse/mape."""
    lines = [f"method,{dataset}"]
    for r in results:
        if r.report is not None:
            lines.append(f"{r.name},{r.report.rmse:.3f}/{r.report.mape:.3f}")
        else:
            lines.append(f"{r.name},error: {r.error}")
    return "\n".join(lines) + "\n"


def comparison_dict(results: Sequence[MethodResult]) -> list[dict]:
    out = []
    for r in results:
        entry: dict = {"method": r.name, "error": r.error}
        if r.selected is not None:
            entry["selected_indices"] = list(r.selected)
        if r.report is not None:
            entry.update(r.report.to_dict())
        out.append(entry)
    return out
