"""Time-series containers and lagged design-matrix construction.

A :class:`MultiSeries` holds T joint observations of d endogenous and m
exogenous series.  :func:`build_design` turns it into the one-step-ahead
regression of a target component on stacked lags, the shape every other
module consumes.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import DataError

ENDOGENOUS = "endogenous"
EXOGENOUS = "exogenous"


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class MultiSeries:
    """T x d endogenous and T x m exogenous observations with column names.

    Values must be finite; names must be unique across both groups.  The
    optional `timestamps` index is strictly increasing and only carried for
    reporting.  Instances are immutable and safe to share between threads.
    """

    endogenous: np.ndarray
    exogenous: Optional[np.ndarray]
    names: tuple[str, ...]
    timestamps: Optional[np.ndarray] = None

    def __post_init__(self):
        endo = np.asarray(self.endogenous, dtype=np.float64)
        if endo.ndim == 1:
            endo = endo[:, None]
        if endo.ndim != 2:
            raise ValueError("endogenous must be a T x d matrix")
        if self.exogenous is None:
            exo = np.empty((endo.shape[0], 0))
        else:
            exo = np.asarray(self.exogenous, dtype=np.float64)
            if exo.ndim == 1:
                exo = exo[:, None]
            if exo.size == 0:
                exo = np.empty((endo.shape[0], 0))
        if endo.shape[0] < 1:
            raise ValueError("need at least one observation")
        if exo.shape[0] != endo.shape[0]:
            raise ValueError(
                f"endogenous ({endo.shape[0]} rows) and exogenous ({exo.shape[0]} rows) "
                "must have identical row counts"
            )
        if not np.all(np.isfinite(endo)) or not np.all(np.isfinite(exo)):
            raise ValueError("non-finite values (NaN/inf) are rejected")
        names = tuple(str(n) for n in self.names)
        if len(names) != endo.shape[1] + exo.shape[1]:
            raise ValueError(
                f"got {len(names)} names for {endo.shape[1]} + {exo.shape[1]} columns"
            )
        if len(set(names)) != len(names):
            raise ValueError("column names must be unique across endogenous and exogenous")
        if self.timestamps is not None:
            ts = np.asarray(self.timestamps)
            if ts.shape != (endo.shape[0],):
                raise ValueError("timestamps must have length T")
            if ts.size > 1 and not np.all(np.diff(ts.astype(np.float64)) > 0):
                raise ValueError("timestamps must be strictly increasing")
            object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "endogenous", _readonly(endo))
        object.__setattr__(self, "exogenous", _readonly(exo))
        object.__setattr__(self, "names", names)

    @property
    def T(self) -> int:
        return self.endogenous.shape[0]

    @property
    def d(self) -> int:
        return self.endogenous.shape[1]

    @property
    def m(self) -> int:
        return self.exogenous.shape[1]

    @property
    def endo_names(self) -> tuple[str, ...]:
        return self.names[: self.d]

    @property
    def exo_names(self) -> tuple[str, ...]:
        return self.names[self.d :]


def default_names(d: int, m: int) -> tuple[str, ...]:
    return tuple(f"y{i}" for i in range(d)) + tuple(f"x{j}" for j in range(m))


@dataclass(frozen=True)
class LagSpec:
    """Maximum endogenous lag (p_tilde >= 1 entries at lags 1..p_tilde) and
    exogenous lag count (s entries at lags 0..s-1, lag 0 being the most
    recent observation preceding the response)."""

    p_tilde: int
    s: int

    def __post_init__(self):
        if self.p_tilde < 0 or self.s < 0:
            raise ValueError("lag counts must be non-negative")
        if self.p_tilde + self.s < 1:
            raise ValueError("at least one predictor class required (p_tilde + s >= 1)")

    @property
    def max_lag(self) -> int:
        return max(self.p_tilde, self.s)

    def n_predictors(self, d: int, m: int) -> int:
        return d * self.p_tilde + m * self.s


@dataclass(frozen=True)
class PredictorDescriptor:
    """Identity of one design column: which series, at which lag.

    Endogenous lags are counted back from the response (lag 1 = value one
    step before the response); exogenous lag 0 is the newest exogenous
    value available when the response is formed.
    """

    kind: str
    series_index: int
    lag: int

    def __post_init__(self):
        if self.kind not in (ENDOGENOUS, EXOGENOUS):
            raise ValueError(f"kind must be '{ENDOGENOUS}' or '{EXOGENOUS}'")
        min_lag = 1 if self.kind == ENDOGENOUS else 0
        if self.lag < min_lag:
            raise ValueError(f"{self.kind} lag must be >= {min_lag}")

    def label(self, series: "MultiSeries") -> str:
        if self.kind == ENDOGENOUS:
            return f"{series.endo_names[self.series_index]}.l{self.lag}"
        return f"{series.exo_names[self.series_index]}.l{self.lag}"


@dataclass(frozen=True)
class RegressionData:
    """Response vector Y, stacked lag matrix Z and per-column descriptors.

    Row i predicts the response at time `response_times[i]` (1-based) from
    values strictly before it.  `column_means` / `column_scales` map the
    (possibly standardized) columns back to the raw series; they are
    identities when `standardized` is False.
    """

    Y: np.ndarray
    Z: np.ndarray
    descriptors: tuple[PredictorDescriptor, ...]
    response_times: np.ndarray
    column_means: np.ndarray
    column_scales: np.ndarray
    y_mean: float = 0.0
    constant_columns: tuple[int, ...] = ()
    standardized: bool = False

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=np.float64)
        Z = np.asarray(self.Z, dtype=np.float64)
        if Z.ndim != 2 or Y.ndim != 1 or Z.shape[0] != Y.shape[0]:
            raise ValueError("Y must be (n,) and Z (n, p) with matching n")
        if len(self.descriptors) != Z.shape[1]:
            raise ValueError("one descriptor per design column required")
        times = np.asarray(self.response_times, dtype=np.int64)
        if times.shape != Y.shape:
            raise ValueError("response_times must align with Y")
        if times.size > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("response times must be strictly increasing")
        object.__setattr__(self, "Y", _readonly(Y))
        object.__setattr__(self, "Z", _readonly(Z))
        times = np.ascontiguousarray(times)
        times.flags.writeable = False
        object.__setattr__(self, "response_times", times)
        object.__setattr__(self, "column_means", _readonly(np.asarray(self.column_means)))
        object.__setattr__(self, "column_scales", _readonly(np.asarray(self.column_scales)))

    @property
    def n(self) -> int:
        return self.Y.shape[0]

    @property
    def p(self) -> int:
        return self.Z.shape[1]

    def take_rows(self, index: np.ndarray) -> "RegressionData":
        """New view with rows `index` (kept in the given order)."""
        return replace(
            self,
            Y=self.Y[index],
            Z=self.Z[index],
            response_times=self.response_times[index],
        )


def build_design(series: MultiSeries, target: int, lags: LagSpec) -> RegressionData:
    """Build the one-step-ahead lagged regression for one endogenous target.

    For every usable (1-based) time t in max(p_tilde, s) .. T-1 the design
    row holds, in order, the endogenous values at lags 1..p_tilde for all d
    series (grouped by lag) followed by the exogenous values at lags
    0..s-1 for all m series, and the response is the target component one
    step ahead.

    Parameters
    ----------
    series : MultiSeries
        Raw observations.
    target : int
        Endogenous column index of the response.
    lags : LagSpec
        Lag counts; require max(p_tilde, s) < T so at least one row exists.

    Returns
    -------
    RegressionData
        n = T - max(p_tilde, s) rows, p = d*p_tilde + m*s columns,
        unstandardized.
    """
    if not 0 <= target < series.d:
        raise ValueError(f"target index {target} out of range for d={series.d}")
    if lags.s > 0 and series.m == 0:
        raise ValueError("exogenous lags requested but series has no exogenous columns")
    maxlag = lags.max_lag
    T = series.T
    n = T - maxlag
    if n < 1:
        raise ValueError(f"series of length {T} too short for max lag {maxlag}")

    endo, exo = series.endogenous, series.exogenous
    cols = []
    descriptors = []
    # response (0-based) indices r = maxlag .. T-1; row value at lag i is endo[r-i]
    for lag in range(1, lags.p_tilde + 1):
        for j in range(series.d):
            cols.append(endo[maxlag - lag : T - lag, j])
            descriptors.append(PredictorDescriptor(ENDOGENOUS, j, lag))
    # exogenous lag j is exo[r-1-j]: the newest exogenous value is one step old
    for lag in range(lags.s):
        for j in range(series.m):
            cols.append(exo[maxlag - 1 - lag : T - 1 - lag, j])
            descriptors.append(PredictorDescriptor(EXOGENOUS, j, lag))

    p = len(cols)
    Z = np.column_stack(cols) if p else np.empty((n, 0))
    Y = endo[maxlag:, target].copy()
    return RegressionData(
        Y=Y,
        Z=Z,
        descriptors=tuple(descriptors),
        response_times=np.arange(maxlag + 1, T + 1, dtype=np.int64),
        column_means=np.zeros(p),
        column_scales=np.ones(p),
    )


def standardize(data: RegressionData) -> RegressionData:
    """Center Y and scale every Z column to mean 0, standard deviation 1.

    Standard deviations use the population convention (divide by n).
    Constant columns are centered, given scale 1 and flagged instead of
    failing.  The response is centered but deliberately not scaled, so
    fitted values stay in response units up to the recorded offset.
    """
    if data.n < 2:
        raise ValueError("standardization needs at least 2 rows")
    means = data.Z.mean(axis=0)
    scales = data.Z.std(axis=0)
    constant = np.flatnonzero(scales == 0.0)
    scales = np.where(scales == 0.0, 1.0, scales)
    y_mean = float(data.Y.mean())
    return replace(
        data,
        Y=data.Y - y_mean,
        Z=(data.Z - means) / scales,
        column_means=means,
        column_scales=scales,
        y_mean=data.y_mean + y_mean,
        constant_columns=tuple(int(k) for k in constant),
        standardized=True,
    )


def original_scale_coefficients(data: RegressionData, beta: np.ndarray) -> tuple[float, np.ndarray]:
    """Map coefficients fitted on standardized data back to raw-series scale.

    Returns (intercept, coefficients) such that predictions on the raw
    columns equal predictions of `beta` on the standardized columns.
    """
    beta = np.asarray(beta, dtype=np.float64)
    coefs = beta / data.column_scales
    intercept = data.y_mean - float(np.dot(coefs, data.column_means))
    return intercept, coefs


def detrend_linear(values: np.ndarray) -> np.ndarray:
    """Residuals of the least-squares line fit against 1..T."""
    y = np.asarray(values, dtype=np.float64)
    if y.ndim != 1 or y.size < 2:
        raise ValueError("detrend needs a 1-d series of length >= 2")
    t = np.arange(1.0, y.size + 1.0)
    X = np.column_stack([np.ones_like(t), t])
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    return y - X @ coef


def detrend_multiseries(series: MultiSeries) -> MultiSeries:
    """Linearly detrend every endogenous and exogenous column."""
    endo = np.column_stack([detrend_linear(series.endogenous[:, j]) for j in range(series.d)])
    if series.m:
        exo = np.column_stack([detrend_linear(series.exogenous[:, j]) for j in range(series.m)])
    else:
        exo = series.exogenous
    return MultiSeries(endo, exo, series.names, series.timestamps)


# -- CSV ingestion ------------------------------------------------------------

INDEX_COLUMN_NAMES = ("t", "timestamp")


@dataclass(frozen=True)
class CsvTable:
    """Parsed CSV: all value columns as float64 plus an optional index column."""

    names: tuple[str, ...]
    values: np.ndarray
    timestamps: Optional[np.ndarray] = None


def read_csv_table(path) -> CsvTable:
    """Read a comma-separated file with a header of unique column names.

    A first column named "t" or "timestamp" is treated as the index; every
    other column must parse as a 64-bit float (decimal point).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise DataError(f"{path}: duplicate column names in header")
        has_index = bool(header) and header[0].lower() in INDEX_COLUMN_NAMES
        rows = []
        index = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            start = 0
            if has_index:
                index.append(row[0].strip())
                start = 1
            try:
                rows.append([float(cell) for cell in row[start:]])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    values = np.asarray(rows, dtype=np.float64)
    if not np.all(np.isfinite(values)):
        bad = np.argwhere(~np.isfinite(values))[0]
        raise DataError(
            f"{path}: non-finite value in column '{header[bad[1] + (1 if has_index else 0)]}'"
        )
    names = tuple(header[1:] if has_index else header)
    ts = None
    if has_index:
        try:
            ts = np.asarray([float(v) for v in index])
        except ValueError:
            ts = np.asarray(index)
    return CsvTable(names=names, values=values, timestamps=ts)


def make_multiseries(
    table: CsvTable,
    endogenous: Sequence[str],
    exogenous: Sequence[str] | str = "all",
) -> MultiSeries:
    """Split a parsed table into endogenous/exogenous groups by column name.

    `exogenous="all"` takes every non-endogenous column.  Unknown or
    overlapping names fail before any computation.
    """
    known = {name: i for i, name in enumerate(table.names)}
    missing = [n for n in endogenous if n not in known]
    if missing:
        raise DataError(f"unknown endogenous column(s): {', '.join(missing)}")
    if isinstance(exogenous, str):
        if exogenous != "all":
            raise DataError("exogenous must be 'all' or a list of column names")
        exo_names = [n for n in table.names if n not in set(endogenous)]
    else:
        exo_names = list(exogenous)
        missing = [n for n in exo_names if n not in known]
        if missing:
            raise DataError(f"unknown exogenous column(s): {', '.join(missing)}")
        overlap = set(exo_names) & set(endogenous)
        if overlap:
            raise DataError(f"column(s) listed as both groups: {', '.join(sorted(overlap))}")
    endo = table.values[:, [known[n] for n in endogenous]]
    if exo_names:
        exo = table.values[:, [known[n] for n in exo_names]]
    else:
        exo = np.empty((table.values.shape[0], 0))
    try:
        return MultiSeries(endo, exo, tuple(endogenous) + tuple(exo_names), table.timestamps)
    except ValueError as exc:
        raise DataError(str(exc)) from None
