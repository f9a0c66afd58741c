"""L1-regularized least squares by cyclic coordinate descent.

The solver works on the Gram form (Z'Z/n, Z'Y/n), so one pass costs O(p^2)
regardless of n and a whole regularization path reuses a single Gram
matrix.  The inner sweep is compiled with numba; everything is
deterministic for fixed inputs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit

from .core import RegressionData
from .errors import NumericalError

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 2000


@njit(cache=True)
def _cd_sweep(G, c, lam, beta):
    """One cyclic coordinate pass; returns the largest coefficient change."""
    p = beta.shape[0]
    max_delta = 0.0
    for k in range(p):
        gkk = G[k, k]
        if gkk <= 0.0:
            # degenerate (constant/empty) column: stays at zero
            continue
        rho = c[k] - np.dot(G[k], beta) + gkk * beta[k]
        if rho > lam:
            new = (rho - lam) / gkk
        elif rho < -lam:
            new = (rho + lam) / gkk
        else:
            new = 0.0
        delta = abs(new - beta[k])
        if delta > max_delta:
            max_delta = delta
        beta[k] = new
    return max_delta


@dataclass(frozen=True)
class LassoFit:
    """One solved lasso problem: minimizer of (1/2n)|Y-Z b|^2 + lam |b|_1."""

    lam: float
    beta: np.ndarray
    active_set: frozenset[int]
    iterations: int
    converged: bool
    objective_history: Optional[tuple[float, ...]] = None

    @property
    def n_active(self) -> int:
        return len(self.active_set)


@dataclass(frozen=True)
class LambdaPath:
    """Descending grid of penalties, glmnet style: log-spaced from the
    smallest penalty with an empty active set down to ratio * that value."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size < 1:
            raise ValueError("path must hold at least one value")
        if np.any(v < 0):
            raise ValueError("penalties must be non-negative")
        if v.size > 1 and not np.all(np.diff(v) < 0):
            raise ValueError("path values must be strictly decreasing")
        object.__setattr__(self, "values", v)


class GramProblem:
    """Cached Gram form of one dataset; shared by all fits along a path."""

    def __init__(self, data: RegressionData):
        Z, Y = data.Z, data.Y
        if Z.shape[1] == 0:
            raise ValueError("design has no predictor columns")
        self.n = Z.shape[0]
        self.p = Z.shape[1]
        self.G = np.ascontiguousarray(Z.T @ Z / self.n)
        self.c = np.ascontiguousarray(Z.T @ Y / self.n)
        self.y_ss = float(Y @ Y) / self.n

    def objective(self, lam: float, beta: np.ndarray) -> float:
        quad = self.y_ss - 2.0 * float(self.c @ beta) + float(beta @ self.G @ beta)
        return 0.5 * quad + lam * float(np.abs(beta).sum())

    def lambda_max(self) -> float:
        return float(np.abs(self.c).max())

    def solve(
        self,
        lam: float,
        warm_start: Optional[np.ndarray] = None,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
        track_objective: bool = False,
    ) -> LassoFit:
        if lam < 0:
            raise ValueError("penalty must be non-negative")
        if warm_start is None:
            beta = np.zeros(self.p)
        else:
            beta = np.array(warm_start, dtype=np.float64, copy=True)
            if beta.shape != (self.p,):
                raise ValueError("warm start has wrong length")
        history = [] if track_objective else None
        converged = False
        it = 0
        for it in range(1, max_iter + 1):
            max_delta = _cd_sweep(self.G, self.c, lam, beta)
            if track_objective:
                history.append(self.objective(lam, beta))
            if max_delta < tol * max(1.0, float(np.abs(beta).max())):
                converged = True
                break
        # coefficients below the convergence tolerance are rounding ghosts
        # (e.g. an exactly tied duplicate column); snap them so the active
        # set is well defined
        snap = tol * max(1.0, float(np.abs(beta).max()))
        beta[np.abs(beta) <= snap] = 0.0
        active = frozenset(int(k) for k in np.flatnonzero(beta != 0.0))
        return LassoFit(
            lam=float(lam),
            beta=beta,
            active_set=active,
            iterations=it,
            converged=converged,
            objective_history=tuple(history) if history is not None else None,
        )


def fit(
    data: RegressionData,
    lam: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    warm_start: Optional[np.ndarray] = None,
    track_objective: bool = False,
) -> LassoFit:
    """Solve one lasso problem on `data` at penalty `lam`.

    Convergence is declared when the largest per-sweep coefficient change
    drops below tol * max(1, |beta|_inf); a non-converged fit is returned
    with `converged=False` rather than raising.
    """
    return GramProblem(data).solve(lam, warm_start, tol, max_iter, track_objective)


def select(data: RegressionData, lam: float, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> frozenset[int]:
    """Active set of the lasso fit at penalty `lam`."""
    return fit(data, lam, tol=tol, max_iter=max_iter).active_set


def lambda_path(data: RegressionData, count: int = 100, ratio: float = 1e-3) -> LambdaPath:
    """Log-spaced penalty grid from lambda_max down to ratio * lambda_max.

    lambda_max = max_k |Z_k'Y| / n is the smallest penalty with an empty
    active set.  A response orthogonal to every column gives the degenerate
    single-value path {0}.
    """
    if count < 2:
        raise ValueError("count must be >= 2")
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie in (0, 1)")
    lam_max = GramProblem(data).lambda_max()
    if lam_max == 0.0:
        return LambdaPath(np.array([0.0]))
    values = np.geomspace(lam_max, ratio * lam_max, count)
    values[0] = lam_max
    return LambdaPath(values)


def fit_path(
    data: RegressionData,
    path: LambdaPath,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> list[LassoFit]:
    """Warm-started fits along a descending penalty path (single Gram)."""
    problem = GramProblem(data)
    fits = []
    beta = None
    for lam in path.values:
        f = problem.solve(float(lam), warm_start=beta, tol=tol, max_iter=max_iter)
        fits.append(f)
        beta = f.beta
    return fits


@dataclass(frozen=True)
class QEstimate:
    """Penalty calibrated to a target active-set size.

    `exact` records whether some grid value produced exactly the requested
    size; otherwise `lambda_q` is the first grid value (scanning from the
    largest penalty down) whose active set reached at least that size.
    """

    lambda_q: float
    fit: LassoFit
    q: int
    exact: bool


def q_estimate(
    data: RegressionData,
    path: LambdaPath,
    q: int,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> QEstimate:
    """Scan the path from the largest penalty down and return the first grid
    value whose active set has exactly `q` members (first-crossing value of
    size >= q as a flagged fallback)."""
    if not 0 <= q <= data.p:
        raise ValueError(f"q must lie in [0, {data.p}]")
    fits = fit_path(data, path, tol=tol, max_iter=max_iter)
    sizes = [f.n_active for f in fits]
    for f in fits:
        if f.n_active == q:
            return QEstimate(lambda_q=f.lam, fit=f, q=q, exact=True)
    for f in fits:
        if f.n_active >= q:
            return QEstimate(lambda_q=f.lam, fit=f, q=q, exact=False)
    raise NumericalError(
        f"q unreachable on path: requested {q} active, max reached {max(sizes)}"
    )


def resolve_q(q, p: int) -> int:
    """Resolve a target active-set size given either an integer or a
    fraction of the predictor count (fractions are floored, minimum 1)."""
    if isinstance(q, float):
        if 0.0 < q < 1.0:
            return max(1, int(q * p))
        if not q.is_integer():
            raise ValueError("q must be an integer or a fraction in (0, 1)")
    q_int = int(q)
    if not 0 <= q_int <= p:
        raise ValueError(f"q must lie in [0, {p}], got {q_int}")
    return q_int


def cv_lambda(
    data: RegressionData,
    n_folds: int = 10,
    count: int = 100,
    ratio: float = 1e-3,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> float:
    """Penalty minimizing K-fold cross-validated squared error on `data`.

    Folds are contiguous row chunks (deterministic); the grid is computed
    once on the full data and shared by every fold.  Ties resolve to the
    larger penalty.
    """
    if n_folds < 2:
        raise ValueError("need at least 2 folds")
    if data.n < 2 * n_folds:
        raise ValueError(f"too few rows ({data.n}) for {n_folds}-fold cross-validation")
    path = lambda_path(data, count=count, ratio=ratio)
    bounds = np.linspace(0, data.n, n_folds + 1).astype(int)
    mse = np.zeros(path.values.size)
    for f in range(n_folds):
        lo, hi = bounds[f], bounds[f + 1]
        held = np.arange(lo, hi)
        kept = np.concatenate([np.arange(0, lo), np.arange(hi, data.n)])
        fits = fit_path(data.take_rows(kept), path, tol=tol, max_iter=max_iter)
        Zh, Yh = data.Z[held], data.Y[held]
        for i, ft in enumerate(fits):
            resid = Yh - Zh @ ft.beta
            mse[i] += float(resid @ resid) / held.size
    best = int(np.argmin(mse / n_folds))
    return float(path.values[best])


def kkt_violation(data: RegressionData, fit_result: LassoFit) -> float:
    """Largest stationarity violation of a fit: active coordinates must have
    gradient lam * sign(beta_k), inactive ones gradient magnitude <= lam."""
    problem = GramProblem(data)
    grad = problem.c - problem.G @ fit_result.beta
    beta = fit_result.beta
    lam = fit_result.lam
    active = beta != 0.0
    worst = 0.0
    if active.any():
        worst = float(np.abs(grad[active] - lam * np.sign(beta[active])).max())
    if (~active).any():
        worst = max(worst, float(np.maximum(np.abs(grad[~active]) - lam, 0.0).max()))
    return worst
