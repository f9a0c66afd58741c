"""Stability scores over complementary block-pair subsamples.

For each of B rounds the odd blocks are split into two disjoint halves,
the base selector runs on both, and two aggregates are kept per predictor:
the fraction of the 2B half-runs that picked it (the pair-average score)
and the fraction of the B rounds that picked it in both halves (the
simultaneous score).  Thresholding the pair-average score gives the stable
set; the finite-sample calculator bounds how many low-probability
predictors can slip through at a given threshold.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import lasso
from ._rng import STREAM_STABILITY, substream
from .blocks import BlockPartition, gather, sample_pair
from .core import RegressionData
from .errors import NumericalError, StabilityRunError

Selector = Callable[[RegressionData], frozenset]


@dataclass(frozen=True)
class StabilityScores:
    """Per-predictor selection tallies over B complementary pair rounds.

    The integer counts are the exact representation: `counts_av[k]` is the
    number of the 2B half-runs selecting k, `counts_sim[k]` the number of
    rounds selecting k in both halves.  The float scores are the counts
    over their denominators; use the counts when testing the exact
    per-sample identities 2*counts_sim <= counts_av and
    B - counts_av + counts_sim >= 0 (the float forms can shave an ulp).
    """

    B: int
    counts_av: np.ndarray
    counts_sim: np.ndarray
    selections: np.ndarray  # bool, shape (B, 2, p)
    lambda_q: Optional[float] = None
    q: Optional[int] = None

    @property
    def p(self) -> int:
        return self.counts_av.shape[0]

    @property
    def pi_av(self) -> np.ndarray:
        return self.counts_av / (2 * self.B)

    @property
    def pi_sim(self) -> np.ndarray:
        return self.counts_sim / self.B

    @classmethod
    def from_selections(cls, selections: np.ndarray, lambda_q=None, q=None) -> "StabilityScores":
        sel = np.asarray(selections, dtype=bool)
        if sel.ndim != 3 or sel.shape[1] != 2:
            raise ValueError("selections must have shape (B, 2, p)")
        counts_av = sel.sum(axis=(0, 1)).astype(np.int64)
        counts_sim = (sel[:, 0, :] & sel[:, 1, :]).sum(axis=0).astype(np.int64)
        return cls(
            B=sel.shape[0],
            counts_av=counts_av,
            counts_sim=counts_sim,
            selections=sel,
            lambda_q=lambda_q,
            q=q,
        )


def stability_scores(
    data: RegressionData,
    part: BlockPartition,
    B: int,
    selector: Selector,
    seed: int,
    workers: int = 1,
    groups: int = 2,
    lambda_q: Optional[float] = None,
    q: Optional[int] = None,
) -> StabilityScores:
    """Run `selector` on both halves of B complementary block-pair draws.

    Round j draws its own RNG substream from (seed, j), so scores are
    bit-identical for a given seed no matter how many workers execute the
    rounds.  `groups` is reserved for sampling more than two disjoint
    groups per round; only the complementary-pair case is supported.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    if groups != 2:
        raise ValueError("only groups=2 (complementary pairs) is supported")
    if part.n_odd_blocks < 2:
        raise ValueError("need at least 2 odd blocks to form complementary pairs")

    def one_round(j: int) -> np.ndarray:
        rng = substream(seed, STREAM_STABILITY, j)
        pair = sample_pair(part, rng)
        out = np.zeros((2, data.p), dtype=bool)
        for half, ids in enumerate((pair.first, pair.second)):
            try:
                chosen = selector(gather(data, part, ids))
            except Exception as exc:  # noqa: BLE001 - re-raised with round index
                raise StabilityRunError(j, str(exc)) from exc
            idx = np.fromiter((int(k) for k in chosen), dtype=np.int64, count=len(chosen))
            if idx.size:
                if idx.min() < 0 or idx.max() >= data.p:
                    raise StabilityRunError(j, "selector returned out-of-range index")
                out[half, idx] = True
        return out

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rounds = list(pool.map(one_round, range(B)))
    else:
        rounds = [one_round(j) for j in range(B)]
    selections = np.stack(rounds, axis=0)
    return StabilityScores.from_selections(selections, lambda_q=lambda_q, q=q)


def bpa_scores(
    data: RegressionData,
    part: BlockPartition,
    B: int,
    lambda_q: float,
    seed: int,
    q: Optional[int] = None,
    tol: float = lasso.DEFAULT_TOL,
    max_iter: int = lasso.DEFAULT_MAX_ITER,
    workers: int = 1,
) -> StabilityScores:
    """Stability scores with the lasso at the fixed penalty `lambda_q` as
    the base selector on every half-sample."""

    def selector(sub: RegressionData) -> frozenset:
        return lasso.select(sub, lambda_q, tol=tol, max_iter=max_iter)

    return stability_scores(
        data, part, B, selector, seed, workers=workers, lambda_q=float(lambda_q), q=q
    )


def threshold(scores: StabilityScores, phi: float, measure: str = "average") -> frozenset[int]:
    """Stable set {k : score_k >= phi} for the chosen measure."""
    if not 0.0 < phi <= 1.0:
        raise ValueError("phi must lie in (0, 1]")
    if measure == "average":
        vals = scores.pi_av
    elif measure == "simultaneous":
        vals = scores.pi_sim
    else:
        raise ValueError("measure must be 'average' or 'simultaneous'")
    return frozenset(int(k) for k in np.flatnonzero(vals >= phi))


# -- finite-sample error control ----------------------------------------------

THETA_LIMIT = 1.0 / math.sqrt(3.0)


def phi_grid(B: int) -> np.ndarray:
    """Thresholds with guarantees: 1/2 + k/(2B) for k = 2..B."""
    if B < 2:
        raise ValueError("grid needs B >= 2")
    return 0.5 + np.arange(2, B + 1) / (2.0 * B)


def _on_grid(phi: float, B: int) -> bool:
    k = (phi - 0.5) * 2.0 * B
    return abs(k - round(k)) < 1e-7 and 2 <= round(k) <= B


def _first_branch_floor(B: int, theta: float) -> float:
    return min(0.5 + theta**2, 0.5 + 1.0 / (2.0 * B) + 0.75 * theta**2)


def error_constant(phi: float, B: int, theta: Optional[float] = None) -> float:
    """Tail constant of the improved Markov inequality behind the bound.

    Piecewise in the threshold:

        1 / (2 * (2*phi - 1 - 1/(2B)))          for phi in (floor(theta), 3/4]
        4 * (1 - phi + 1/(2B)) / (1 + 1/B)      for phi in (3/4, 1]

    where floor(theta) = min(1/2 + theta^2, 1/2 + 1/(2B) + 3*theta^2/4).
    `phi` must sit on the guarantee grid {1/2 + 1/B, 1/2 + 3/(2B), ..., 1};
    the low branch needs `theta` (< 1/sqrt(3)) to check its validity floor.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    if theta is not None and not 0.0 <= theta < THETA_LIMIT:
        raise ValueError(f"theta must lie in [0, 1/sqrt(3)), got {theta}")
    if not _on_grid(phi, B):
        raise ValueError(
            f"phi={phi} is not on the guarantee grid {{1/2 + k/(2B), k=2..B}} for B={B}"
        )
    if phi > 0.75:
        return 4.0 * (1.0 - phi + 1.0 / (2.0 * B)) / (1.0 + 1.0 / B)
    if theta is None:
        raise ValueError("theta is required for thresholds at or below 3/4")
    if phi <= _first_branch_floor(B, theta):
        raise ValueError(
            f"phi={phi} too small for the guarantee (needs phi > "
            f"{_first_branch_floor(B, theta):.6g} at theta={theta})"
        )
    return 1.0 / (2.0 * (2.0 * phi - 1.0 - 1.0 / (2.0 * B)))


def selection_bound(q: int, p: int, phi: float, B: int) -> float:
    """Bound 2 q^2 C(phi, B) / p on the expected number of low-selection-
    probability predictors in the stable set, with the cutoff theta = q/p
    and the base procedure's low-probability mass approximated by q."""
    if p < 1 or q < 0 or q > p:
        raise ValueError("need 0 <= q <= p with p >= 1")
    theta = q / p
    if theta >= THETA_LIMIT:
        raise NumericalError(
            f"theta = q/p = {theta:.4f} is outside the guarantee range (< 1/sqrt(3))"
        )
    C = error_constant(phi, B, theta)
    return 2.0 * q * q * C / p


def solve_phi(q: int, p: int, B: int, l: float) -> float:
    """Smallest grid threshold whose bound does not exceed l * p.

    Grid values below the low branch's validity floor are skipped; raises
    when even phi = 1 misses the target.
    """
    if not 0.0 < l <= 1.0:
        raise ValueError("l must lie in (0, 1]")
    if p < 1 or q < 0 or q > p:
        raise ValueError("need 0 <= q <= p with p >= 1")
    theta = q / p
    if theta >= THETA_LIMIT:
        raise NumericalError(
            f"theta = q/p = {theta:.4f} is outside the guarantee range (< 1/sqrt(3))"
        )
    for k in range(2, B + 1):
        phi = (B + k) / (2.0 * B)
        if phi <= 0.75 and phi <= _first_branch_floor(B, theta):
            continue
        if selection_bound(q, p, phi, B) <= l * p:
            return phi
    raise NumericalError(
        f"target l={l} unachievable: even phi=1 gives bound "
        f"{selection_bound(q, p, 1.0, B):.4f} > {l * p:.4f}"
    )


# -- report -------------------------------------------------------------------


@dataclass(frozen=True)
class SelectionReport:
    """Serializable outcome of one stable-selection run."""

    predictor_names: tuple[str, ...]
    pi_av: tuple[float, ...]
    pi_sim: tuple[float, ...]
    stable_set: tuple[int, ...]
    stable_names: tuple[str, ...]
    lambda_q: float
    lambda_q_exact: bool
    q: int
    phi: float
    phi_solved: bool
    theta: float
    bound: Optional[float]
    bound_note: Optional[str]
    B: int
    block_length: int
    n_odd_blocks: int
    seed: int
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "lambda_q": self.lambda_q,
            "lambda_q_exact": self.lambda_q_exact,
            "q": self.q,
            "phi": self.phi,
            "phi_solved": self.phi_solved,
            "theta": self.theta,
            "bound": self.bound,
            "bound_note": self.bound_note,
            "B": self.B,
            "block_length": self.block_length,
            "n_odd_blocks": self.n_odd_blocks,
            "seed": self.seed,
            "scores": [
                {"name": n, "pi_av": a, "pi_sim": s}
                for n, a, s in zip(self.predictor_names, self.pi_av, self.pi_sim)
            ],
            "stable_set": list(self.stable_names),
            "stable_set_indices": list(self.stable_set),
            "params": self.params,
        }
