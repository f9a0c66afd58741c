"""Alternating block partition of a time axis and complementary pair sampling.

The time axis 1..T is cut into 2 * mu interleaved blocks of length L:
odd block j covers {2(j-1)L + 1, ..., (2j-1)L} and even block j the next L
indices.  Subsampling draws half of the odd blocks uniformly without
replacement; the untouched odd blocks form the complementary half.  Only
odd blocks are ever sampled, which keeps the sampled index sets separated
by at least one block length.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import RegressionData


@dataclass(frozen=True)
class BlockPartition:
    """Interleaved odd/even blocks of length `block_length` over 1..T.

    `remainder` holds the trailing indices beyond the last even block; they
    take no part in sampling but stay available to full-data operations.
    """

    T: int
    block_length: int
    n_odd_blocks: int
    odd_blocks: tuple[range, ...]
    even_blocks: tuple[range, ...]
    remainder: range

    def odd_indices(self, block_ids) -> np.ndarray:
        """Ascending 1-based time indices covered by the named odd blocks."""
        ids = sorted(int(b) for b in block_ids)
        out = np.concatenate([np.arange(self.odd_blocks[b].start, self.odd_blocks[b].stop) for b in ids])
        return out


def partition(T: int, block_length: int) -> BlockPartition:
    """Partition 1..T into floor(T / (2 * block_length)) odd/even block pairs.

    Requires 1 <= block_length <= floor(T/2) so at least one pair exists.
    """
    if T < 2:
        raise ValueError("need T >= 2 to form blocks")
    if not 1 <= block_length <= T // 2:
        raise ValueError(
            f"block_length must be in [1, {T // 2}] for T={T}, got {block_length}"
        )
    mu = T // (2 * block_length)
    odd = []
    even = []
    for j in range(1, mu + 1):
        start = 2 * (j - 1) * block_length + 1
        odd.append(range(start, start + block_length))
        even.append(range(start + block_length, start + 2 * block_length))
    return BlockPartition(
        T=T,
        block_length=block_length,
        n_odd_blocks=mu,
        odd_blocks=tuple(odd),
        even_blocks=tuple(even),
        remainder=range(2 * mu * block_length + 1, T + 1),
    )


@dataclass(frozen=True)
class BlockPairSample:
    """A random split of the odd-block ids into two disjoint halves.

    `first` holds floor(mu/2) ids drawn without replacement, `second` the
    rest; together they cover every odd block.
    """

    first: tuple[int, ...]
    second: tuple[int, ...]


def sample_pair(part: BlockPartition, rng: np.random.Generator) -> BlockPairSample:
    """Draw a uniformly random complementary pair of odd-block subsets."""
    mu = part.n_odd_blocks
    if mu < 2:
        raise ValueError("need at least 2 odd blocks to form a complementary pair")
    perm = rng.permutation(mu)
    half = mu // 2
    first = tuple(sorted(int(i) for i in perm[:half]))
    second = tuple(sorted(int(i) for i in perm[half:]))
    return BlockPairSample(first=first, second=second)


def gather(data: RegressionData, part: BlockPartition, block_ids) -> RegressionData:
    """Design rows whose response time falls in the named odd blocks.

    A row belongs to the block containing its response time (the newest
    index it touches); its lags may reach into neighbouring blocks.  Rows
    come back in ascending time order.
    """
    ids = list(block_ids)
    if not ids:
        raise ValueError("at least one block id required")
    for b in ids:
        if not 0 <= int(b) < part.n_odd_blocks:
            raise ValueError(f"block id {b} out of range [0, {part.n_odd_blocks})")
    member = np.zeros(part.T + 1, dtype=bool)
    member[part.odd_indices(ids)] = True
    mask = member[data.response_times]
    if not mask.any():
        raise ValueError("selected blocks contain no design rows")
    return data.take_rows(np.flatnonzero(mask))


def auto_block_length(T: int, seasonality: int | None = None, multiple: int = 1) -> int:
    """Default block length: `multiple` seasonal periods, else ceil(sqrt(T))."""
    if seasonality is not None:
        if seasonality < 1 or multiple < 1:
            raise ValueError("seasonality and multiple must be positive")
        return int(seasonality) * int(multiple)
    return int(math.ceil(math.sqrt(T)))
