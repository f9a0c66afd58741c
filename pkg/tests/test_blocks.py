import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blockstab import (
    LagSpec,
    MultiSeries,
    auto_block_length,
    build_design,
    gather,
    partition,
    sample_pair,
)


def test_partition_hand_layout():
    part = partition(16, 2)
    assert [list(b) for b in part.odd_blocks] == [[1, 2], [5, 6], [9, 10], [13, 14]]
    assert [list(b) for b in part.even_blocks] == [[3, 4], [7, 8], [11, 12], [15, 16]]
    assert list(part.remainder) == []
    assert part.n_odd_blocks == 4


def test_partition_single_pair():
    part = partition(10, 5)
    assert part.n_odd_blocks == 1
    assert list(part.odd_blocks[0]) == [1, 2, 3, 4, 5]
    assert list(part.even_blocks[0]) == [6, 7, 8, 9, 10]


def test_partition_remainder():
    part = partition(17, 2)
    assert list(part.remainder) == [17]


def test_partition_block_length_out_of_range():
    with pytest.raises(ValueError):
        partition(10, 6)
    with pytest.raises(ValueError):
        partition(10, 0)


@given(st.integers(2, 200), st.data())
@settings(max_examples=60, deadline=None)
def test_partition_totality(T, data):
    block_length = data.draw(st.integers(1, T // 2))
    part = partition(T, block_length)
    seen = []
    for o, e in zip(part.odd_blocks, part.even_blocks):
        assert len(o) == len(e) == block_length
        seen.extend(o)
        seen.extend(e)
    seen.extend(part.remainder)
    assert sorted(seen) == list(range(1, T + 1))


def test_sample_pair_two_blocks():
    part = partition(8, 2)
    assert part.n_odd_blocks == 2
    firsts = set()
    for seed in range(40):
        pair = sample_pair(part, np.random.default_rng(seed))
        assert sorted(pair.first + pair.second) == [0, 1]
        firsts.add(pair.first)
    assert firsts == {(0,), (1,)}


def test_sample_pair_uniform_membership():
    # each of 4 blocks lands in the first half with frequency 1/2
    part = partition(16, 2)
    n = 100_000
    rng = np.random.default_rng(7)
    counts = np.zeros(4)
    for _ in range(n):
        pair = sample_pair(part, rng)
        counts[list(pair.first)] += 1
    np.testing.assert_allclose(counts / n, 0.5, atol=0.01)


def test_sample_pair_floor_split():
    part = partition(20, 2)
    assert part.n_odd_blocks == 5
    pair = sample_pair(part, np.random.default_rng(0))
    assert len(pair.first) == 2 and len(pair.second) == 3


def test_sample_pair_needs_two_blocks():
    part = partition(10, 5)
    with pytest.raises(ValueError):
        sample_pair(part, np.random.default_rng(0))


def test_sample_pair_seed_determinism():
    part = partition(1000, 10)
    a = sample_pair(part, np.random.default_rng(42))
    b = sample_pair(part, np.random.default_rng(42))
    assert a == b


def _design(T, seed=0):
    g = np.random.default_rng(seed)
    ms = MultiSeries(g.standard_normal(T), g.standard_normal(T), ("y", "x"))
    return build_design(ms, 0, LagSpec(1, 1))


def test_gather_all_odd_blocks_is_half_minus_boundary():
    T, L = 40, 2
    data = _design(T)
    part = partition(T, L)
    got = gather(data, part, range(part.n_odd_blocks))
    # odd blocks cover T/2 indices; response times start at maxlag+1 = 2,
    # so exactly the rows of odd block 1 before that are lost
    assert got.n == T // 2 - 1


def test_gather_single_block_rows():
    data = _design(40)
    part = partition(40, 2)
    got = gather(data, part, [0])
    assert set(got.response_times.tolist()) <= {1, 2}
    np.testing.assert_array_equal(got.Y, data.Y[np.isin(data.response_times, [1, 2])])


def test_gather_disjoint_ids_disjoint_rows():
    data = _design(60)
    part = partition(60, 3)
    a = gather(data, part, [0, 2])
    b = gather(data, part, [1, 4])
    assert not set(a.response_times.tolist()) & set(b.response_times.tolist())


def test_gather_empty_ids():
    data = _design(20)
    part = partition(20, 2)
    with pytest.raises(ValueError):
        gather(data, part, [])


@given(st.integers(0, 500))
@settings(max_examples=30, deadline=None)
def test_gather_halves_are_disjoint_for_any_seed(seed):
    data = _design(60)
    part = partition(60, 3)
    pair = sample_pair(part, np.random.default_rng(seed))
    a = gather(data, part, pair.first)
    b = gather(data, part, pair.second)
    overlap = set(a.response_times.tolist()) & set(b.response_times.tolist())
    assert overlap == set()


def test_auto_block_length():
    assert auto_block_length(2000) == 45  # ceil(sqrt(2000))
    assert auto_block_length(100, seasonality=24) == 24
    assert auto_block_length(100, seasonality=24, multiple=3) == 72
