import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nestedsir.lattice import (Box, INFINITE, block_index, community_level, community_levels,
                               euclid_dist, k1_delta, nearest_neighbour_pairs)

pos = st.integers(0, 300)
vec2 = st.tuples(pos, pos)


def test_block_index_examples():
    assert block_index((5, 3), 2, 2).index == (1, 0)
    assert block_index((0, 0, 0), 4, 3).index == (0, 0, 0)
    assert block_index((-1, 0), 3, 2).index == (-1, 0)
    assert block_index((5, 3), 0, 2).index == (5, 3)


def test_community_level_examples():
    assert community_level((0, 0), (1, 1), 2) == 1
    assert community_level((0, 0), (3, 2), 2) == 2
    assert community_level((0, 0), (-1, 0), 2) == INFINITE
    with pytest.raises(ValueError):
        community_level((1, 1), (1, 1), 2)


def _level_by_blocks(u, v, z):
    # independent route: first level where the block ids agree
    k = 0
    while block_index(u, k, z).index != block_index(v, k, z).index:
        k += 1
    return k


@given(vec2, vec2, st.integers(2, 4))
def test_community_level_matches_block_scan(u, v, z):
    if u == v:
        return
    assert community_level(u, v, z) == _level_by_blocks(u, v, z)
    assert community_level(u, v, z) == community_level(v, u, z)


@given(st.lists(st.tuples(vec2, vec2), min_size=1, max_size=30), st.integers(2, 3))
def test_vectorised_levels(pairs, z):
    pairs = [(u, v) for u, v in pairs if u != v]
    if not pairs:
        return
    cu = np.array([p[0] for p in pairs])
    cv = np.array([p[1] for p in pairs])
    got = community_levels(cu, cv, z)
    assert got.tolist() == [community_level(u, v, z) for u, v in pairs]


def test_orthants_vectorised():
    got = community_levels(np.array([[0, 0], [-3, -3]]), np.array([[0, -1], [-1, -2]]), 2)
    assert math.isinf(got[0]) and got[1] == 2


@given(vec2, vec2, st.integers(2, 4), st.floats(0.5, 3.0))
def test_k1_delta_is_smallest_covering_level(u, v, z, delta):
    if u == v:
        return
    k = k1_delta(u, v, z, delta)
    r = euclid_dist(u, v)
    assert r <= delta * z ** k * (1 + 1e-12)
    if k > 0:
        assert r > delta * z ** (k - 1) * (1 - 1e-12)


def test_k1_delta_examples():
    s2 = math.sqrt(2)
    assert k1_delta((0, 0), (1, 1), 2, s2) == 0
    assert k1_delta((0, 0), (3, 4), 2, s2) == 2
    assert k1_delta((4, 4), (4, 5), 2, s2) == 0


def test_euclid_dist_examples():
    assert euclid_dist((0, 0), (3, 4)) == 5
    assert euclid_dist((2, 7), (2, 7)) == 0
    assert euclid_dist((0, 0, 0), (1, 1, 1)) == pytest.approx(math.sqrt(3))


@pytest.mark.parametrize("side,dim", [(1, 2), (5, 1), (4, 2), (3, 3)])
def test_box_and_neighbours(side, dim):
    box = Box(side, dim)
    assert box.n_vertices == side ** dim
    c = box.coords()
    assert np.array_equal(box.index(c), np.arange(box.n_vertices))
    assert box.vertex(box.n_vertices - 1) == (side - 1,) * dim
    nn = nearest_neighbour_pairs(box)
    assert len(nn) == dim * side ** (dim - 1) * (side - 1)
    assert np.all(np.abs(c[nn[:, 0]] - c[nn[:, 1]]).sum(axis=1) == 1)


def test_top_level():
    assert Box(8, 2).top_level(2) == 3
    assert Box(9, 2).top_level(2) == 4
    assert Box(1, 2).top_level(2) == 0
