import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nestedsir import rng
from nestedsir.lattice import Box, community_level, k1_delta
from nestedsir.netmodels import ModelKind, Params, nested_edge_exists
from nestedsir.oracle import exact_edge_prob, yukich_edge_prob
from nestedsir.percolation.graph import (MemoryGuardError, all_pairs, batch_open_edges,
                                         half_displacements, independent_edge_probs,
                                         sample_open_graph)

P = Params(2, 2, 2.0, 0.5, 0.5)
P3 = Params(2, 2, 2.0, 0.25, 0.2)
MODELS = ["nested", "distance", "yukich", "directed-pair", "long-range"]


def _check_wellformed(g):
    e = g.edges
    assert e.dtype == np.int64 and e.shape[1] == 2
    assert np.all(e[:, 0] < e[:, 1]) and np.all(e[:, 1] < g.n_vertices)
    key = e[:, 0] * g.n_vertices + e[:, 1]
    assert np.all(np.diff(key) > 0)
    indptr, idx = g.csr
    for v in range(0, g.n_vertices, max(1, g.n_vertices // 17)):
        for w in g.neighbors(v):
            assert v in g.neighbors(w)


@pytest.mark.parametrize("name", MODELS)
def test_reproducible_and_wellformed(name):
    params = P3
    model = ModelKind.parse(name, params)
    a = sample_open_graph(Box(20, 2), model, params, 5)
    b = sample_open_graph(Box(20, 2), model, params, 5)
    assert np.array_equal(a.edges, b.edges)
    _check_wellformed(a)


@pytest.mark.parametrize("name", ["nested", "distance", "directed-pair"])
def test_p_zero_gives_no_edges(name):
    params = P3.with_(p=0.0)
    g = sample_open_graph(Box(12, 2), ModelKind.parse(name, P3), params, 1)
    assert g.n_open_edges == 0


def test_long_range_constant_vanishes_with_p():
    from nestedsir.netmodels import InvalidParameter
    with pytest.raises(InvalidParameter):
        ModelKind.parse("long-range", P3.with_(p=0.0))


def test_full_channels_open_everything():
    params = Params(2, 2, 1.0, 1.0, 1.0)
    g = sample_open_graph(Box(6, 2), ModelKind.nested(), params, 0)
    assert g.n_open_edges == 36 * 35 // 2


@pytest.mark.parametrize("name", MODELS)
def test_batch_path_is_bit_identical(name):
    box = Box(3, 2)
    model = ModelKind.parse(name, P)
    seeds = rng.child_seed(9, np.arange(40))
    a, b = all_pairs(box)
    mask = batch_open_edges(box, model, P, seeds)
    for s, row in zip(seeds, mask):
        g = sample_open_graph(box, model, P, int(s))
        got = {(int(x), int(y)) for x, y, m in zip(a, b, row) if m}
        assert got == g.edge_set()


def test_nested_edges_lie_in_connectivity_graph():
    params = Params(2, 2, 1.7, 0.6, 0.7)
    g = sample_open_graph(Box(16, 2), ModelKind.nested(), params, 3)
    coords = g.box.coords()
    for a, b in g.edges:
        assert nested_edge_exists(tuple(coords[a]), tuple(coords[b]), g.heights, params)


def test_distance_edges_respect_gate():
    g = sample_open_graph(Box(16, 2), ModelKind.distance(), P3, 3)
    coords, H = g.box.coords(), g.heights.flat
    for a, b in g.edges:
        k1 = k1_delta(tuple(coords[a]), tuple(coords[b]), 2, P3.delta)
        assert min(H[a], H[b]) >= k1


def test_yukich_edges_match_predicate_exhaustively():
    box = Box(10, 2)
    model = ModelKind.yukich(1.0, 1.0)
    g = sample_open_graph(box, model, P, 12)
    U = g.heights.marks.reshape(-1)
    coords = box.coords()
    a, b = all_pairs(box)
    d = np.sqrt(((coords[a] - coords[b]) ** 2).sum(axis=1))
    expect = d <= np.minimum(1 / U[a], 1 / U[b])
    assert {(int(x), int(y)) for x, y in zip(a[expect], b[expect])} == g.edge_set()


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(["nested", "distance", "directed-pair", "long-range"]),
       st.floats(1e-3, 1.0), st.floats(1e-3, 1.0), st.integers(0, 2**40))
def test_monotone_coupling_in_p(name, p1, p2, seed):
    lo, hi = sorted((p1, p2))
    base = Params(2, 2, 2.0, 0.3, lo)
    box = Box(8, 2)
    # the long-range constant beta' grows linearly with p
    small = sample_open_graph(box, ModelKind.parse(name, base), base, seed).edge_set()
    big = base.with_(p=hi)
    large = sample_open_graph(box, ModelKind.parse(name, big), big, seed).edge_set()
    assert small <= large


@settings(max_examples=25, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.integers(0, 2**40))
def test_nested_monotone_in_rho(r1, r2, seed):
    lo, hi = sorted((r1, r2))
    base = Params(2, 2, 2.0, lo, 0.4)
    box = Box(8, 2)
    small = sample_open_graph(box, ModelKind.nested(), base, seed).edge_set()
    large = sample_open_graph(box, ModelKind.nested(), base.with_(rho=hi), seed).edge_set()
    assert small <= large


def _edge_freq(box, model, params, u, v, n, seed=0, chunk=200_000):
    a, b = all_pairs(box)
    iu, iv = sorted((int(box.index(u)), int(box.index(v))))
    col = np.flatnonzero((a == iu) & (b == iv))[0]
    seeds = rng.child_seed(seed, np.arange(n))
    hits = 0
    for i in range(0, n, chunk):
        hits += int(batch_open_edges(box, model, params, seeds[i:i + chunk])[:, col].sum())
    return hits / n


def test_nested_edge_frequency_matches_series():
    box = Box(2, 2)
    n = 1_000_000
    f = _edge_freq(box, ModelKind.nested(), P, (0, 0), (1, 1), n)
    ex = exact_edge_prob((0, 0), (1, 1), P)
    assert abs(f - ex) < 3 * math.sqrt(ex * (1 - ex) / n)
    # connectivity graph only: all channels certain
    conn = Params(2, 2, 2.0, 1.0, 1.0)
    assert exact_edge_prob((0, 0), (1, 1), conn) == pytest.approx(0.25)
    f = _edge_freq(box, ModelKind.nested(), conn, (0, 0), (1, 1), n, seed=1)
    assert abs(f - 0.25) < 3 * math.sqrt(0.25 * 0.75 / n)


def test_nearest_neighbour_edge_frequency():
    box = Box(4, 2)
    n = 200_000
    ex = exact_edge_prob((1, 1), (1, 2), P)
    f = _edge_freq(box, ModelKind.nested(), P, (1, 1), (1, 2), n)
    assert abs(f - ex) < 3 * math.sqrt(ex * (1 - ex) / n)
    assert community_level((1, 1), (1, 2), 2) == 2


def test_yukich_edge_frequency():
    box = Box(4, 2)
    n = 200_000
    model = ModelKind.yukich(1.0, 1.0)
    f = _edge_freq(box, model, P, (0, 0), (2, 1), n)
    ex = yukich_edge_prob(math.sqrt(5), 1.0, 1.0)
    assert abs(f - ex) < 3 * math.sqrt(ex * (1 - ex) / n)


@pytest.mark.parametrize("name", ["directed-pair", "long-range"])
def test_class_sampler_matches_pair_law(name):
    # per displacement class, open counts are binomial(count, q)
    box = Box(7, 2)
    model = ModelKind.parse(name, P3)
    w, counts = half_displacements(7, 2)
    q = independent_edge_probs(model, P3, w)
    coords = box.coords()
    n = 400
    tot = np.zeros(len(w))
    index = {tuple(x): i for i, x in enumerate(w.tolist())}
    for s in range(n):
        g = sample_open_graph(box, model, P3, s, method="classes")
        disp = coords[g.edges[:, 1]] - coords[g.edges[:, 0]]
        for x in disp.tolist():
            tot[index[tuple(x)]] += 1
    mean = counts * q * n
    sd = np.sqrt(counts * q * (1 - q) * n)
    z = (tot - mean) / np.where(sd > 0, sd, 1)
    assert np.all(np.abs(z) < 4.5)
    # summed over classes
    assert abs(tot.sum() - mean.sum()) < 4 * math.sqrt((sd ** 2).sum())


def test_memory_guard():
    with pytest.raises(MemoryGuardError):
        sample_open_graph(Box(64, 2), ModelKind.nested(), Params(2, 2, 1.0, 0.5, 0.5), 0,
                          max_candidates=1000)
    with pytest.raises(MemoryGuardError):
        sample_open_graph(Box(64, 2), ModelKind.long_range(5.0, 2.5), P3, 0,
                          method="classes", max_edges=100)


def test_write_edges(tmp_path):
    g = sample_open_graph(Box(5, 2), ModelKind.nested(), P, 2)
    g.write_edges(tmp_path / "e.txt")
    lines = (tmp_path / "e.txt").read_text().splitlines()
    assert lines[0] == "u_coords v_coords model"
    assert len(lines) == g.n_open_edges + 1
    u, v, m = lines[1].split()
    assert m == "nested" and len(u.split(",")) == 2


def test_huge_alpha_reduces_to_bond_percolation():
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    from nestedsir.lattice import nearest_neighbour_pairs
    from nestedsir.percolation.clusters import clusters

    params = Params(2, 2, 1e6, 0.5, 0.5)
    box = Box(32, 2)
    nn = nearest_neighbour_pairs(box)
    hv = rng.hash_coords(box.coords())
    checked = 0
    for seed in range(20):
        g = sample_open_graph(box, ModelKind.nested(), params, seed)
        if np.any(g.heights.flat > 0):
            continue
        # plain bond percolation on the nearest-neighbour uniforms
        u = rng.pair_uniform(seed, rng.PAIR_NESTED, hv[nn[:, 0]], hv[nn[:, 1]])
        e = nn[u <= params.p]
        A = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(box.n_vertices,) * 2)
        _, lab = connected_components(A, directed=False)
        assert g.edge_set() == set(map(tuple, e.tolist()))
        assert sorted(clusters(g).sizes.tolist()) == sorted(np.bincount(lab).tolist())
        checked += 1
    assert checked >= 15
