"""Sampling open-edge realisations of the five edge models on a finite box.

Nested, distance and Yukich graphs draw one keyed uniform per candidate pair
and open the pair when it falls below the pair's open probability.  All
channels of a pair act only through their union, so one uniform per pair has
the right law, and sharing uniforms across parameter values gives the
monotone coupling in ``p``, ``rho`` and the heights.

The directed-pair and long-range models have independent edges whose law
depends only on the displacement.  Small boxes use keyed per-pair uniforms;
larger ones are sampled class by class (binomial count, then a uniform subset
of slots) from a Philox stream.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .. import rng as _rng
from ..heights import HeightField, sample_field
from ..lattice import Box, community_levels, k1_from_sqdist, nearest_neighbour_pairs
from ..netmodels import InvalidParameter, Kind, ModelKind, Params, clamps, nested_open_probs

DEFAULT_MAX_CANDIDATES = 30_000_000
DEFAULT_MAX_EDGES = 20_000_000


class MemoryGuardError(RuntimeError):
    """The requested box would need more memory than the configured cap."""


@dataclass
class OpenGraph:
    box: Box
    model: ModelKind
    params: Params
    seed: int
    edges: np.ndarray = field(repr=False)  # (m, 2) flat indices, a < b, sorted
    heights: Optional[HeightField] = field(default=None, repr=False)

    @property
    def n_vertices(self) -> int:
        return self.box.n_vertices

    @property
    def n_open_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def csr(self):
        """``(indptr, indices)`` with sorted neighbour lists."""
        n = self.n_vertices
        a, b = self.edges[:, 0], self.edges[:, 1]
        src = np.concatenate([a, b])
        dst = np.concatenate([b, a])
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        indptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
        return indptr, dst.astype(np.int64)

    def neighbors(self, v) -> np.ndarray:
        i = v if np.isscalar(v) else int(self.box.index(v))
        indptr, indices = self.csr
        return indices[indptr[i]:indptr[i + 1]]

    def edge_set(self) -> set:
        return set(map(tuple, self.edges.tolist()))

    def write_edges(self, path) -> None:
        """Rows ``u_coords v_coords model``; coordinates comma-joined."""
        coords = self.box.coords()
        with open(path, "w") as fh:
            fh.write("u_coords v_coords model\n")
            for a, b in self.edges:
                cu = ",".join(map(str, coords[a]))
                cv = ",".join(map(str, coords[b]))
                fh.write(f"{cu} {cv} {self.model.kind.value}\n")


def _finish(pairs_a, pairs_b, n) -> np.ndarray:
    if not pairs_a:
        return np.empty((0, 2), dtype=np.int64)
    a = np.concatenate(pairs_a)
    b = np.concatenate(pairs_b)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    key = np.unique(lo * n + hi)
    return np.stack([key // n, key % n], axis=1)


def _is_nn_pair(ca, cb) -> np.ndarray:
    return np.abs(ca - cb).sum(axis=-1) == 1


# -- nested ------------------------------------------------------------------

def _block_pairs(members: np.ndarray, block: np.ndarray):
    """All pairs ``(a, b)``, ``a < b``, of members sharing a block id."""
    order = np.argsort(block, kind="stable")
    members, block = members[order], block[order]
    _, starts, sizes = np.unique(block, return_index=True, return_counts=True)
    out_a, out_b = [], []
    for g in np.unique(sizes[sizes >= 2]):
        st = starts[sizes == g]
        mat = members[st[:, None] + np.arange(g)]
        iu, ju = np.triu_indices(g, 1)
        out_a.append(mat[:, iu].ravel())
        out_b.append(mat[:, ju].ravel())
    if not out_a:
        e = np.empty(0, dtype=np.int64)
        return e, e
    return np.concatenate(out_a), np.concatenate(out_b)


def _linear_block(coords, size, side):
    nb = -(-side // size)
    ids = coords // size
    return np.ravel_multi_index(tuple(ids.T), (nb,) * coords.shape[1])


def nested_candidate_count(hf: HeightField, z: int) -> int:
    """Number of community pairs the nested sampler would enumerate."""
    box = hf.box
    coords = box.coords()
    H = hf.flat
    total = 0
    for k in range(1, box.top_level(z) + 1):
        act = H >= k
        if act.sum() < 2:
            break
        c = np.bincount(_linear_block(coords[act], z ** k, box.side))
        total += int((c * (c - 1) // 2).sum())
    return total


def _sample_nested(box, params, seed, max_candidates):
    hf = sample_field(box, params.alpha, seed)
    z, n = params.z, box.n_vertices
    n_cand = nested_candidate_count(hf, z)
    if n_cand > max_candidates:
        raise MemoryGuardError(
            f"nested graph on L={box.side}, d={box.dim}, alpha={params.alpha} needs "
            f"{n_cand} candidate pairs (cap {max_candidates}); use a smaller box or "
            f"raise max_candidates")
    coords = box.coords()
    H = hf.flat
    hv = _rng.hash_coords(coords)
    idx = np.arange(n, dtype=np.int64)
    out_a, out_b = [], []
    p, rho = params.p, params.rho
    if p > 0:
        for k in range(1, box.top_level(z) + 1):
            act = idx[H >= k]
            if len(act) < 2:
                break
            a, b = _block_pairs(act, _linear_block(coords[act], z ** k, box.side))
            if not len(a):
                continue
            # community level exactly k: different sub-blocks one level down
            fine = z ** (k - 1)
            keep = np.any(coords[a] // fine != coords[b] // fine, axis=1)
            keep &= ~_is_nn_pair(coords[a], coords[b])
            a, b = a[keep], b[keep]
            prob = nested_open_probs(np.full(len(a), float(k)), np.minimum(H[a], H[b]),
                                     np.zeros(len(a), bool), p, rho)
            u = _rng.pair_uniform(seed, _rng.PAIR_NESTED, hv[a], hv[b])
            hit = u <= prob
            out_a.append(a[hit])
            out_b.append(b[hit])
        nn = nearest_neighbour_pairs(box)
        a, b = nn[:, 0], nn[:, 1]
        c = community_levels(coords[a], coords[b], z)
        prob = nested_open_probs(c, np.minimum(H[a], H[b]), np.ones(len(a), bool), p, rho)
        u = _rng.pair_uniform(seed, _rng.PAIR_NESTED, hv[a], hv[b])
        hit = u <= prob
        out_a.append(a[hit])
        out_b.append(b[hit])
    return _finish(out_a, out_b, n), hf


# -- distance (P') -----------------------------------------------------------

def distance_channel_prob(k1, p: float, rho: float) -> np.ndarray:
    """``min(1, p rho^k1 / (1 - rho))``; clamps are counted."""
    if rho >= 1:
        raise InvalidParameter("rho = 1 is not allowed for the distance model")
    q = p * np.power(rho, np.asarray(k1, dtype=np.float64)) / (1.0 - rho)
    over = q > 1
    if np.any(over):
        clamps.add(int(np.sum(over)))
    return np.minimum(q, 1.0)


def _pairs_within(points: np.ndarray, r: float) -> np.ndarray:
    if len(points) < 2:
        return np.empty((0, 2), dtype=np.int64)
    tree = cKDTree(points)
    return tree.query_pairs(r * (1 + 1e-9) + 1e-9, output_type="ndarray")


def _sample_distance(box, model, params, seed, max_candidates):
    hf = sample_field(box, params.alpha, seed)
    z, n = params.z, box.n_vertices
    delta = model.delta_for(params)
    coords = box.coords()
    H = hf.flat
    hv = _rng.hash_coords(coords)
    idx = np.arange(n, dtype=np.int64)
    diam2 = box.dim * (box.side - 1) ** 2
    out_a, out_b = [], []
    if params.p > 0:
        k = 0
        while True:
            act = idx[H >= k]
            if len(act) < 2:
                break
            r = delta * z ** k
            # expected candidates if the active set were spread uniformly
            frac = min(1.0, (2 * r + 1) ** box.dim / n)
            if len(act) ** 2 * frac / 2 > max_candidates:
                raise MemoryGuardError(
                    f"distance graph level {k}: about {len(act) ** 2 * frac / 2:.3g} "
                    f"candidate pairs (cap {max_candidates})")
            pr = _pairs_within(coords[act].astype(np.float64), r)
            if len(pr):
                a, b = act[pr[:, 0]], act[pr[:, 1]]
                r2 = ((coords[a] - coords[b]) ** 2).sum(axis=1)
                keep = k1_from_sqdist(r2, z, delta) == k
                a, b = a[keep], b[keep]
                q = distance_channel_prob(np.full(len(a), k), params.p, params.rho)
                u = _rng.pair_uniform(seed, _rng.PAIR_DISTANCE, hv[a], hv[b])
                hit = u <= q
                out_a.append(a[hit])
                out_b.append(b[hit])
            if (delta * z ** k) ** 2 >= diam2:
                break
            k += 1
    return _finish(out_a, out_b, n), hf


# -- Yukich ------------------------------------------------------------------

def yukich_radii(marks, s: float, delta: float) -> np.ndarray:
    return delta * np.power(marks, -s)


def _sample_yukich(box, model, params, seed, max_candidates):
    hf = sample_field(box, params.alpha, seed)
    n = box.n_vertices
    coords = box.coords()
    U = hf.marks.reshape(-1)
    s, delta = model.s, model.delta_for(params)
    rad = yukich_radii(U, s, delta)
    idx = np.arange(n, dtype=np.int64)
    diam = math.sqrt(box.dim) * (box.side - 1)
    out_a, out_b = [], []
    lo = -1.0
    R = delta
    while True:
        act = idx[rad > lo] if lo >= 0 else idx
        if len(act) < 2:
            break
        frac = min(1.0, (2 * R + 1) ** box.dim / n)
        if len(act) ** 2 * frac / 2 > max_candidates:
            raise MemoryGuardError(
                f"Yukich graph band ({lo:.3g}, {R:.3g}]: too many candidate pairs "
                f"(cap {max_candidates})")
        pr = _pairs_within(coords[act].astype(np.float64), R)
        if len(pr):
            a, b = act[pr[:, 0]], act[pr[:, 1]]
            dist = np.sqrt(((coords[a] - coords[b]) ** 2).sum(axis=1).astype(np.float64))
            ok = (dist > lo) & (dist <= R)
            ok &= dist <= delta * np.minimum(U[a] ** -s, U[b] ** -s)
            out_a.append(a[ok])
            out_b.append(b[ok])
        if R >= diam:
            break
        lo, R = R, 2 * R
    return _finish(out_a, out_b, n), hf


# -- independent edges (P'', Q) ----------------------------------------------

@lru_cache(maxsize=8)
def half_displacements(side: int, dim: int):
    """Displacements ``w != 0`` with first nonzero coordinate positive, and
    the number of box pairs realising each."""
    rng_ = np.arange(-(side - 1), side)
    grids = np.stack(np.meshgrid(*([rng_] * dim), indexing="ij"), -1).reshape(-1, dim)
    nz = grids != 0
    first = np.argmax(nz, axis=1)
    lead = grids[np.arange(len(grids)), first]
    keep = nz.any(axis=1) & (lead > 0)
    w = grids[keep]
    counts = np.prod(side - np.abs(w), axis=1)
    w.setflags(write=False)
    counts.setflags(write=False)
    return w, counts


def independent_edge_probs(model: ModelKind, params: Params, w: np.ndarray) -> np.ndarray:
    r2 = (w.astype(np.int64) ** 2).sum(axis=1)
    if model.kind is Kind.LONG_RANGE_Q:
        q = model.beta / np.power(r2.astype(np.float64), model.s / 2)
        over = q > 1
        if np.any(over):
            clamps.add(int(np.sum(over)))
        return np.minimum(q, 1.0)
    if model.kind is Kind.DIRECTED_PAIR_P2:
        k1 = k1_from_sqdist(r2, params.z, model.delta_for(params))
        return distance_channel_prob(k1, params.p, params.rho) * np.power(
            model.beta, -2.0 * k1)
    raise ValueError(f"{model.kind.value} edges are not independent")


def _choose_slots(gen, counts, n_pick):
    """Uniform subsets of ``range(counts[i])`` of size ``n_pick[i]``, all ``i``.

    Returns ``(class_index, slot)`` arrays.
    """
    cls_out, slot_out = [], []
    dense = n_pick * 4 > counts
    for i in np.flatnonzero(dense & (n_pick > 0)):
        cls_out.append(np.full(n_pick[i], i))
        slot_out.append(gen.permutation(counts[i])[:n_pick[i]])
    sparse = np.flatnonzero(~dense & (n_pick > 0))
    if len(sparse):
        cls_s = np.repeat(sparse, n_pick[sparse])
        slots = gen.integers(0, counts[cls_s])
        while True:
            key = np.stack([cls_s, slots], 1)
            _, first = np.unique(key, axis=0, return_index=True)
            if len(first) == len(cls_s):
                break
            dup = np.ones(len(cls_s), bool)
            dup[first] = False
            slots[dup] = gen.integers(0, counts[cls_s[dup]])
        cls_out.append(cls_s)
        slot_out.append(slots)
    if not cls_out:
        e = np.empty(0, dtype=np.int64)
        return e, e
    return np.concatenate(cls_out), np.concatenate(slot_out)


def _sample_independent_pairs(box, model, params, seed):
    coords = box.coords()
    a, b = all_pairs(box)
    q = independent_edge_probs(model, params, coords[b] - coords[a])
    hv = _rng.hash_coords(coords)
    u = _rng.pair_uniform(seed, _rng.LONGRANGE, hv[a], hv[b])
    hit = u <= q
    return np.stack([a[hit], b[hit]], axis=1), None


def _sample_independent(box, model, params, seed, max_edges):
    side, dim = box.side, box.dim
    w, counts = half_displacements(side, dim)
    q = independent_edge_probs(model, params, w)
    expected = float((counts * q).sum())
    if expected > max_edges:
        raise MemoryGuardError(
            f"{model.kind.value} graph on L={side}: {expected:.3g} expected open edges "
            f"(cap {max_edges})")
    gen = _rng.generator(seed, _rng.LONGRANGE, list(Kind).index(model.kind))
    n_pick = gen.binomial(counts, q)
    cls, slot = _choose_slots(gen, counts, n_pick)
    ww = w[cls]
    shape = side - np.abs(ww)
    start = np.empty_like(ww)
    rem = slot.copy()
    for ax in range(dim - 1, -1, -1):
        start[:, ax] = rem % shape[:, ax]
        rem //= shape[:, ax]
    start += np.maximum(0, -ww)
    a = box.index(start) if len(start) else np.empty(0, dtype=np.int64)
    b = box.index(start + ww) if len(start) else np.empty(0, dtype=np.int64)
    return _finish([np.asarray(a)], [np.asarray(b)], box.n_vertices), None


SMALL_BOX_PAIRS = 50_000


def sample_open_graph(box: Box, model: ModelKind, params: Params, seed: int,
                      max_candidates: int = DEFAULT_MAX_CANDIDATES,
                      max_edges: int = DEFAULT_MAX_EDGES,
                      method: Optional[str] = None) -> OpenGraph:
    """Open-edge realisation of ``model`` on ``box``; a pure function of its inputs.

    Independent-edge models use one keyed uniform per pair on small boxes
    (``method="pairs"``) and the displacement-class sampler otherwise
    (``method="classes"``); both have the same law.
    """
    if box.dim != params.d:
        raise InvalidParameter("box dimension differs from params.d")
    kind = model.kind
    if kind is Kind.NESTED:
        edges, hf = _sample_nested(box, params, seed, max_candidates)
    elif kind is Kind.DISTANCE_P1:
        edges, hf = _sample_distance(box, model, params, seed, max_candidates)
    elif kind is Kind.YUKICH:
        edges, hf = _sample_yukich(box, model, params, seed, max_candidates)
    else:
        n_pairs = box.n_vertices * (box.n_vertices - 1) // 2
        if method is None:
            method = "pairs" if n_pairs <= SMALL_BOX_PAIRS else "classes"
        if method == "pairs":
            edges, hf = _sample_independent_pairs(box, model, params, seed)
        elif method == "classes":
            edges, hf = _sample_independent(box, model, params, seed, max_edges)
        else:
            raise ValueError(f"unknown sampling method {method!r}")
    return OpenGraph(box, model, params, int(seed), edges, hf)


# -- many seeds at once on tiny boxes ----------------------------------------

def all_pairs(box: Box):
    iu, ju = np.triu_indices(box.n_vertices, 1)
    return iu.astype(np.int64), ju.astype(np.int64)


def batch_open_edges(box: Box, model: ModelKind, params: Params, seeds) -> np.ndarray:
    """Open indicators of every box pair (order of :func:`all_pairs`) for many seeds.

    Bit-identical to :func:`sample_open_graph` (keyed models, and the pair
    method of the independent models).  Meant for tiny boxes: memory is
    ``len(seeds) * pairs``.
    """
    seeds = np.asarray(seeds, dtype=np.int64)
    coords = box.coords()
    a, b = all_pairs(box)
    ca, cb = coords[a], coords[b]
    hv = _rng.hash_coords(coords)
    marks = _rng.uniform(seeds[:, None], _rng.HEIGHT, hv[None, :])
    from ..heights import height_quantile
    H = height_quantile(marks, params.alpha)
    kind = model.kind
    if kind is Kind.NESTED:
        c = community_levels(ca, cb, params.z)
        m = np.minimum(H[:, a], H[:, b])
        nn = _is_nn_pair(ca, cb)
        prob = nested_open_probs(np.broadcast_to(c, m.shape), m,
                                 np.broadcast_to(nn, m.shape), params.p, params.rho)
        if params.p == 0:
            prob = np.zeros_like(prob)
        u = _rng.pair_uniform(seeds[:, None], _rng.PAIR_NESTED, hv[a][None, :], hv[b][None, :])
        return u <= prob
    if kind is Kind.DISTANCE_P1:
        r2 = ((ca - cb) ** 2).sum(axis=1)
        k1 = k1_from_sqdist(r2, params.z, model.delta_for(params))
        q = distance_channel_prob(k1, params.p, params.rho)
        gate = np.minimum(H[:, a], H[:, b]) >= k1[None, :]
        if params.p == 0:
            return np.zeros(gate.shape, bool)
        u = _rng.pair_uniform(seeds[:, None], _rng.PAIR_DISTANCE, hv[a][None, :], hv[b][None, :])
        return gate & (u <= q[None, :])
    if kind is Kind.YUKICH:
        dist = np.sqrt(((ca - cb) ** 2).sum(axis=1).astype(np.float64))
        s, delta = model.s, model.delta_for(params)
        return dist[None, :] <= delta * np.minimum(marks[:, a] ** -s, marks[:, b] ** -s)
    if kind in (Kind.DIRECTED_PAIR_P2, Kind.LONG_RANGE_Q):
        q = independent_edge_probs(model, params, cb - ca)
        u = _rng.pair_uniform(seeds[:, None], _rng.LONGRANGE, hv[a][None, :], hv[b][None, :])
        return u <= q[None, :]
    raise ValueError(f"no batch sampler for {kind.value}")


def batch_connected(n_vertices: int, pairs, open_mask: np.ndarray) -> np.ndarray:
    """Reachability matrices ``(n_seeds, n, n)`` by repeated boolean squaring."""
    a, b = pairs
    n_s = open_mask.shape[0]
    R = np.zeros((n_s, n_vertices, n_vertices), dtype=np.float32)
    R[:, a, b] = open_mask
    R[:, b, a] = open_mask
    R[:, np.arange(n_vertices), np.arange(n_vertices)] = 1
    steps = max(1, math.ceil(math.log2(max(n_vertices, 2))))
    for _ in range(steps):
        R = (np.matmul(R, R) > 0).astype(np.float32)
    return R > 0
