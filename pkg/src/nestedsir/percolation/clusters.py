"""Connected components of open graphs by union-find."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .graph import OpenGraph


@njit(cache=True)
def _find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:  # path compression
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@njit(cache=True)
def union_find_roots(n, a, b):
    """Root label of every vertex after merging all edges ``(a[i], b[i])``."""
    parent = np.arange(n)
    size = np.ones(n, dtype=np.int64)
    for e in range(a.shape[0]):
        ra = _find(parent, a[e])
        rb = _find(parent, b[e])
        if ra == rb:
            continue
        if size[ra] < size[rb]:
            ra, rb = rb, ra
        parent[rb] = ra
        size[ra] += size[rb]
    out = np.empty(n, dtype=np.int64)
    for i in range(n):
        out[i] = _find(parent, i)
    return out


@dataclass
class ClusterStats:
    labels: np.ndarray = field(repr=False)  # compact cluster id per flat vertex
    sizes: np.ndarray = field(repr=False)   # size of cluster id
    origin_size: int
    crossing: bool
    origin_boundary: bool
    largest_fraction: float

    def cluster_of(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.labels == self.labels[i])


def components(n: int, edges: np.ndarray) -> np.ndarray:
    """Compact component labels ``0..k-1`` (ordered by smallest member)."""
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    roots = union_find_roots(n, edges[:, 0].copy(), edges[:, 1].copy())
    _, first, inv = np.unique(roots, return_index=True, return_inverse=True)
    # relabel so that cluster ids follow their smallest vertex
    rank = np.empty(len(first), dtype=np.int64)
    rank[np.argsort(first)] = np.arange(len(first))
    return rank[inv]


def clusters(g: OpenGraph) -> ClusterStats:
    box = g.box
    n = box.n_vertices
    labels = components(n, g.edges)
    sizes = np.bincount(labels)
    coords = box.coords()
    x1 = coords[:, 0]
    last = box.side - 1
    left = np.unique(labels[x1 == 0])
    right = np.unique(labels[x1 == last])
    crossing = bool(box.side >= 2 and np.intersect1d(left, right).size > 0)
    far = np.any(coords == last, axis=1)
    origin_boundary = bool(box.side >= 2 and np.any(labels[far] == labels[0]))
    return ClusterStats(labels, sizes, int(sizes[labels[0]]), crossing, origin_boundary,
                        float(sizes.max() / n))


def crossing_indicator(g: OpenGraph) -> bool:
    """Some cluster touches both faces ``x1 = 0`` and ``x1 = L - 1``."""
    return clusters(g).crossing
