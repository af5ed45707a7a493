"""Geometry of Z^d with nested hypercubic blocks.

Level-k blocks are the cubes ``z^k i_j <= v_j <= (i_j + 1) z^k - 1``.  Block
indices use floor division toward minus infinity, so a block never
straddles a coordinate hyperplane: vertices in different orthants share no
block at any level.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

INFINITE = math.inf
"""Community level of a pair that shares no block (different orthants)."""

Vertex = tuple


@dataclass(frozen=True)
class BlockId:
    level: int
    index: tuple

    def __post_init__(self):
        if self.level < 0:
            raise ValueError("block level must be nonnegative")


@dataclass(frozen=True)
class Box:
    """The window ``[0, side)^dim`` of the positive orthant."""

    side: int
    dim: int

    def __post_init__(self):
        if self.side < 1 or self.dim < 1:
            raise ValueError("box side and dimension must be positive")

    @property
    def shape(self) -> tuple:
        return (self.side,) * self.dim

    @property
    def n_vertices(self) -> int:
        return self.side ** self.dim

    def coords(self) -> np.ndarray:
        """All vertex coordinates, shape ``(n_vertices, dim)``, C order."""
        return _box_coords(self.side, self.dim)

    def index(self, coords) -> np.ndarray:
        coords = np.asarray(coords, dtype=np.int64)
        return np.ravel_multi_index(tuple(np.moveaxis(coords, -1, 0)), self.shape)

    def vertex(self, index: int) -> tuple:
        return tuple(int(c) for c in np.unravel_index(int(index), self.shape))

    def contains(self, v: Sequence[int]) -> bool:
        return len(v) == self.dim and all(0 <= c < self.side for c in v)

    def top_level(self, z: int) -> int:
        """Smallest k such that the whole box lies in the level-k block at 0."""
        k = 0
        while z ** k < self.side:
            k += 1
        return k


@lru_cache(maxsize=16)
def _box_coords(side: int, dim: int) -> np.ndarray:
    grids = np.indices((side,) * dim, dtype=np.int64)
    out = grids.reshape(dim, -1).T.copy()
    out.setflags(write=False)
    return out


def _check_z(z: int):
    if int(z) != z or z < 2:
        raise ValueError(f"z must be an integer >= 2, got {z}")


def block_index(v: Sequence[int], k: int, z: int) -> BlockId:
    """The level-``k`` block containing ``v``."""
    _check_z(z)
    if k < 0:
        raise ValueError("level must be nonnegative")
    size = z ** k
    return BlockId(k, tuple(int(c) // size for c in v))


def block_ids(coords, k: int, z: int) -> np.ndarray:
    """Vectorised block indices, ``coords`` of shape ``(..., d)``."""
    return np.floor_divide(np.asarray(coords, dtype=np.int64), z ** k)


def community_level(u: Sequence[int], v: Sequence[int], z: int):
    """Smallest level at which ``u`` and ``v`` share a block.

    Returns :data:`INFINITE` when the two vertices lie in different orthants.
    """
    _check_z(z)
    if len(u) != len(v):
        raise ValueError("dimension mismatch")
    if tuple(u) == tuple(v):
        raise ValueError("community_level needs distinct vertices")
    level = 0
    for a, b in zip(u, v):
        a, b = int(a), int(b)
        if (a < 0) != (b < 0):
            return INFINITE
        k, size = 0, 1
        while a // size != b // size:
            k += 1
            size *= z
        level = max(level, k)
    return level


def community_levels(cu, cv, z: int) -> np.ndarray:
    """Vectorised :func:`community_level`; float array, ``inf`` across orthants.

    Equal pairs get level 0.
    """
    cu = np.asarray(cu, dtype=np.int64)
    cv = np.asarray(cv, dtype=np.int64)
    cross = np.any((cu < 0) != (cv < 0), axis=-1)
    out = np.zeros(cu.shape[:-1], dtype=np.int64)
    size = 1
    pending = np.any(cu != cv, axis=-1) & ~cross
    k = 0
    while pending.any():
        k += 1
        size *= z
        same = np.all(cu // size == cv // size, axis=-1)
        newly = pending & same
        out[newly] = k
        pending &= ~same
    res = out.astype(np.float64)
    res[cross] = np.inf
    return res


def euclid_dist(u: Sequence[int], v: Sequence[int]) -> float:
    if len(u) != len(v):
        raise ValueError("dimension mismatch")
    return math.sqrt(sum((int(a) - int(b)) ** 2 for a, b in zip(u, v)))


def _delta_sq(delta: float) -> float:
    # sqrt(d)**2 is not exactly d in floating point; snap near-integers
    d2 = float(delta) ** 2
    r = round(d2)
    if r > 0 and abs(d2 - r) <= 1e-12 * r:
        return float(r)
    return d2


def k1_from_sqdist(r2, z: int, delta: float) -> np.ndarray:
    """``ceil(log_z(sqrt(r2) / delta))`` clamped at 0, for integer squared distances.

    Uses ``r2 <= delta^2 z^(2k)`` so lattice distances are classified without
    rounding error when ``delta^2`` is an integer.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    r2 = np.asarray(r2, dtype=np.float64)
    d2 = _delta_sq(delta)
    out = np.zeros(r2.shape, dtype=np.int64)
    thresh = d2
    pending = r2 > thresh
    while pending.any():
        out[pending] += 1
        thresh *= z * z
        pending &= r2 > thresh
    return out


def k1_delta(u: Sequence[int], v: Sequence[int], z: int, delta: float) -> int:
    """Smallest level ``k >= 0`` with ``d(u, v) <= delta z^k``."""
    _check_z(z)
    if tuple(u) == tuple(v):
        raise ValueError("k1_delta needs distinct vertices")
    r2 = sum((int(a) - int(b)) ** 2 for a, b in zip(u, v))
    return int(k1_from_sqdist(r2, z, delta))


def nearest_neighbour_pairs(box: Box) -> np.ndarray:
    """All nearest-neighbour pairs of the box as flat indices ``(m, 2)``, ``a < b``."""
    return _nn_pairs(box.side, box.dim)


@lru_cache(maxsize=16)
def _nn_pairs(side: int, dim: int) -> np.ndarray:
    idx = np.arange(side ** dim, dtype=np.int64).reshape((side,) * dim)
    parts = []
    for ax in range(dim):
        lo = np.take(idx, np.arange(side - 1), axis=ax).ravel()
        hi = np.take(idx, np.arange(1, side), axis=ax).ravel()
        parts.append(np.stack([lo, hi], axis=1))
    out = np.concatenate(parts) if parts else np.empty((0, 2), dtype=np.int64)
    out.setflags(write=False)
    return out
