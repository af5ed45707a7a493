"""Community heights ``X_v`` with ``P(X_v >= k) = alpha^-k``.

Heights come from an exact inverse-CDF map applied to a keyed uniform
``u_v``.  The same uniform doubles as the vertex mark of the uniform-mark
(Yukich) network, which realises the coupling ``u_v^-s >= z^X_v`` with
``s = 1 / log_z(alpha)`` deterministically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rng as _rng
from .lattice import Box


def _check_alpha(alpha: float):
    if not alpha >= 1:
        raise ValueError(f"alpha must be >= 1, got {alpha}")


def height_quantile(u, alpha: float) -> np.ndarray:
    """Inverse CDF: the largest ``k`` with ``u <= alpha^-k``.

    ``u`` lies in (0, 1].  The result is a float array holding integers, or
    ``inf`` everywhere when ``alpha == 1``.  ``X(u) >= k`` holds exactly when
    ``u <= alpha**-k`` in floating point.
    """
    _check_alpha(alpha)
    u = np.asarray(u, dtype=np.float64)
    if alpha == 1:
        return np.full(u.shape, np.inf)
    k = np.floor(np.log(u) / -math.log(alpha))
    k = np.maximum(k, 0.0)
    # one-step correction against rounding in the logarithm
    k = np.where(np.power(alpha, -k) < u, k - 1, k)
    k = np.where(np.power(alpha, -(k + 1)) >= u, k + 1, k)
    return k


def sample_height(alpha: float, rng: np.random.Generator):
    """One height; ``math.inf`` when ``alpha == 1``."""
    _check_alpha(alpha)
    if alpha == 1:
        return math.inf
    u = 1.0 - rng.random()  # (0, 1]
    return int(height_quantile(u, alpha))


def group_membership(alpha: float) -> float:
    """Mean number of communities per individual, ``sum_k>=1 alpha^-k``."""
    _check_alpha(alpha)
    return math.inf if alpha == 1 else 1.0 / (alpha - 1.0)


@dataclass
class HeightField:
    box: Box
    alpha: float
    seed: int
    heights: np.ndarray = field(repr=False)
    marks: np.ndarray = field(repr=False)

    def __getitem__(self, v) -> float:
        return float(self.heights[tuple(v)])

    @property
    def flat(self) -> np.ndarray:
        return self.heights.reshape(-1)

    @property
    def infinite(self) -> bool:
        return self.alpha == 1


def vertex_marks(coords, seed: int) -> np.ndarray:
    """Keyed uniform marks in (0, 1] for an array of coordinates ``(..., d)``."""
    return _rng.uniform(seed, _rng.HEIGHT, _rng.hash_coords(coords))


def sample_field(box: Box, alpha: float, seed: int) -> HeightField:
    """I.i.d. heights on ``box``; each draw depends only on (seed, coordinates)."""
    _check_alpha(alpha)
    marks = vertex_marks(box.coords(), seed).reshape(box.shape)
    return HeightField(box, float(alpha), int(seed), height_quantile(marks, alpha), marks)


@dataclass(frozen=True)
class CoupledMark:
    u: float
    x: int


def coupled_sample(alpha: float, z: int, rng: np.random.Generator) -> CoupledMark:
    """Uniform mark and height drawn jointly so that ``u^-s >= z^x``.

    The pair has law ``nu(A, k) = P(U in A, alpha^-(k+1) < U <= alpha^-k)``.
    """
    if not alpha > 1:
        raise ValueError("coupling needs alpha > 1 (finite heights)")
    u = 1.0 - rng.random()
    return CoupledMark(float(u), int(height_quantile(u, alpha)))


def coupled_samples(alpha: float, n: int, rng: np.random.Generator):
    """Vectorised :func:`coupled_sample`: arrays ``(u, x)``."""
    if not alpha > 1:
        raise ValueError("coupling needs alpha > 1 (finite heights)")
    u = 1.0 - rng.random(n)
    return u, height_quantile(u, alpha).astype(np.int64)


def coupling_exponent(alpha: float, z: int) -> float:
    """``s = 1 / log_z(alpha)``."""
    return math.log(z) / math.log(alpha)


def write_field(path, hf: HeightField, z: int) -> None:
    """Columnar text: header ``d z alpha seed L`` then ``x1 .. xd height`` rows."""
    coords = hf.box.coords()
    with open(path, "w") as fh:
        fh.write(f"{hf.box.dim} {z} {hf.alpha!r} {hf.seed} {hf.box.side}\n")
        for c, h in zip(coords, hf.flat):
            tok = "inf" if math.isinf(h) else str(int(h))
            fh.write(" ".join(str(int(x)) for x in c) + f" {tok}\n")


def read_field(path):
    """Inverse of :func:`write_field`; returns ``(HeightField, z)``."""
    lines = Path(path).read_text().splitlines()
    d, z, alpha, seed, side = lines[0].split()
    box = Box(int(side), int(d))
    heights = np.empty(box.n_vertices)
    for line in lines[1:]:
        parts = line.split()
        idx = box.index([int(x) for x in parts[:-1]])
        heights[idx] = np.inf if parts[-1] == "inf" else float(parts[-1])
    hf = sample_field(box, float(alpha), int(seed))
    if not np.array_equal(hf.flat, heights):
        # file edited by hand: keep its heights, drop the marks
        hf = HeightField(box, float(alpha), int(seed), heights.reshape(box.shape),
                         np.full(box.shape, np.nan))
    return hf, int(z)
