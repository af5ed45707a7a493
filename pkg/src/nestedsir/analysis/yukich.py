"""Degree tail of the uniform-mark (Yukich) network against its limit constant."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit

from .. import rng as _rng
from ..heights import vertex_marks
from ..lattice import Box
from .tail import unit_ball_volume


def yukich_constant(s: float, delta: float, d: int) -> float:
    """``(delta^d s d omega_d / (s d - 1))^(1 / (s d - 1))``."""
    sd1 = s * d - 1
    if sd1 <= 0:
        raise ValueError("needs s > 1/d")
    return (delta ** d * s * d * unit_ball_volume(d) / sd1) ** (1.0 / sd1)


@njit(cache=True)
def _degrees_2d(U, s, delta, cap, margin):
    """Degrees of the centres at least ``margin`` from the boundary.

    ``v`` and ``u`` are joined when ``|u - v| <= delta min(U_u^-s, U_v^-s)``;
    centres whose own radius exceeds ``cap`` get degree -1 (saturated).
    """
    L = U.shape[0]
    m = L - 2 * margin
    out = np.empty(m * m, dtype=np.int64)
    idx = 0
    for i in range(margin, L - margin):
        for j in range(margin, L - margin):
            r = delta * U[i, j] ** (-s)
            if r > cap:
                out[idx] = -1
                idx += 1
                continue
            R = int(math.floor(r))
            cnt = 0
            r2 = r * r
            for a in range(-R, R + 1):
                for b in range(-R, R + 1):
                    if a == 0 and b == 0:
                        continue
                    dd = a * a + b * b
                    if dd > r2:
                        continue
                    ru = delta * U[i + a, j + b] ** (-s)
                    if math.sqrt(dd) <= ru and math.sqrt(dd) <= r:
                        cnt += 1
            out[idx] = cnt
            idx += 1
    return out


@dataclass(frozen=True)
class YukichCheck:
    t: float
    empirical: float
    predicted: float
    ratio: float
    n_centres: int
    passed: bool


def yukich_limit_check(s: float, delta: float, L: int, n_reps: int = 1, seed: int = 0,
                       t_values=(50, 100), d: int = 2, cap: float = 48.0,
                       bounds=(0.5, 2.0)):
    """``t^(1/(sd-1)) P(D >= t)`` against the limit constant, in ``d = 2``.

    Centres are the vertices at distance at least ``cap`` from the boundary,
    so every counted neighbour lies in the box.  A centre whose radius
    exceeds ``cap`` has degree far above every ``t`` in use (about
    ``2 pi cap`` for ``s = 1``) and is counted as exceeding it.
    """
    if d != 2:
        raise NotImplementedError("the degree counter is written for d = 2")
    if s * d - 1 <= 1e-9:
        warnings.warn("s d -> 1: the limit constant diverges; check skipped")
        return []
    predicted = yukich_constant(s, delta, d)
    margin = int(math.ceil(cap)) + 1
    if L <= 2 * margin:
        raise ValueError(f"box side {L} too small for radius cap {cap}")
    degs = []
    box = Box(L, d)
    for r in range(n_reps):
        U = vertex_marks(box.coords(), int(_rng.child_seed(seed, r))).reshape(L, L)
        degs.append(_degrees_2d(U, s, delta, cap, margin))
    D = np.concatenate(degs)
    out = []
    for t in t_values:
        ccdf = float(np.mean((D >= t) | (D < 0)))
        emp = t ** (1.0 / (s * d - 1)) * ccdf
        ratio = emp / predicted
        out.append(YukichCheck(float(t), emp, predicted, ratio, len(D),
                               bool(bounds[0] <= ratio <= bounds[1])))
    return out
