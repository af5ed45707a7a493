"""Galton-Watson majorant of the long-range cluster and its certified root."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..netmodels import InvalidParameter, Params, longrange_params_from


@dataclass(frozen=True)
class GWBound:
    mean_offspring: float   # 2dp + beta' (shell sum + tail majorant)
    truncation_level: int   # sup-norm radius of the exact shell sum
    tail_bound: float       # beta' times the tail majorant
    shell_sum: float        # sum_{0 < |u|_inf <= R} |u|^-s
    s: float
    beta_prime: float


def shell_sum(s: float, d: int, radius: int) -> float:
    """``sum_{0 < |u|_inf <= R} |u|_2^-s`` over ``Z^d``.

    Sums one hyperplane ``u_1 = x`` at a time, using ``u -> -u`` symmetry in
    the first coordinate.
    """
    if radius < 1:
        return 0.0
    ax = np.arange(-radius, radius + 1, dtype=np.float64)
    if d == 1:
        r2_rest = np.zeros(1)
    else:
        grids = np.meshgrid(*([ax ** 2] * (d - 1)), indexing="ij")
        r2_rest = np.sum(grids, axis=0).ravel()
    parts = []
    for x in range(0, radius + 1):
        r2 = r2_rest + float(x) ** 2
        if x == 0:
            r2 = r2[r2 > 0]
        terms = np.power(r2, -s / 2)
        parts.append((1.0 if x == 0 else 2.0) * float(terms.sum()))
    return math.fsum(parts)


def tail_majorant(s: float, d: int, radius: int) -> float:
    """Upper bound on ``sum_{|u|_inf > R} |u|_2^-s``.

    ``|u|_2 >= |u|_inf = m`` and the sup-norm sphere of radius ``m`` has at
    most ``2d 3^(d-1) m^(d-1)`` points, so the tail is below
    ``2d 3^(d-1) int_R^inf x^(d-1-s) dx``.
    """
    if s <= d:
        raise InvalidParameter(f"s = {s} <= d = {d}: the sum diverges")
    return 2 * d * 3 ** (d - 1) * radius ** (d - s) / (s - d)


def gw_bound(params: Params, truncation: int = 200) -> GWBound:
    """Mean offspring of the branching process dominating the cluster of the
    long-range comparison model (``s = log_z(alpha / rho)``)."""
    s, beta = longrange_params_from(params)
    d = params.d
    if s <= d:
        raise InvalidParameter(
            f"s = log_z(alpha/rho) = {s:.4g} <= d: needs rho < alpha / z^d")
    S = shell_sum(s, d, truncation)
    T = beta * tail_majorant(s, d, truncation)
    return GWBound(2 * d * params.p + beta * S + T, truncation, T, S, s, beta)


def gw_root(params: Params, truncation: int = 200) -> float:
    """``p*`` solving ``mean_offspring(p) = 1``; below it the cluster is a.s. finite.

    The mean is linear in ``p``, so ``p* = 1 / mean_offspring(p = 1)``.
    """
    unit = gw_bound(params.with_(p=1.0), truncation)
    return 1.0 / unit.mean_offspring
