"""Comparison chain Nested <= P' <= P'' <= Q and the exact zero-function inequality."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..lattice import k1_from_sqdist
from ..netmodels import ModelKind, Params, longrange_params_from
from ..percolation.replicas import replica_seeds, run_replicas
from .crossing import CrossingEstimate

CHAIN = ("nested", "distance", "directed-pair", "long-range")


def chain_models(params: Params):
    """The four comparison models: P'' with ``beta = sqrt(alpha)`` and Q with
    ``(beta', s)`` derived from the nested parameters."""
    s, beta_prime = longrange_params_from(params)
    return {
        "nested": ModelKind.nested(),
        "distance": ModelKind.distance(),
        "directed-pair": ModelKind.directed_pair(math.sqrt(params.alpha)),
        "long-range": ModelKind.long_range(beta_prime, s),
    }


@dataclass
class DominationReport:
    event: str
    estimates: dict   # model name -> CrossingEstimate, in chain order

    @property
    def violations(self):
        """Adjacent pairs whose intervals are separated the wrong way."""
        names = list(self.estimates)
        out = []
        for a, b in zip(names, names[1:]):
            ea, eb = self.estimates[a], self.estimates[b]
            if eb.ci_high < ea.ci_low:
                out.append((a, b))
        return out

    @property
    def passed(self) -> bool:
        return not self.violations

    def rows(self):
        for name, e in self.estimates.items():
            yield name, e.p_hat, e.ci_low, e.ci_high


def domination_check(side: int, params: Params, n_reps: int, seed: int = 0,
                     workers: int = 1, events=("crossing", "origin_boundary")):
    """Monte Carlo chain on one box; one report per event.

    All four models use the same replica seeds.  The chain passes when no
    adjacent pair is ordered the wrong way with separated 95% intervals.
    """
    models = chain_models(params)
    seeds = replica_seeds(seed, n_reps)
    recs = {name: run_replicas(side, models[name], params, seeds, workers) for name in CHAIN}
    reports = []
    for event in events:
        est = {name: CrossingEstimate.from_counts(sum(getattr(r, event) for r in recs[name]),
                                                  n_reps, side, params.p)
               for name in CHAIN}
        reports.append(DominationReport(event, est))
    return reports


# -- zero functions ------------------------------------------------------------

def _p1_none_open(alpha, q) -> float:
    """``P1(no edge open)`` with a single height gating edges sorted by distance:
    ``(1 - a_1) + sum_j (a_j - a_{j+1}) prod_{i<=j} (1 - q_i) + a_r prod_i (1 - q_i)``."""
    if len(alpha) == 0:
        return 1.0
    surv = np.cumprod(1.0 - q)
    a_next = np.append(alpha[1:], 0.0)
    return float((1.0 - alpha[0]) + np.sum((alpha - a_next) * surv))


def _p2_none_open(beta, q) -> float:
    return float(np.prod(1.0 - beta * q))


def zero_function_values(alpha_A, beta_A, q_A, alpha_B, beta_B, q_B):
    """``(P1(Z_A u Z_B), P2(Z_A u Z_B))`` from per-edge gate and channel probabilities.

    Edges are ordered by decreasing gate probability (increasing distance).
    """
    def order(a, b, q):
        a, b, q = (np.asarray(x, dtype=np.float64) for x in (a, b, q))
        o = np.argsort(-a, kind="stable")
        return a[o], b[o], q[o]

    aA, bA, qA = order(alpha_A, beta_A, q_A)
    aB, bB, qB = order(alpha_B, beta_B, q_B)
    aU, _, qU = order(np.concatenate([aA, aB]), np.concatenate([bA, bB]),
                      np.concatenate([qA, qB]))
    z1 = _p1_none_open(aA, qA) + _p1_none_open(aB, qB) - _p1_none_open(aU, qU)
    p2a, p2b = _p2_none_open(bA, qA), _p2_none_open(bB, qB)
    z2 = p2a + p2b - p2a * p2b
    return z1, z2


def edge_constants(dists, params: Params, beta: float | None = None):
    """Per-edge ``(alpha_u, beta_u, q_u)`` for endpoint distances from the pivot.

    ``alpha_u = alpha^-e``, ``beta_u = beta^-e`` with ``e = log_z(d_u / sqrt(d))``
    clamped at 0, and ``q_u = min(1, p rho^k1 / (1 - rho))``.
    """
    beta = math.sqrt(params.alpha) if beta is None else beta
    dd = np.asarray(dists, dtype=np.float64)
    e = np.maximum(0.0, np.log(dd / math.sqrt(params.d)) / math.log(params.z))
    k1 = k1_from_sqdist(dd ** 2, params.z, params.delta)
    q = np.minimum(1.0, params.p * params.rho ** k1.astype(np.float64) / (1.0 - params.rho))
    return params.alpha ** -e, beta ** -e, q


@dataclass(frozen=True)
class ZeroFunctionResult:
    z1: float
    z2: float
    passed: bool


def zero_function_compare(dists_A, dists_B, params: Params, beta: float | None = None,
                          pivot=None, slack: float = 1e-12) -> ZeroFunctionResult:
    """Exact ``P1(Z_A u Z_B)`` (one gating height at the pivot) against
    ``P2(Z_A u Z_B)`` (independent pair heights with law ``beta``).

    ``A`` and ``B`` are given either as endpoint distances from the pivot, or
    as endpoint coordinates of shape ``(n, d)``; with coordinates, shared
    endpoints are rejected and distances are taken from ``pivot`` (default
    the origin).
    """
    A = np.asarray(dists_A, dtype=np.float64)
    B = np.asarray(dists_B, dtype=np.float64)
    if A.ndim == 2 or B.ndim == 2:
        A = A.reshape(-1, params.d)
        B = B.reshape(-1, params.d)
        shared = {tuple(r) for r in A.tolist()} & {tuple(r) for r in B.tolist()}
        if shared:
            raise ValueError(f"edge sets A and B overlap at {sorted(shared)[:3]}")
        v = np.zeros(params.d) if pivot is None else np.asarray(pivot, dtype=np.float64)
        if any(np.all(r == v) for r in np.concatenate([A, B])):
            raise ValueError("an endpoint coincides with the pivot")
        A = np.linalg.norm(A - v, axis=1)
        B = np.linalg.norm(B - v, axis=1)
    aA, bA, qA = edge_constants(A, params, beta)
    aB, bB, qB = edge_constants(B, params, beta)
    z1, z2 = zero_function_values(aA, bA, qA, aB, bB, qB)
    return ZeroFunctionResult(z1, z2, bool(z1 >= z2 - slack))
