"""Reed-Frost generations on sampled graphs and the level-by-level ladder."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numba import njit

from .. import rng as _rng
from ..netmodels import Params
from .graph import OpenGraph


@njit(cache=True)
def _reed_frost(indptr, indices, n, start):
    # 0 susceptible, 1 infected, 2 removed
    state = np.zeros(n, dtype=np.int8)
    state[start] = 1
    frontier = np.empty(n, dtype=np.int64)
    nxt = np.empty(n, dtype=np.int64)
    frontier[0] = start
    n_front = 1
    generations = 0
    while n_front > 0:
        n_next = 0
        for f in range(n_front):
            v = frontier[f]
            for j in range(indptr[v], indptr[v + 1]):
                w = indices[j]
                if state[w] == 0:
                    state[w] = 1
                    nxt[n_next] = w
                    n_next += 1
        for f in range(n_front):
            state[frontier[f]] = 2
        if n_next > 0:
            generations += 1
        frontier, nxt = nxt, frontier
        n_front = n_next
    return state == 2, generations


def reed_frost_run(g: OpenGraph, initial):
    """Synchronous SIR over the pre-sampled open edges.

    Infected vertices infect every susceptible open neighbour and are then
    removed.  Returns ``(final_infected, generations)``: the flat indices of
    ever-infected vertices, and the number of generations producing new cases.
    """
    i = initial if np.isscalar(initial) else int(g.box.index(initial))
    if not 0 <= i < g.n_vertices:
        raise ValueError("initial vertex outside the box")
    indptr, indices = g.csr
    mask, gens = _reed_frost(indptr, indices, g.n_vertices, int(i))
    return np.flatnonzero(mask), int(gens)


# -- ladder -------------------------------------------------------------------

class Outcome(enum.IntEnum):
    A = 0  # a qualifying vertex with an open channel to the pivot
    C = 1  # qualifying vertices exist, none reachable from the pivot
    E = 2  # no vertex of the annulus reaches the next level


@dataclass(frozen=True)
class LadderTrace:
    outcomes: tuple   # Outcome per level 1..k_max
    terminated_at: int

    def tail_all_a(self, k0: int) -> bool:
        return all(o is Outcome.A for o in self.outcomes[k0 - 1:])

    def __str__(self):
        return "".join(o.name for o in self.outcomes)


def ladder_probs(params: Params, k: int):
    """Annulus size, per-vertex qualifying and per-channel open probabilities at level ``k``."""
    d, z = params.d, params.z
    n_k = z ** (d * k) - z ** (d * (k - 1))
    return n_k, params.alpha ** -(k + 1), params.p * params.rho ** k


def ladder_outcomes(params: Params, k_max: int, seed: int, n_traces: int) -> np.ndarray:
    """Outcome codes ``(n_traces, k_max)`` for independent traces.

    Only counts are sampled: the number of annulus vertices with
    ``sigma_v >= k + 1`` is binomial, and among those the number whose level-k
    channel to the pivot is open is binomial again.  The pivot is whichever
    qualifying vertex comes first; its identity never matters for the law of
    later levels.
    """
    if params.d * k_max * np.log2(params.z) > 62:
        raise ValueError("k_max too large: annulus sizes overflow 64-bit counts")
    gen = _rng.generator(seed, _rng.LADDER)
    pivot = gen.random(n_traces) < 1.0 / params.alpha  # sigma_0 >= 1
    out = np.empty((n_traces, k_max), dtype=np.int8)
    for k in range(1, k_max + 1):
        n_k, q_v, q_c = ladder_probs(params, k)
        count = gen.binomial(n_k, q_v, size=n_traces)
        opened = gen.binomial(count, q_c)
        a = pivot & (opened > 0)
        e = count == 0
        code = np.where(a, Outcome.A, np.where(e, Outcome.E, Outcome.C))
        out[:, k - 1] = code
        pivot = ~e
    return out


def ladder_run(params: Params, k_max: int, seed: int) -> LadderTrace:
    codes = ladder_outcomes(params, k_max, seed, 1)[0]
    return LadderTrace(tuple(Outcome(int(c)) for c in codes), k_max)


def tail_all_a_frequency(params: Params, k0: int, k_max: int, seed: int, n_traces: int):
    codes = ladder_outcomes(params, k_max, seed, n_traces)
    return float(np.mean(np.all(codes[:, k0 - 1:] == Outcome.A, axis=1)))


def tail_all_a_probability(params: Params, k0: int, k_max: int) -> float:
    """Exact probability that levels ``k0..k_max`` are all A.

    Needs a nonempty pivot after level ``k0 - 1`` and then, level by level,
    an open channel to some qualifying vertex:
    ``P(A_k | pivot) = 1 - (1 - p rho^k alpha^-(k+1))^n_k``.
    """
    # P(pivot nonempty after level k0-1)
    if k0 - 1 == 0:
        nonempty = 1.0 / params.alpha
    else:
        n_k, q_v, _ = ladder_probs(params, k0 - 1)
        nonempty = -np.expm1(n_k * np.log1p(-q_v))
    prob = nonempty
    for k in range(k0, k_max + 1):
        n_k, q_v, q_c = ladder_probs(params, k)
        prob *= -np.expm1(n_k * np.log1p(-q_v * q_c))
    return float(prob)
