"""Self-checks run by ``nestedsir verify``: samplers against exact oracles,
the mark/height coupling, the zero-function inequality, the domination chain
and Reed-Frost against cluster extraction."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import rng as _rng
from .analysis.domination import domination_check, zero_function_compare
from .analysis.yukich import yukich_limit_check
from .heights import coupled_samples, coupling_exponent
from .lattice import Box
from .netmodels import ModelKind, Params
from .oracle import cached, exact_connection_prob, tiny_suite
from .percolation.clusters import clusters
from .percolation.dynamics import reed_frost_run
from .percolation.graph import all_pairs, batch_connected, batch_open_edges, sample_open_graph


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name:<28} {self.detail}"


# -- Monte Carlo against the tiny-instance oracle ------------------------------------

def mc_connection_freq(case, n: int, seed: int, chunk: int = 20_000) -> float:
    """Fraction of ``n`` batch-sampled graphs joining the case's two terminals."""
    box = case.box()
    s, t = int(box.index(case.source)), int(box.index(case.target))
    pairs = all_pairs(box)
    seeds = np.array(_rng.child_seed(seed, np.arange(n)), dtype=np.int64)
    hits = 0
    for i in range(0, n, chunk):
        mask = batch_open_edges(box, case.model(), case.params, seeds[i:i + chunk])
        hits += int(batch_connected(box.n_vertices, pairs, mask)[:, s, t].sum())
    return hits / n


def oracle_gap(freq: float, exact, n: int) -> float:
    """Distance from ``freq`` to the oracle bracket in binomial standard errors."""
    lo, hi = exact.lower, exact.upper
    gap = max(lo - freq, freq - hi, 0.0)
    v = min(max(freq, lo), hi)
    sd = math.sqrt(max(v * (1 - v), 1e-12) / n)
    return gap / sd


def oracle_equivalence(n: int, seed: int, n_sigma: float = 3.0):
    out = []
    for case in tiny_suite():
        ex = case.exact()
        f = mc_connection_freq(case, n, seed)
        g = oracle_gap(f, ex, n)
        out.append(CheckResult(f"oracle:{case.name}", g <= n_sigma,
                               f"mc={f:.5f} exact=[{ex.lower:.5f},{ex.upper:.5f}] gap={g:.2f}sd"))
    return out


# -- coupling ---------------------------------------------------------------------------

def coupling_check(n: int, alpha: float, z: int, seed: int, level: float = 0.01):
    """Joint samples satisfy ``u^-s >= z^x``; ``u`` is uniform and ``x`` geometric."""
    u, x = coupled_samples(alpha, n, _rng.generator(seed, _rng.HEIGHT))
    s = coupling_exponent(alpha, z)
    # compare in logs: u^-s >= z^x  <=>  -s ln u >= x ln z
    ok = bool(np.all(-s * np.log(u) >= x * math.log(z) - 1e-12))
    ks = stats.kstest(u, "uniform").pvalue
    kmax = int(x.max())
    obs = np.bincount(x, minlength=kmax + 1).astype(float)
    k = np.arange(kmax + 1)
    pk = alpha ** -k.astype(float) * (1 - 1 / alpha)
    pk[-1] = alpha ** -float(kmax)
    # pool sparse classes from the top so every expected count is at least 5
    exp = n * pk
    while len(exp) > 2 and exp[-1] < 5:
        exp[-2] += exp[-1]
        obs[-2] += obs[-1]
        exp, obs = exp[:-1], obs[:-1]
    chi = stats.chisquare(obs, exp).pvalue
    return [
        CheckResult("coupling:inequality", ok, f"n={n} s={s:.4f}"),
        CheckResult("coupling:uniform-marks", ks > level, f"KS p={ks:.3f}"),
        CheckResult("coupling:geometric-heights", chi > level, f"chi2 p={chi:.3f}"),
    ]


# -- zero functions ---------------------------------------------------------------------

def random_zero_configs(n: int, seed: int, max_size: int = 6, radius: int = 12):
    """Random ``(params, A, B)``: disjoint endpoint sets in ``Z^2`` around the origin."""
    gen = _rng.generator(seed, _rng.REPLICA, 17)
    pts = np.array([(i, j) for i in range(-radius, radius + 1)
                    for j in range(-radius, radius + 1) if (i, j) != (0, 0)])
    for _ in range(n):
        params = Params(2, int(gen.choice([2, 3])), float(1 + 7 * gen.random()),
                        float(0.05 + 0.9 * gen.random()), float(gen.random()))
        na, nb = gen.integers(1, max_size + 1, size=2)
        idx = gen.choice(len(pts), size=na + nb, replace=False)
        yield params, pts[idx[:na]], pts[idx[na:]]


def zero_function_sweep(n: int, seed: int, fault: str | None = None, max_size: int = 6):
    """Number of configurations with ``z1 < z2``.  ``fault="beta-equals-alpha"``
    replaces ``beta = sqrt(alpha)`` by ``beta = alpha``."""
    fails = 0
    worst = math.inf
    for params, A, B in random_zero_configs(n, seed, max_size):
        beta = params.alpha if fault == "beta-equals-alpha" else None
        r = zero_function_compare(A, B, params, beta=beta)
        fails += not r.passed
        worst = min(worst, r.z1 - r.z2)
    return fails, worst


def zero_function_check(n: int, seed: int, fault: str | None = None):
    fails, worst = zero_function_sweep(n, seed, fault)
    return [CheckResult("zero-function", fails == 0,
                        f"{fails}/{n} configs with z1 < z2, min(z1-z2)={worst:.3g}")]


# -- domination -------------------------------------------------------------------------

def _connection(box, source, target, params, model, trunc):
    return exact_connection_prob(box, source, target, params, model, trunc)


def exact_domination_pairs():
    """(name, nested bracket, distance value) for each 3x3 nested case of the
    tiny suite, with the distance model on the same box and parameters."""
    out = []
    for case in tiny_suite():
        if case.model_name != "nested" or case.side != 3:
            continue
        nested = case.exact()
        dist = cached("exact_connection_prob", _connection, box=case.box(),
                      source=case.source, target=case.target, params=case.params,
                      model=ModelKind.distance(), trunc=case.trunc)
        out.append((case.name, nested, dist))
    return out


def domination_checks(side: int, params: Params, n_reps: int, seed: int, workers: int = 1):
    out = []
    for name, nested, dist in exact_domination_pairs():
        ok = nested.upper <= dist.lower + 1e-12
        out.append(CheckResult(f"domination-exact:{name}", ok,
                               f"nested<={nested.upper:.6f} distance>={dist.lower:.6f}"))
    for rep in domination_check(side, params, n_reps, seed, workers):
        freqs = " ".join(f"{k}={e.p_hat:.3f}" for k, e in rep.estimates.items())
        out.append(CheckResult(f"domination-mc:{rep.event}", rep.passed, freqs))
    return out


# -- Reed-Frost ---------------------------------------------------------------------------

PRESETS = {
    "nested": Params(2, 2, 2.0, 0.5, 0.4),
    "nested-dense": Params(2, 2, 1.5, 0.8, 0.6),
    "distance": Params(2, 2, 2.0, 0.5, 0.5),
    "long-range": Params(2, 2, 2.0, 0.25, 0.2),
}


def reed_frost_equivalence(n: int, seed: int, side: int = 24):
    """Final infected set of an outbreak from the origin equals its open cluster."""
    bad = 0
    names = list(PRESETS)
    for i in range(n):
        name = names[i % len(names)]
        params = PRESETS[name]
        model = ModelKind.parse(name.split("-dense")[0], params)
        g = sample_open_graph(Box(side, 2), model, params, int(_rng.child_seed(seed, i)))
        infected, _ = reed_frost_run(g, 0)
        cluster = clusters(g).cluster_of(0)
        bad += not np.array_equal(np.sort(infected), cluster)
    return [CheckResult("reed-frost=cluster", bad == 0, f"{bad}/{n} mismatches")]


def yukich_check(L: int, seed: int):
    res = yukich_limit_check(1.0, 1.0, L, seed=seed)
    return [CheckResult(f"yukich:t={r.t:g}", r.passed, f"ratio={r.ratio:.3f}") for r in res]


def run_verify(seed: int = 0, fault: str | None = None, workers: int = 1,
               n_oracle: int = 20_000, n_coupling: int = 200_000, n_zero: int = 2_000,
               domination_side: int = 32, n_domination: int = 200, n_reed_frost: int = 40,
               yukich_side: int = 1024):
    results = []
    results += oracle_equivalence(n_oracle, seed)
    results += coupling_check(n_coupling, 2.0, 2, seed)
    results += zero_function_check(n_zero, seed, fault)
    results += domination_checks(domination_side, Params(2, 2, 2.0, 0.25, 0.2),
                                 n_domination, seed, workers)
    results += reed_frost_equivalence(n_reed_frost, seed)
    results += yukich_check(yukich_side, seed)
    return results
