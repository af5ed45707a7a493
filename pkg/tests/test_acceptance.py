"""Acceptance criteria, one test each.  Every test prints a single PASS/FAIL
line with the measured quantity before asserting."""
import math

import pytest

from nestedsir import rng
from nestedsir.analysis.crossing import crossing_estimate, estimate_pc
from nestedsir.analysis.domination import domination_check, zero_function_compare
from nestedsir.analysis.gw import gw_root
from nestedsir.analysis.tail import sandwich_check, tail_exponent
from nestedsir.checks import (coupling_check, exact_domination_pairs, oracle_equivalence,
                              reed_frost_equivalence, zero_function_sweep)
from nestedsir.analysis.yukich import yukich_limit_check
from nestedsir.heights import sample_field
from nestedsir.lattice import Box
from nestedsir.netmodels import Params, degree_field
from nestedsir.percolation.dynamics import tail_all_a_frequency, tail_all_a_probability

SEED = 20240601

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def emit(number, passed, detail):
        with capsys.disabled():
            print(f"\n[criterion {number:>2}] {'PASS' if passed else 'FAIL'}  {detail}")
        return passed
    return emit


@pytest.fixture(scope="module")
def degrees_1024():
    params = Params(2, 2, 2.0, 0.5, 0.5)
    df = degree_field(sample_field(Box(1024, 2), 2.0, SEED), params)
    return params, df.degrees[~df.censored]


def test_c01_degree_exponent(report, degrees_1024):
    params, deg = degrees_1024
    fit = tail_exponent(deg, (16, 512), d=2)
    est = fit.regression.gamma_minus_1
    ok = abs(est - params.gamma_minus_1) <= 0.15
    report(1, ok, f"gamma-1 = {est:.3f} (Hill {fit.hill.gamma_minus_1:.3f}), "
                  f"target 1.00 +/- 0.15, {len(deg)} interior vertices")
    assert ok


def test_c02_sandwich(report, degrees_1024):
    params, deg = degrees_1024
    res = [sandwich_check(deg, params, h) for h in (32, 64, 128)]
    ok = all(r.passed for r in res)
    vals = ", ".join(f"h={r.h}: {r.value:.3f}" for r in res)
    report(2, ok, f"{vals} in [{res[0].low:.3f}, {res[0].high:.2f}]")
    assert ok


def test_c03_nearest_neighbour_limit(report):
    est = estimate_pc(Params(2, 2, 1e6, 0.5, 0.5), [64, 128], tol=0.01, n_reps=200, seed=SEED)
    ok = abs(est.value - 0.5) <= 0.05
    report(3, ok, f"p_c(L=128) = {est.value:.4f} (L=64: {est.by_L[64]:.4f}), target 0.50 +/- 0.05")
    assert ok


def test_c04_trivial_threshold(report):
    params = Params(2, 2, 2.0, 0.9, 0.05)
    small = crossing_estimate(params, 32, 400, SEED)
    large = crossing_estimate(params, 128, 400, SEED)
    grows = small.separated_below(large)
    freq = tail_all_a_frequency(params, 6, 12, SEED, 1000)
    exact = tail_all_a_probability(params, 6, 12)
    ok = grows and freq >= 0.9
    report(4, ok, f"crossing L=32 {small.p_hat:.3f} [{small.ci_low:.3f},{small.ci_high:.3f}] "
                  f"-> L=128 {large.p_hat:.3f} [{large.ci_low:.3f},{large.ci_high:.3f}]; "
                  f"tail-all-A from k0=6: {freq:.3f} (exact {exact:.3f}), target >= 0.9")
    assert ok


def test_c05_certified_subcritical(report):
    base = Params(2, 2, 2.0, 0.2, 1.0)
    p = 0.5 * gw_root(base)
    est = crossing_estimate(base.with_(p=p), 128, 500, SEED)
    ok = est.ci_high < 0.02
    report(5, ok, f"p = {p:.5f}: crossing {est.p_hat:.4f}, 95% upper {est.ci_high:.4f} < 0.02")
    assert ok


def test_c06_domination_chain(report):
    exact = exact_domination_pairs()
    exact_ok = all(n.upper <= d.lower + 1e-12 for _, n, d in exact)
    reps = domination_check(64, Params(2, 2, 2.0, 0.25, 0.2), 2000, SEED)
    mc_ok = all(r.passed for r in reps)
    parts = [f"{r.event}: " + " <= ".join(f"{e.p_hat:.3f}" for e in r.estimates.values())
             for r in reps]
    ok = exact_ok and mc_ok
    report(6, ok, f"exact nested <= distance on {len(exact)} 3x3 cases: {exact_ok}; "
                  + "; ".join(parts))
    assert ok


def test_c07_zero_function(report):
    fails, worst = zero_function_sweep(10_000, SEED)
    gen = rng.generator(SEED, rng.REPLICA, 7)
    gap = 0.0
    for _ in range(2000):
        params = Params(2, int(gen.choice([2, 3])), float(1 + 7 * gen.random()),
                        float(0.05 + 0.9 * gen.random()), float(gen.random()))
        i, j = (int(x) for x in gen.integers(1, 13, size=2))
        r = zero_function_compare([(i, j)], [(-j, i)], params)
        gap = max(gap, abs(r.z1 - r.z2))
    ok = fails == 0 and gap <= 1e-12
    report(7, ok, f"{fails}/10000 configs with z1 < z2 (min z1-z2 = {worst:.3g}); "
                  f"single-edge equal-distance max |z1-z2| = {gap:.2g}")
    assert ok


def test_c08_coupling(report):
    res = coupling_check(10 ** 6, 2.0, 2, SEED, level=0.01)
    ok = all(r.passed for r in res)
    report(8, ok, "; ".join(f"{r.name.split(':')[1]} {r.detail}" for r in res))
    assert ok


def test_c09_reed_frost(report):
    (res,) = reed_frost_equivalence(100, SEED)
    report(9, res.passed, f"final infected set vs origin cluster: {res.detail}")
    assert res.passed


def test_c10_yukich(report):
    res = yukich_limit_check(1.0, 1.0, 2048, seed=SEED)
    ok = len(res) == 2 and all(r.passed for r in res)
    report(10, ok, ", ".join(f"t={r.t:g}: {r.empirical:.3f} (ratio {r.ratio:.3f})" for r in res)
                   + f" vs 2pi = {2 * math.pi:.3f}")
    assert ok


def test_c11_oracle_equivalence(report):
    res = oracle_equivalence(10 ** 5, SEED, n_sigma=3.0)
    ok = all(r.passed for r in res)
    worst = max(res, key=lambda r: float(r.detail.rsplit("=", 1)[1].rstrip("sd")))
    report(11, ok, f"{sum(r.passed for r in res)}/{len(res)} tiny cases within 3 sd; "
                   f"worst {worst.name}: {worst.detail}")
    assert ok
