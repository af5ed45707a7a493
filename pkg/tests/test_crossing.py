import pytest

from nestedsir.analysis.crossing import (CrossingEstimate, crossing_curve, crossing_estimate,
                                         estimate_pc, wilson)
from nestedsir.analysis.gw import gw_root
from nestedsir.netmodels import Params


def test_wilson_edges():
    lo, hi = wilson(0, 500)
    assert lo == 0.0 and hi <= 4 / 500
    lo, hi = wilson(500, 500)
    assert hi == 1.0 and lo >= 1 - 4 / 500
    lo, hi = wilson(50, 100)
    assert lo < 0.5 < hi
    with pytest.raises(ValueError):
        wilson(0, 0)


def test_estimate_helpers():
    a = CrossingEstimate.from_counts(5, 100, 8)
    b = CrossingEstimate.from_counts(90, 100, 8)
    assert a.separated_below(b) and not b.separated_below(a)
    assert a.contains(0.05)


def test_extremes_of_p():
    base = Params(2, 2, 2.0, 0.2, 0.0)
    assert crossing_estimate(base, 16, 100, 0).p_hat == 0.0
    assert crossing_estimate(base.with_(p=1.0), 16, 100, 0).p_hat == 1.0


def test_curve_is_monotone_under_coupling():
    base = Params(2, 2, 2.0, 0.25, 0.1)
    ests = crossing_curve(base, [0.1, 0.2, 0.3, 0.4, 0.5, 0.6], 16, 100, 3)
    freqs = [e.p_hat for e in ests]
    assert all(a <= b for a, b in zip(freqs, freqs[1:]))
    with pytest.raises(ValueError):
        crossing_curve(base, [0.1], 16, 50, 0)


def test_worker_count_does_not_change_results():
    params = Params(2, 2, 2.0, 0.25, 0.35)
    a = crossing_estimate(params, 16, 100, 7, workers=1)
    b = crossing_estimate(params, 16, 100, 7, workers=2)
    assert a == b


def test_estimate_pc_needs_two_sizes():
    with pytest.raises(ValueError):
        estimate_pc(Params(2, 2, 2.0, 0.2, 0.5), [16])


def test_nontrivial_estimate_above_certified_root():
    params = Params(2, 2, 2.0, 0.2, 0.5)
    est = estimate_pc(params, [16, 32], tol=0.02, n_reps=100, seed=1)
    assert est.value > gw_root(params)
    assert set(est.by_L) == {16, 32}
    assert not est.conflicts


@pytest.mark.slow
def test_trivial_region_estimate_drifts_down():
    params = Params(2, 2, 2.0, 0.9, 0.5)
    est = estimate_pc(params, [16, 64], tol=0.02, n_reps=100, seed=2)
    assert est.drift < 0
