import math
import warnings

import numpy as np
import pytest

from nestedsir.analysis.yukich import _degrees_2d, yukich_constant, yukich_limit_check


def test_constant_at_s1():
    assert yukich_constant(1.0, 1.0, 2) == pytest.approx(2 * math.pi)


def test_constant_rejects_small_s():
    with pytest.raises(ValueError):
        yukich_constant(0.5, 1.0, 2)


def _brute_degrees(U, s, delta, margin):
    L = U.shape[0]
    r = delta * U ** (-s)
    out = []
    for i in range(margin, L - margin):
        for j in range(margin, L - margin):
            c = 0
            for a in range(L):
                for b in range(L):
                    if (a, b) == (i, j):
                        continue
                    dist = math.hypot(a - i, b - j)
                    c += dist <= min(r[i, j], r[a, b])
            out.append(c)
    return np.array(out)


@pytest.mark.parametrize("seed", range(3))
def test_degree_counter_matches_brute_force(seed):
    U = 1.0 - np.random.default_rng(seed).random((16, 16))
    U = np.maximum(U, 0.2)  # every radius stays inside the margin
    got = _degrees_2d(U, 1.0, 1.0, 5.5, 6)
    want = _brute_degrees(U, 1.0, 1.0, 6)
    np.testing.assert_array_equal(got, want)


def test_saturated_centres_flagged():
    U = np.full((12, 12), 0.5)
    U[6, 6] = 1e-3
    d = _degrees_2d(U, 1.0, 1.0, 4.0, 5)
    assert (d == -1).sum() == 1


def test_small_box_rejected():
    with pytest.raises(ValueError):
        yukich_limit_check(1.0, 1.0, 64)


def test_divergent_constant_skipped():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        assert yukich_limit_check(0.5, 1.0, 512) == []
    assert w


def test_limit_at_moderate_size():
    res = yukich_limit_check(1.0, 1.0, 512, seed=1)
    assert [r.t for r in res] == [50.0, 100.0]
    for r in res:
        assert r.predicted == pytest.approx(2 * math.pi)
        assert 0.5 <= r.ratio <= 2.0
