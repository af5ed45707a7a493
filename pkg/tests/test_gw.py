import itertools
import math

import numpy as np
import pytest

from nestedsir.analysis.gw import gw_bound, gw_root, shell_sum, tail_majorant
from nestedsir.netmodels import InvalidParameter, Params, longrange_params_from


def _brute_shell(s, d, R):
    tot = 0.0
    for u in itertools.product(range(-R, R + 1), repeat=d):
        if any(u):
            tot += math.hypot(*u) ** -s
    return tot


@pytest.mark.parametrize("s,d,R", [(3.0, 2, 7), (2.5, 2, 5), (4.0, 3, 3), (1.5, 1, 20)])
def test_shell_sum_matches_brute_force(s, d, R):
    assert shell_sum(s, d, R) == pytest.approx(_brute_shell(s, d, R), rel=1e-12)


def test_tail_majorant_bounds_the_remainder():
    s, d = 3.0, 2
    for R in (5, 10, 20):
        rest = shell_sum(s, d, 400) - shell_sum(s, d, R)
        assert rest <= tail_majorant(s, d, R)


def test_total_bound_nonincreasing_in_truncation():
    params = Params(2, 2, 2.0, 0.2, 1.0)
    vals = [gw_bound(params, R).mean_offspring for R in (5, 10, 50, 200)]
    assert all(a >= b - 1e-12 for a, b in zip(vals, vals[1:]))


def test_mean_linear_in_p():
    params = Params(2, 2, 2.0, 0.2, 0.3)
    m = [gw_bound(params.with_(p=p)).mean_offspring for p in (0.1, 0.2, 0.3)]
    assert m[2] - m[1] == pytest.approx(m[1] - m[0], rel=1e-9)


def test_root_gives_unit_mean():
    params = Params(2, 2, 2.0, 0.2, 0.3)
    r = gw_root(params)
    assert gw_bound(params.with_(p=r)).mean_offspring == pytest.approx(1.0, rel=1e-12)


def test_known_root():
    assert gw_root(Params(2, 2, 2.0, 0.2, 0.5)) == pytest.approx(0.02953, abs=5e-5)


def test_components():
    params = Params(2, 2, 2.0, 0.2, 0.3)
    b = gw_bound(params)
    s, beta = longrange_params_from(params)
    assert b.s == pytest.approx(s) and b.beta_prime == pytest.approx(beta)
    assert b.mean_offspring == pytest.approx(4 * 0.3 + beta * b.shell_sum + b.tail_bound)
    assert b.tail_bound > 0


def test_divergent_sum_raises():
    with pytest.raises(InvalidParameter):
        tail_majorant(2.0, 2, 10)
    with pytest.raises(InvalidParameter):
        gw_bound(Params(2, 2, 2.0, 0.6, 0.3))  # rho > alpha / z^d


def test_truncation_converges():
    params = Params(2, 2, 2.0, 0.2, 1.0)
    a = gw_bound(params, 200).mean_offspring
    b = gw_bound(params, 2000).mean_offspring
    assert b <= a and (a - b) / b < 1e-3


def _quadrant_shell_sum(s, R):
    # 4 * sum over a >= 1, b >= 0: each nonzero point of Z^2 counted once
    b2 = np.arange(0, R + 1, dtype=np.float64) ** 2
    return 4.0 * math.fsum(float(np.sum((a * a + b2) ** (-s / 2))) for a in range(1, R + 1))


def test_radius_1e4_shell_sum():
    params = Params(2, 2, 2.0, 0.25, 0.01)
    s, beta = longrange_params_from(params)
    assert s == pytest.approx(3.0)
    exhaustive = _quadrant_shell_sum(s, 10 ** 4)
    assert shell_sum(s, 2, 10 ** 4) == pytest.approx(exhaustive, rel=1e-6)
    # the certified mean bounds the exhaustive value from above, within the majorant
    b = gw_bound(params)
    lower = 4 * params.p + beta * exhaustive
    assert lower <= b.mean_offspring <= lower + b.tail_bound
