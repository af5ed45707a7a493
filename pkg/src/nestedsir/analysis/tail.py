"""Degree-tail exponent estimation and the two-sided tail bounds."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special, stats

from ..netmodels import Params

DEFAULT_H_RANGE = (16, 512)


@dataclass(frozen=True)
class TailEstimate:
    gamma_minus_1: float
    stderr: float
    h_range: tuple
    n_samples: int
    method: str


@dataclass(frozen=True)
class TailFit:
    """Both estimators on one window, plus the agreement flag."""
    regression: TailEstimate
    hill: TailEstimate
    disagree: bool

    @property
    def gamma_minus_1(self) -> float:
        return self.regression.gamma_minus_1


def ccdf(samples, h) -> np.ndarray:
    """Empirical ``P(D >= h)``."""
    s = np.sort(np.asarray(samples))
    h = np.asarray(h, dtype=np.float64)
    return 1.0 - np.searchsorted(s, h, side="left") / len(s)


def _expand_histogram(h, count) -> np.ndarray:
    return np.repeat(np.asarray(h), np.asarray(count, dtype=np.int64))


def _samples(data):
    if isinstance(data, tuple) and len(data) >= 2:
        return _expand_histogram(data[0], data[1])
    return np.asarray(data)


def _grid(samples, lo, hi, n_points=40):
    discrete = np.issubdtype(samples.dtype, np.integer)
    if discrete:
        hs = np.unique(np.round(np.geomspace(lo, hi, n_points)).astype(np.int64))
        # keep only values where the empirical ccdf can change
        present = np.unique(samples[(samples >= lo) & (samples <= hi)])
        n_distinct = len(present)
    else:
        hs = np.geomspace(lo, hi, n_points)
        n_distinct = len(np.unique(samples[(samples >= lo) & (samples <= hi)]))
    return hs, n_distinct, discrete


def loglog_slope(samples, h_range=DEFAULT_H_RANGE, n_points=40) -> TailEstimate:
    """Least-squares slope of ``log ccdf`` against ``log h`` on a log-spaced grid."""
    samples = _samples(samples)
    lo, hi = h_range
    hs, n_distinct, _ = _grid(samples, lo, hi, n_points)
    if n_distinct < 10:
        raise ValueError(f"only {n_distinct} distinct values in {h_range}; need 10")
    cc = ccdf(samples, hs)
    keep = cc > 0
    if keep.sum() < 3:
        raise ValueError("empirical tail is empty on the fit range")
    fit = stats.linregress(np.log(hs[keep]), np.log(cc[keep]))
    return TailEstimate(-fit.slope, max(fit.stderr, 1e-12), (lo, hi), len(samples),
                        "loglog-regression")


def hill(samples, h_range=DEFAULT_H_RANGE) -> TailEstimate:
    """Maximum-likelihood exponent of a Pareto law truncated to the window.

    Integer samples are treated as rounded continuous values, so the window
    edges move out by half a unit.
    """
    samples = _samples(samples)
    lo, hi = map(float, h_range)
    if np.issubdtype(samples.dtype, np.integer):
        lo, hi = lo - 0.5, hi + 0.5
    x = samples[(samples >= lo) & (samples <= hi)].astype(np.float64)
    n = len(x)
    if n < 10:
        raise ValueError("too few samples in the fit window")
    t = float(np.mean(np.log(x / lo)))
    log_r = math.log(lo / hi)

    def score(a):
        ra = math.exp(a * log_r)
        return 1.0 / a - t + ra * log_r / (1.0 - ra)

    a_hat = optimize.brentq(score, 1e-6, 50.0)
    ra = math.exp(a_hat * log_r)
    info = 1.0 / a_hat ** 2 - log_r ** 2 * ra / (1.0 - ra) ** 2
    se = 1.0 / math.sqrt(n * info) if info > 0 else a_hat / math.sqrt(n)
    return TailEstimate(a_hat, se, tuple(h_range), len(samples), "hill")


def tail_exponent(samples, h_range=DEFAULT_H_RANGE, min_samples=10_000,
                  d: int | None = None) -> TailFit:
    """Tail exponent ``gamma - 1`` by log-log regression, cross-checked by Hill.

    ``samples`` is an array of (uncensored) degrees or a ``(h, count)``
    histogram.  The fit is flagged when the two estimates differ by more
    than two joint standard errors.  With ``d`` given, windows starting at or
    below the nearest-neighbour floor ``2d`` are rejected.
    """
    if d is not None and h_range[0] < 2 * d + 1:
        raise ValueError(f"h_min = {h_range[0]} is below 2d + 1 = {2 * d + 1}")
    samples = _samples(samples)
    if len(samples) < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {len(samples)}")
    reg = loglog_slope(samples, h_range)
    mle = hill(samples, h_range)
    joint = math.hypot(reg.stderr, mle.stderr)
    return TailFit(reg, mle, abs(reg.gamma_minus_1 - mle.gamma_minus_1) > 2 * joint)


def unit_ball_volume(d: int) -> float:
    return math.pi ** (d / 2) / special.gamma(d / 2 + 1)


@dataclass(frozen=True)
class SandwichResult:
    h: int
    value: float
    low: float
    high: float
    passed: bool
    skipped: bool = False


def sandwich_bounds(params: Params, low_slack=0.5, high_slack=2.0):
    """Slackened lower and upper constants for ``ccdf(h) h^(gamma-1)``."""
    a = params.log_z_alpha
    d = params.d
    low = low_slack / (2.0 * params.alpha)
    gap = d - a
    if gap <= 1e-9:
        return low, math.inf
    gm1 = a / gap
    high = high_slack * (d ** (d / 2 + 1) * unit_ball_volume(d) / gap) ** gm1
    return low, high


def sandwich_check(samples, params: Params, h_probe: int, low_slack=0.5,
                   high_slack=2.0) -> SandwichResult:
    """``ccdf(h) h^(gamma-1)`` against the slackened lower and upper constants.

    When ``alpha`` approaches ``z^d`` the upper constant diverges and the
    check is skipped with a warning.
    """
    samples = _samples(samples)
    a = params.log_z_alpha
    if params.d - a <= 1e-9:
        warnings.warn("alpha at z^d: upper tail constant diverges, check skipped")
        return SandwichResult(h_probe, math.nan, math.nan, math.inf, True, skipped=True)
    gm1 = params.gamma_minus_1
    value = float(ccdf(samples, [h_probe])[0]) * h_probe ** gm1
    low, high = sandwich_bounds(params, low_slack, high_slack)
    return SandwichResult(h_probe, value, low, high, bool(low <= value <= high))
