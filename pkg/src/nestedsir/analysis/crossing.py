"""Crossing-probability curves and the 0.5-crossing estimate of p_c."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy import stats

from ..netmodels import ModelKind, Params
from ..percolation.replicas import replica_seeds, run_replicas


def wilson(k: int, n: int, confidence: float = 0.95):
    """Wilson score interval for ``k`` successes in ``n`` trials."""
    if n <= 0:
        raise ValueError("need at least one trial")
    ci = stats.binomtest(int(k), int(n)).proportion_ci(confidence, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True)
class CrossingEstimate:
    p_hat: float
    ci_low: float
    ci_high: float
    n: int
    L: int
    p: float = math.nan

    @classmethod
    def from_counts(cls, k: int, n: int, L: int, p: float = math.nan):
        lo, hi = wilson(k, n)
        return cls(k / n, lo, hi, n, L, p)

    def contains(self, x: float) -> bool:
        return self.ci_low <= x <= self.ci_high

    def separated_below(self, other: "CrossingEstimate") -> bool:
        """CI entirely below ``other``'s CI."""
        return self.ci_high < other.ci_low


def crossing_estimate(params: Params, side: int, n_reps: int, seed: int,
                      model: ModelKind | None = None, workers: int = 1,
                      event: str = "crossing") -> CrossingEstimate:
    """Monte Carlo frequency of ``event`` (``crossing`` or ``origin_boundary``)."""
    model = model or ModelKind.nested()
    recs = run_replicas(side, model, params, replica_seeds(seed, n_reps), workers)
    k = sum(getattr(r, event) for r in recs)
    return CrossingEstimate.from_counts(k, n_reps, side, params.p)


def crossing_curve(params: Params, p_grid, side: int, n_reps: int, seed: int,
                   model: ModelKind | None = None, workers: int = 1):
    """One estimate per ``p``; the replica seeds are shared across the grid so
    realisations are coupled and crossing is monotone in ``p`` seed by seed."""
    if n_reps < 100:
        raise ValueError("crossing curves need at least 100 replicas per point")
    return [crossing_estimate(params.with_(p=float(p)), side, n_reps, seed, model, workers)
            for p in p_grid]


@dataclass
class PcEstimate:
    value: float
    by_L: dict
    drift: float              # estimate at the largest L minus the smallest
    conflicts: list = field(default_factory=list)
    trail: dict = field(default_factory=dict)

    def __float__(self):
        return self.value


def _bisect(params, side, tol, n_reps, seed, model, workers, p_lo, p_hi, trail, conflicts):
    evaluated = []
    while p_hi - p_lo >= tol:
        mid = 0.5 * (p_lo + p_hi)
        n = n_reps
        est = crossing_estimate(params.with_(p=mid), side, n, seed, model, workers)
        # an undecided midpoint gets more replicas before it is accepted
        while est.contains(0.5) and n < 4 * n_reps:
            n *= 2
            est = crossing_estimate(params.with_(p=mid), side, n, seed, model, workers)
        evaluated.append(est)
        if est.contains(0.5):
            p_lo = p_hi = mid
            break
        if est.p_hat > 0.5:
            p_hi = mid
        else:
            p_lo = mid
    # a larger p with a CI-separated smaller crossing frequency is a conflict
    ordered = sorted(evaluated, key=lambda e: e.p)
    for i, a in enumerate(ordered):
        for b in ordered[i + 1:]:
            if b.separated_below(a):
                conflicts.append((side, a.p, b.p))
    trail[side] = evaluated
    return 0.5 * (p_lo + p_hi)


def estimate_pc(params: Params, L_list, tol: float = 0.01, n_reps: int = 200, seed: int = 0,
                model: ModelKind | None = None, workers: int = 1,
                p_range=(0.0, 1.0)) -> PcEstimate:
    """Bisection on ``p`` for the 0.5-crossing of the box-crossing probability.

    A midpoint whose Wilson interval contains 0.5 is re-estimated with up to
    four times the replicas; if it still does, it is the estimate.
    Otherwise bisection stops once the bracket is narrower than ``tol``.
    Returns the estimate at the largest ``L``, with the estimates for every
    ``L`` and their drift.  Non-monotone evaluations are
    listed in ``conflicts``.
    """
    L_list = sorted(int(L) for L in L_list)
    if len(L_list) < 2:
        raise ValueError("estimate_pc needs at least two box sizes")
    by_L, trail, conflicts = {}, {}, []
    for L in L_list:
        by_L[L] = _bisect(params, L, tol, n_reps, seed, model, workers, *p_range,
                          trail, conflicts)
    return PcEstimate(by_L[L_list[-1]], by_L, by_L[L_list[-1]] - by_L[L_list[0]],
                      conflicts, trail)
