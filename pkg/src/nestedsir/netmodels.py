"""Edge models on Z^d and their per-edge laws.

Five models share the package:

* ``NESTED``: nearest-neighbour edges plus every pair sharing a block at a
  level no higher than both heights; level-k shared communities transmit
  independently with probability ``p rho^k``.
* ``DISTANCE_P1``: pairs within ``delta z^min(X_u, X_v)``; one channel with
  probability ``p rho^k1 / (1 - rho)``.
* ``YUKICH``: uniform marks, ``d(u, v) <= delta min(U_u^-s, U_v^-s)``.
* ``DIRECTED_PAIR_P2``: every ordered pair carries its own height with
  ``P(>= k) = beta^-k``; after integrating them out, edges are independent.
* ``LONG_RANGE_Q``: independent edges open with ``beta / d(u, v)^s``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .lattice import (Box, community_level, community_levels, euclid_dist,
                      k1_delta)


class InvalidParameter(ValueError):
    """A model parameter violates its stated range."""


@dataclass(frozen=True)
class Params:
    d: int
    z: int
    alpha: float
    rho: float
    p: float
    delta: Optional[float] = None

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise InvalidParameter(f"d must be a positive integer, got {self.d}")
        if int(self.z) != self.z or self.z < 2:
            raise InvalidParameter(f"z must be an integer >= 2, got {self.z}")
        if not self.alpha >= 1:
            raise InvalidParameter(f"alpha must be >= 1, got {self.alpha}")
        if not 0 <= self.rho <= 1:
            raise InvalidParameter(f"rho must lie in [0, 1], got {self.rho}")
        if not 0 <= self.p <= 1:
            raise InvalidParameter(f"p must lie in [0, 1], got {self.p}")
        if self.delta is None:
            object.__setattr__(self, "delta", math.sqrt(self.d))
        elif not self.delta > 0:
            raise InvalidParameter(f"delta must be positive, got {self.delta}")

    def with_(self, **kw) -> "Params":
        return replace(self, **kw)

    @property
    def log_z_alpha(self) -> float:
        return math.log(self.alpha) / math.log(self.z)

    @property
    def gamma_minus_1(self) -> float:
        """Degree tail exponent ``log_z alpha / (d - log_z alpha)``."""
        a = self.log_z_alpha
        if a >= self.d:
            raise InvalidParameter("alpha >= z^d: no power-law degree tail")
        return a / (self.d - a)


class Kind(enum.Enum):
    NESTED = "nested"
    DISTANCE_P1 = "distance"
    YUKICH = "yukich"
    DIRECTED_PAIR_P2 = "directed-pair"
    LONG_RANGE_Q = "long-range"


@dataclass(frozen=True)
class ModelKind:
    kind: Kind
    delta: Optional[float] = None
    s: Optional[float] = None
    beta: Optional[float] = None

    def __post_init__(self):
        k = self.kind
        if self.delta is not None and not self.delta > 0:
            raise InvalidParameter("delta must be positive")
        if k is Kind.YUKICH and not (self.s and self.s > 0):
            raise InvalidParameter("Yukich model needs s > 0")
        if k in (Kind.DIRECTED_PAIR_P2, Kind.LONG_RANGE_Q) and not (self.beta and self.beta > 0):
            raise InvalidParameter(f"{k.value} model needs beta > 0")
        if k is Kind.LONG_RANGE_Q and not (self.s and self.s > 0):
            raise InvalidParameter("long-range model needs s > 0")

    @classmethod
    def nested(cls):
        return cls(Kind.NESTED)

    @classmethod
    def distance(cls, delta=None):
        return cls(Kind.DISTANCE_P1, delta=delta)

    @classmethod
    def yukich(cls, s, delta=1.0):
        return cls(Kind.YUKICH, delta=delta, s=s)

    @classmethod
    def directed_pair(cls, beta, delta=None):
        return cls(Kind.DIRECTED_PAIR_P2, delta=delta, beta=beta)

    @classmethod
    def long_range(cls, beta, s):
        return cls(Kind.LONG_RANGE_Q, beta=beta, s=s)

    @classmethod
    def parse(cls, name: str, params: Params, **kw) -> "ModelKind":
        """Build a model by name with the package's default constants."""
        kind = Kind(name)
        if kind is Kind.NESTED:
            return cls.nested()
        if kind is Kind.DISTANCE_P1:
            return cls.distance(kw.get("delta"))
        if kind is Kind.YUKICH:
            return cls.yukich(kw.get("s") or 1.0 / params.log_z_alpha, kw.get("delta", 1.0))
        if kind is Kind.DIRECTED_PAIR_P2:
            return cls.directed_pair(kw.get("beta") or math.sqrt(params.alpha), kw.get("delta"))
        s, beta = longrange_params_from(params)
        return cls.long_range(kw.get("beta") or beta, kw.get("s") or s)

    def delta_for(self, params: Params) -> float:
        return self.delta if self.delta is not None else params.delta


class _ClampCounter:
    """Counts probabilities truncated at 1."""

    def __init__(self):
        self.count = 0

    def add(self, n: int):
        self.count += int(n)

    def reset(self):
        self.count = 0


clamps = _ClampCounter()


# -- channel products -------------------------------------------------------

def channel_survival(p: float, rho: float, lo, hi) -> float:
    """``prod_{k=lo}^{hi} (1 - p rho^k)``; ``hi`` may be infinite."""
    if hi < lo:
        return 1.0
    if math.isinf(hi):
        if p == 0:
            return 1.0
        if rho == 1:
            return 0.0
        out, k = 1.0, int(lo)
        # factors below 1/2 at least halve the product: few before underflow
        while p * rho ** k > 0.5:
            out *= 1.0 - p * rho ** k
            if out < 1e-300:
                return 0.0
            k += 1
        # tail: sum_{i>=k} log(1 - p rho^i) = -sum_j x^j / (j (1 - rho^j)), x <= 1/2
        x = p * rho ** k
        if x == 0:
            return out
        log_rho = math.log(rho) if rho > 0 else -math.inf
        acc, j = 0.0, 1
        while True:
            term = x ** j / (j * -math.expm1(j * log_rho))
            acc += term
            if term <= 1e-17 * acc:
                return out * math.exp(-acc)
            j += 1
    out = 1.0
    for k in range(int(lo), int(hi) + 1):
        out *= 1.0 - p * rho ** k
    return out


def survival_table(p: float, rho: float, kmax: int):
    """Tables ``S[c, m] = prod_{k=c}^m (1 - p rho^k)`` for ``0 <= c, m <= kmax``
    (1 when ``m < c``) and ``S_inf[c]`` for ``m = inf``."""
    S = np.ones((kmax + 1, kmax + 1))
    for c in range(kmax + 1):
        acc = 1.0
        for m in range(c, kmax + 1):
            acc *= 1.0 - p * rho ** m
            S[c, m] = acc
    S_inf = np.array([channel_survival(p, rho, c, math.inf) for c in range(kmax + 1)])
    return S, S_inf


def nested_open_probs(c, m, nn, p: float, rho: float) -> np.ndarray:
    """Vectorised nested open probability.

    ``c`` community levels (inf allowed), ``m`` minimum heights (inf allowed),
    ``nn`` nearest-neighbour flags.
    """
    c = np.asarray(c, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    nn = np.asarray(nn, dtype=bool)
    lo = np.maximum(c, 1.0)
    has = np.isfinite(c) & (m >= lo)
    finite_m = np.where(np.isfinite(m), m, 0)
    kmax = int(max(np.max(lo[has & np.isfinite(lo)], initial=0),
                   np.max(finite_m[has], initial=0))) if has.any() else 0
    S, S_inf = survival_table(p, rho, kmax)
    surv = np.ones(c.shape)
    if has.any():
        ci = np.where(has, lo, 0).astype(np.int64)
        mi = np.where(has & np.isfinite(m), m, 0).astype(np.int64)
        surv_fin = S[ci, mi]
        surv_inf = S_inf[ci]
        surv = np.where(has, np.where(np.isfinite(m), surv_fin, surv_inf), 1.0)
    nn_fac = np.where(nn, 1.0 - p, 1.0)
    return 1.0 - surv * nn_fac


# -- predicates -------------------------------------------------------------

def _height(X, v) -> float:
    return float(X[tuple(v)])


def _is_nn(u, v) -> bool:
    return sum(abs(int(a) - int(b)) for a, b in zip(u, v)) == 1


def nested_edge_exists(u, v, X, params: Params) -> bool:
    """Edge of the connectivity graph: neighbours, or a shared block at a level
    no higher than both heights."""
    if _is_nn(u, v):
        return True
    c = community_level(u, v, params.z)
    return min(_height(X, u), _height(X, v)) >= c


def distance_edge_exists(u, v, X, params: Params, delta=None) -> bool:
    """Gate of the distance model: ``min(z^X_u, z^X_v) >= d(u, v) / delta``."""
    delta = params.delta if delta is None else delta
    return min(_height(X, u), _height(X, v)) >= k1_delta(u, v, params.z, delta)


def yukich_edge_exists(u, v, U, s: float, delta: float) -> bool:
    uu, uv = float(U[tuple(u)]), float(U[tuple(v)])
    if not (0 < uu <= 1 and 0 < uv <= 1):
        raise ValueError("marks must lie in (0, 1]")
    return euclid_dist(u, v) <= delta * min(uu ** -s, uv ** -s)


def edge_open_prob(model: ModelKind, u, v, params: Params, heights=None, marks=None) -> float:
    """Probability that ``{u, v}`` is open.

    Nested and distance models condition on ``heights = (X_u, X_v)`` when
    given; the distance model integrates its gate over the height law
    otherwise.  The directed-pair model always integrates its pair heights.
    """
    k = model.kind
    p, rho = params.p, params.rho
    if k is Kind.NESTED:
        if heights is None:
            raise ValueError("nested edge probability is conditional on heights")
        c = community_level(u, v, params.z)
        m = min(heights)
        return float(nested_open_probs([c], [m], [_is_nn(u, v)], p, rho)[0])
    if k is Kind.LONG_RANGE_Q:
        q = model.beta / euclid_dist(u, v) ** model.s
        if q > 1:
            clamps.add(1)
            return 1.0
        return q
    if k is Kind.YUKICH:
        if marks is None:
            raise ValueError("Yukich edges are deterministic given marks")
        U = {tuple(u): marks[0], tuple(v): marks[1]}
        return float(yukich_edge_exists(u, v, U, model.s, model.delta_for(params)))
    if rho == 1:
        raise InvalidParameter(f"rho = 1 is not allowed for the {k.value} model")
    k1 = k1_delta(u, v, params.z, model.delta_for(params))
    q = p * rho ** k1 / (1.0 - rho)
    if q > 1:
        clamps.add(1)
        q = 1.0
    if k is Kind.DISTANCE_P1:
        if heights is not None:
            return q if min(heights) >= k1 else 0.0
        return q * params.alpha ** (-2 * k1)
    return q * model.beta ** (-2 * k1)


def longrange_params_from(params: Params):
    """``s = log_z(alpha / rho)`` and ``beta' = p / (1 - rho) (alpha / rho)^(log_z(d) / 2)``."""
    rho = params.rho
    if not 0 < rho < 1:
        raise InvalidParameter("long-range comparison needs 0 < rho < 1")
    if not rho < params.alpha:
        raise InvalidParameter("long-range comparison needs rho < alpha")
    lz = math.log(params.z)
    ratio = params.alpha / rho
    s = math.log(ratio) / lz
    beta = params.p / (1.0 - rho) * ratio ** (0.5 * math.log(params.d) / lz)
    return s, beta


# -- degrees ----------------------------------------------------------------

def degree(v, X, params: Params) -> int:
    """Degree of ``v`` in the connectivity graph restricted to the box of ``X``.

    Community partners lie in the level-``X_v`` block of ``v``, so only that
    block and the lattice neighbours are scanned.
    """
    box = X.box
    v = tuple(int(c) for c in v)
    xv = _height(X, v)
    z = params.z
    if math.isinf(xv):
        lo = [0] * box.dim
        hi = [box.side] * box.dim
    else:
        size = z ** int(xv)
        lo = [(c // size) * size for c in v]
        hi = [min(l + size, box.side) for l in lo]
    grids = np.indices([h - l for l, h in zip(lo, hi)]).reshape(box.dim, -1).T + np.array(lo)
    others = grids[np.any(grids != np.array(v), axis=1)]
    partners = set()
    if len(others):
        cl = community_levels(np.broadcast_to(v, others.shape), others, z)
        hx = X.heights[tuple(others.T)]
        ok = np.minimum(hx, xv) >= cl
        partners = {tuple(int(c) for c in row) for row in others[ok]}
    for ax in range(box.dim):
        for step in (-1, 1):
            w = list(v)
            w[ax] += step
            if 0 <= w[ax] < box.side:
                partners.add(tuple(w))
    return len(partners)


@dataclass
class DegreeField:
    degrees: np.ndarray   # flat, C order
    censored: np.ndarray  # flat bool

    def histogram(self):
        """``(h, count, censored_count)`` arrays over observed degrees."""
        hmax = int(self.degrees.max(initial=0))
        cnt = np.bincount(self.degrees[~self.censored], minlength=hmax + 1)
        cen = np.bincount(self.degrees[self.censored], minlength=hmax + 1)
        h = np.arange(hmax + 1)
        keep = (cnt + cen) > 0
        return h[keep], cnt[keep], cen[keep]


def degree_field(X, params: Params) -> DegreeField:
    """Degrees of every box vertex, with censoring flags.

    A vertex is censored when its level-``X_v`` block is not wholly inside the
    box or one of its lattice neighbours lies outside it.
    """
    box: Box = X.box
    z, d, L = params.z, box.dim, box.side
    K = box.top_level(z)
    padded_side = z ** K
    H = X.heights
    coords = box.coords()
    hflat = H.reshape(-1)
    hcap = np.minimum(hflat, K)
    deg = np.zeros(box.n_vertices, dtype=np.int64)
    pad = [(0, padded_side - L)] * d
    for k in range(1, K + 1):
        act = np.pad(H >= k, pad).astype(np.int64)
        n_hi = padded_side // z ** k
        n_lo = padded_side // z ** (k - 1)
        cnt_hi = act.reshape(sum(([n_hi, z ** k] for _ in range(d)), [])).sum(
            axis=tuple(range(1, 2 * d, 2)))
        cnt_lo = act.reshape(sum(([n_lo, z ** (k - 1)] for _ in range(d)), [])).sum(
            axis=tuple(range(1, 2 * d, 2)))
        c_hi = cnt_hi[tuple((coords // z ** k).T)]
        c_lo = cnt_lo[tuple((coords // z ** (k - 1)).T)]
        deg += np.where(hcap >= k, c_hi - c_lo, 0)
    censored = np.zeros(box.n_vertices, dtype=bool)
    for ax in range(d):
        a = coords[:, ax]
        for step in (-1, 1):
            inside = (a + step >= 0) & (a + step < L)
            censored |= ~inside
            b = np.where(inside, a + step, a)
            # community level of the neighbour pair along this axis
            c = np.zeros(len(a), dtype=np.int64)
            size = 1
            pending = np.ones(len(a), dtype=bool)
            kk = 0
            while pending.any():
                kk += 1
                size *= z
                same = (a // size) == (b // size)
                c[pending & same] = kk
                pending &= ~same
            nb_coords = coords.copy()
            nb_coords[:, ax] = b
            hu = hflat[box.index(nb_coords)]
            partner = np.minimum(hu, hflat) >= c
            deg += (inside & ~partner).astype(np.int64)
    with np.errstate(over="ignore", invalid="ignore"):
        finite = np.isfinite(hflat)
        size = np.where(finite, np.power(float(z), np.where(finite, hflat, 0)), np.inf)
        block_end = (np.floor_divide(coords, size[:, None]) + 1) * size[:, None]
    censored |= ~finite
    censored |= np.any(block_end > L, axis=1)
    return DegreeField(deg, censored)
