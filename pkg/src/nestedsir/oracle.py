"""Exact computations on tiny instances, used as ground truth for the samplers.

Connection probabilities enumerate height configurations (heights capped at
``H``; the top state stands for ``X >= H``) and, for each configuration,
compute the two-terminal reliability of the independent-edge graph by a
subset recursion over vertex sets containing the source::

    Conn(S) = 1 - sum_{T subset S, source in T} Conn(T) Cut(T, S \\ T)

where ``Cut(T, R)`` is the probability that no edge joins ``T`` and ``R``.
When pair probabilities still change above the cap (nested model, ``rho > 0``)
the top state is evaluated both as exactly ``H`` and as unbounded, which
brackets the true value.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from numba import njit
from scipy import stats

from .lattice import Box, community_levels, k1_from_sqdist
from .netmodels import (InvalidParameter, Kind, ModelKind, Params, channel_survival,
                        nested_open_probs)
from .percolation.graph import all_pairs, distance_channel_prob, independent_edge_probs

CACHE_ENV = "NESTEDSIR_CACHE_DIR"
DEFAULT_BUDGET = 5e9


class BudgetExceeded(RuntimeError):
    """The exact enumeration would exceed the configured work budget."""


@dataclass(frozen=True)
class TruncationSpec:
    height_cap: int = 3
    tail_policy: str = "capped-and-flagged"  # or "exact-tail-absorbed"

    def __post_init__(self):
        if self.height_cap < 1:
            raise ValueError("height cap must be at least 1")
        if self.tail_policy not in ("capped-and-flagged", "exact-tail-absorbed"):
            raise ValueError(f"unknown tail policy {self.tail_policy!r}")


@dataclass(frozen=True)
class OracleValue:
    value: float
    lower: float
    upper: float

    @property
    def exact(self) -> bool:
        return self.upper - self.lower <= 1e-13

    def __float__(self):
        return self.value


# -- single edges -----------------------------------------------------------

def exact_edge_prob(u, v, params: Params, tol: float = 1e-14) -> float:
    """Nested open probability of ``{u, v}`` with both heights integrated out.

    ``sum_m P(min(X_u, X_v) = m) (1 - prod_{k=c}^m (1 - p rho^k))`` where
    ``P(min >= m) = alpha^-2m`` and ``c = max(1, community level)``; the
    nearest-neighbour channel multiplies the closed probability by ``1 - p``.
    """
    cu = np.asarray(u, dtype=np.int64)
    cv = np.asarray(v, dtype=np.int64)
    nn = int(np.abs(cu - cv).sum()) == 1
    level = float(community_levels(cu, cv, params.z))
    p, rho, alpha = params.p, params.rho, params.alpha
    nn_fac = (1.0 - p) if nn else 1.0
    if math.isinf(level):
        return 1.0 - nn_fac
    lo = max(1, int(level))
    if alpha == 1:
        closed = channel_survival(p, rho, lo, math.inf)
        return 1.0 - nn_fac * closed
    a2 = alpha ** -2
    # E[survival] = P(min < lo) + sum_{m >= lo} P(min = m) S(lo, m)
    closed = 1.0 - a2 ** lo
    surv = 1.0
    m = lo
    while True:
        surv *= 1.0 - p * rho ** m
        inc = a2 ** m * (1.0 - a2) * surv
        closed += inc
        if inc < tol and a2 ** (m + 1) < tol:
            break
        m += 1
    return 1.0 - nn_fac * closed


def yukich_edge_prob(distance: float, s: float, delta: float) -> float:
    """``P(d <= delta min(U_u^-s, U_v^-s)) = min(1, (delta / d)^(1/s))^2``."""
    x = min(1.0, (delta / distance) ** (1.0 / s))
    return x * x


# -- two-terminal reliability ---------------------------------------------------

@njit(cache=True)
def _lowbit_table(n):
    full = 1 << n
    tab = np.zeros(full, dtype=np.int64)
    for T in range(1, full):
        low = T & -T
        a = 0
        while (1 << a) != low:
            a += 1
        tab[T] = a
    return tab


@njit(cache=True)
def _reliability_into(P, s, t, f, conn, lowbit):
    n = P.shape[0]
    full = 1 << n
    # f[T, b] = prod_{a in T} (1 - P[a, b])
    for b in range(n):
        f[0, b] = 1.0
    for T in range(1, full):
        a = lowbit[T]
        prev = T ^ (1 << a)
        for b in range(n):
            f[T, b] = f[prev, b] * (1.0 - P[a, b])
    sbit = 1 << s
    tbit = 1 << t
    total = 0.0
    for S in range(full):
        if not S & sbit:
            continue
        rest = S ^ sbit
        acc = 0.0
        if rest:
            sub = (rest - 1) & rest
            # proper subsets T of S containing s
            while True:
                T = sub | sbit
                cT = conn[T]
                if cT != 0.0:
                    cut = cT
                    R = S ^ T
                    while R:
                        cut *= f[T, lowbit[R]]
                        R &= R - 1
                    acc += cut
                if sub == 0:
                    break
                sub = (sub - 1) & rest
        cS = 1.0 - acc
        if cS < 1e-300:
            cS = 0.0
        conn[S] = cS
        if S & tbit and cS != 0.0:
            out = cS
            R = (full - 1) ^ S
            while R:
                out *= f[S, lowbit[R]]
                R &= R - 1
            total += out
    return total


def two_terminal_reliability(P: np.ndarray, source: int, target: int) -> float:
    """Probability that ``source`` and ``target`` are joined in the graph whose
    edges ``{a, b}`` are open independently with probability ``P[a, b]``."""
    P = np.ascontiguousarray(P, dtype=np.float64)
    if source == target:
        return 1.0
    n = P.shape[0]
    f = np.empty((1 << n, n))
    conn = np.zeros(1 << n)
    return float(_reliability_into(P, int(source), int(target), f, conn, _lowbit_table(n)))


@njit(cache=True)
def _canonical(st, perm):
    # keep a configuration iff it is not larger than its image under perm
    n = st.shape[0]
    for i in range(n - 1, -1, -1):
        a = st[i]
        b = st[perm[i]]
        if a != b:
            return a < b, False
    return True, True


@njit(cache=True)
def _enumerate_heights(tab_lo, tab_hi, pa, pb, n, n_states, weights, s, t, perm):
    """Sum reliability over all height configurations (mixed radix counter).

    ``perm`` is a box symmetry fixing source and target; only one
    configuration of each mirror pair is evaluated.
    """
    n_conf = n_states ** n
    st = np.zeros(n, dtype=np.int64)
    lo_sum = 0.0
    lo_c = 0.0
    hi_sum = 0.0
    hi_c = 0.0
    P_lo = np.zeros((n, n))
    P_hi = np.zeros((n, n))
    f = np.empty((1 << n, n))
    conn = np.zeros(1 << n)
    lowbit = _lowbit_table(n)
    top = n_states - 1
    for _ in range(n_conf):
        keep, fixed = _canonical(st, perm)
        if keep:
            w = 1.0 if fixed else 2.0
            any_top = False
            for i in range(n):
                w *= weights[st[i]]
                if st[i] == top:
                    any_top = True
            for e in range(pa.shape[0]):
                a = pa[e]
                b = pb[e]
                m = min(st[a], st[b])
                P_lo[a, b] = tab_lo[e, m]
                P_lo[b, a] = tab_lo[e, m]
                P_hi[a, b] = tab_hi[e, m]
                P_hi[b, a] = tab_hi[e, m]
            r_lo = _reliability_into(P_lo, s, t, f, conn, lowbit)
            r_hi = _reliability_into(P_hi, s, t, f, conn, lowbit) if any_top else r_lo
            # Kahan summation
            y = w * r_lo - lo_c
            tmp = lo_sum + y
            lo_c = (tmp - lo_sum) - y
            lo_sum = tmp
            y = w * r_hi - hi_c
            tmp = hi_sum + y
            hi_c = (tmp - hi_sum) - y
            hi_sum = tmp
        i = 0
        while i < n:
            st[i] += 1
            if st[i] < n_states:
                break
            st[i] = 0
            i += 1
    return lo_sum, hi_sum


def _mirror_perm(box: Box, s: int, t: int) -> np.ndarray:
    """Coordinate swap of a square box when it fixes source and target;
    identity otherwise."""
    n = box.n_vertices
    ident = np.arange(n, dtype=np.int64)
    if box.dim != 2:
        return ident
    coords = box.coords()
    perm = box.index(coords[:, ::-1]).astype(np.int64)
    if perm[s] == s and perm[t] == t:
        return perm
    return ident


def _height_weights(alpha: float, cap: int) -> np.ndarray:
    k = np.arange(cap, dtype=np.float64)
    w = np.empty(cap + 1)
    w[:cap] = alpha ** -k * (1.0 - 1.0 / alpha)
    w[cap] = alpha ** -float(cap)
    return w


def _pair_tables(box, model, params, cap):
    """Open probability of each pair as a function of the capped min height:
    columns ``0..cap``; the last column is the top state, evaluated at ``cap``
    (lower) and unbounded (upper)."""
    coords = box.coords()
    a, b = all_pairs(box)
    ca, cb = coords[a], coords[b]
    m = np.arange(cap + 1, dtype=np.float64)
    kind = model.kind
    if kind is Kind.NESTED:
        c = community_levels(ca, cb, params.z)
        nn = np.abs(ca - cb).sum(axis=1) == 1
        cc = np.repeat(c[:, None], cap + 1, axis=1)
        nnn = np.repeat(nn[:, None], cap + 1, axis=1)
        mm = np.broadcast_to(m, cc.shape)
        lo = nested_open_probs(cc, mm, nnn, params.p, params.rho)
        m_hi = mm.copy()
        m_hi[:, cap] = np.inf
        hi = nested_open_probs(cc, m_hi, nnn, params.p, params.rho)
        return a, b, lo, hi
    if kind is Kind.DISTANCE_P1:
        r2 = ((ca - cb) ** 2).sum(axis=1)
        k1 = k1_from_sqdist(r2, params.z, model.delta_for(params))
        q = distance_channel_prob(k1, params.p, params.rho)
        gate = m[None, :] >= k1[:, None]
        lo = np.where(gate, q[:, None], 0.0)
        hi = lo.copy()
        hi[:, cap] = q
        return a, b, lo, hi
    raise ValueError(f"no height enumeration for {kind.value}")


def exact_connection_prob(box: Box, source, target, params: Params,
                          model: ModelKind | None = None,
                          trunc: TruncationSpec | None = None,
                          budget: float = DEFAULT_BUDGET) -> OracleValue:
    """Probability that ``source`` and ``target`` are joined by open edges.

    Exact sum over capped height configurations and all edge outcomes.  The
    result is a bracket ``[lower, upper]``; it collapses to a point when no
    pair probability changes above the cap.  With the
    ``exact-tail-absorbed`` policy a non-degenerate bracket is an error.
    """
    model = model or ModelKind.nested()
    trunc = trunc or TruncationSpec()
    if box.dim != params.d:
        raise InvalidParameter("box dimension differs from params.d")
    n = box.n_vertices
    s = int(box.index(source)) if not np.isscalar(source) else int(source)
    t = int(box.index(target)) if not np.isscalar(target) else int(target)
    if s == t:
        return OracleValue(1.0, 1.0, 1.0)
    if n > 20:
        raise BudgetExceeded(f"{n} vertices: subset recursion needs n <= 20")
    per_conf = 3.0 ** (n - 1) + 2.0 ** n * n
    if model.kind in (Kind.DIRECTED_PAIR_P2, Kind.LONG_RANGE_Q):
        if per_conf > budget:
            raise BudgetExceeded(f"reliability on {n} vertices exceeds budget {budget:g}")
        a, b = all_pairs(box)
        coords = box.coords()
        q = independent_edge_probs(model, params, coords[b] - coords[a])
        P = np.zeros((n, n))
        P[a, b] = q
        P[b, a] = q
        r = two_terminal_reliability(P, s, t)
        return OracleValue(r, r, r)
    if model.kind is Kind.YUKICH:
        raise ValueError("Yukich connection probabilities are not enumerated")
    if params.alpha == 1:
        # every height is infinite: one configuration
        cap = 1
        a, b, lo, hi = _pair_tables(box, model, params, cap)
        P = np.zeros((n, n))
        P[a, b] = hi[:, cap]
        P[b, a] = hi[:, cap]
        r = two_terminal_reliability(P, s, t)
        return OracleValue(r, r, r)
    cap = trunc.height_cap
    n_conf = float(cap + 1) ** n
    if n_conf * per_conf > budget:
        raise BudgetExceeded(
            f"{n_conf:.3g} height configurations x {per_conf:.3g} steps exceeds "
            f"budget {budget:g}; lower the height cap or the box")
    a, b, lo, hi = _pair_tables(box, model, params, cap)
    w = _height_weights(params.alpha, cap)
    r_lo, r_hi = _enumerate_heights(lo, hi, a, b, n, cap + 1, w, s, t,
                                    _mirror_perm(box, s, t))
    lower, upper = min(r_lo, r_hi), max(r_lo, r_hi)
    if trunc.tail_policy == "exact-tail-absorbed" and upper - lower > 1e-13:
        raise ValueError("pair probabilities change above the height cap; "
                         "use the capped-and-flagged policy")
    return OracleValue(0.5 * (lower + upper), lower, upper)


# -- degree law ---------------------------------------------------------------

def nn_level_law(z: int, k: int):
    """Joint law of ``(level(v, v+e), level(v, v-e))`` for one axis.

    With base-``z`` digits of the coordinate, ``level(v, v+e) = 1 + T+`` where
    ``T+`` counts trailing digits equal to ``z - 1``, and ``level(v, v-e) =
    1 + T-`` with trailing zeros.  ``T+ >= 1`` and ``T- >= 1`` exclude each
    other; ``P(T+ = t) = z^-t (1 - 1/z)`` for ``t >= 1``.  Levels above
    ``k`` are merged into ``k + 1``.
    """
    law = {}

    def add(key, pr):
        key = (min(key[0], k + 1), min(key[1], k + 1))
        law[key] = law.get(key, 0.0) + pr

    add((1, 1), (z - 2) / z)
    for t in range(1, k + 1):
        pr = z ** -t * (1 - 1 / z)
        add((1 + t, 1), pr)
        add((1, 1 + t), pr)
    # P(T+ >= k + 1) = sum_{t > k} z^-t (1 - 1/z) = z^-(k+1)
    tail = z ** -float(k + 1)
    add((k + 2, 1), tail)
    add((1, k + 2), tail)
    return law


def _annulus_counts_law(d: int, z: int, k: int):
    """Law of ``(a_1, .., a_k)``: neighbours of ``v`` whose community level is ``j``."""
    axis = nn_level_law(z, k)
    out = {tuple([0] * k): 1.0}
    for _ in range(d):
        nxt = {}
        for a, pa in out.items():
            for (lp, lm), pr in axis.items():
                b = list(a)
                for lvl in (lp, lm):
                    if lvl <= k:
                        b[lvl - 1] += 1
                key = tuple(b)
                nxt[key] = nxt.get(key, 0.0) + pa * pr
        out = nxt
    return out


def _cond_ccdf(params: Params, k: int, h: int, a_counts) -> float:
    """``P(D >= h | X_v = k, neighbour levels)``."""
    d, z, alpha = params.d, params.z, params.alpha
    need = h - 2 * d
    if need <= 0:
        return 1.0
    pmf = np.zeros(need)
    pmf[0] = 1.0
    for j in range(1, k + 1):
        n_j = z ** (d * j) - z ** (d * (j - 1)) - a_counts[j - 1]
        comp = stats.binom.pmf(np.arange(need), n_j, alpha ** -j)
        pmf = np.convolve(pmf, comp)[:need]
    return float(max(0.0, 1.0 - math.fsum(pmf)))


def exact_degree_ccdf(params: Params, h: int, trunc: TruncationSpec | None = None,
                      tol: float = 1e-13, budget: float = 1e7) -> OracleValue:
    """``P(D_v >= h)`` for a vertex far from the box boundary.

    Conditioning on ``X_v = k``, the partners in the annulus of level ``j <= k``
    are binomial with success probability ``alpha^-j``, independent over
    levels; lattice neighbours are always partners and are removed from the
    annulus they fall in.  The neighbour positions follow the trailing-digit
    law of :func:`nn_level_law`.  Heights above the cap contribute a bracket
    (conditional probability between its value at the cap and 1).
    """
    if params.alpha == 1:
        raise InvalidParameter("degree is infinite when alpha = 1")
    d, alpha = params.d, params.alpha
    if h <= 2 * d:
        return OracleValue(1.0, 1.0, 1.0)
    cap = trunc.height_cap if trunc else 64
    total = 0.0
    k = 0
    cond = 0.0
    while k < cap:
        law = _annulus_counts_law(d, params.z, k)
        if len(law) * h * max(k, 1) > budget:
            raise BudgetExceeded("degree enumeration exceeds budget")
        cond = math.fsum(pr * _cond_ccdf(params, k, h, a) for a, pr in law.items())
        total += alpha ** -k * (1 - 1 / alpha) * cond
        tail = alpha ** -float(k + 1)
        if tail * (1 - cond) < tol or tail < tol:
            break
        k += 1
    tail = alpha ** -float(k + 1)
    # P(D >= h | X) is nondecreasing in X
    lower = total + tail * cond
    upper = total + tail
    return OracleValue(0.5 * (lower + upper), lower, upper)


# -- cache ----------------------------------------------------------------------

def cache_dir() -> Path:
    base = os.environ.get(CACHE_ENV)
    return Path(base) if base else Path.home() / ".cache" / "nestedsir"


def param_key(name: str, **kw) -> str:
    """Canonical hash of an oracle call."""
    def norm(v):
        if isinstance(v, (Params, TruncationSpec)):
            return asdict(v)
        if isinstance(v, ModelKind):
            return {"kind": v.kind.value, "delta": v.delta, "s": v.s, "beta": v.beta}
        if isinstance(v, Box):
            return [v.side, v.dim]
        if isinstance(v, np.ndarray):
            return v.tolist()
        if isinstance(v, tuple):
            return list(v)
        return v
    blob = json.dumps({"op": name, **{k: norm(v) for k, v in sorted(kw.items())}},
                      sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:24]


def cached(name: str, compute, **kw) -> OracleValue:
    """Look up ``name(**kw)`` in the CSV cache, computing and appending on a miss."""
    key = param_key(name, **kw)
    path = cache_dir() / "oracle_cache.csv"
    if path.exists():
        with open(path, newline="") as fh:
            for row in csv.DictReader(fh):
                if row["key"] == key:
                    return OracleValue(float(row["value"]), float(row["lower"]),
                                       float(row["upper"]))
    res = compute(**kw)
    if not isinstance(res, OracleValue):
        res = OracleValue(float(res), float(res), float(res))
    path.parent.mkdir(parents=True, exist_ok=True)
    new = not path.exists()
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(["key", "op", "value", "lower", "upper"])
        w.writerow([key, name, repr(res.value), repr(res.lower), repr(res.upper)])
    return res


# -- standard tiny-instance suite -------------------------------------------------

@dataclass(frozen=True)
class TinyCase:
    name: str
    side: int
    source: tuple
    target: tuple
    params: Params
    model_name: str
    trunc: TruncationSpec = TruncationSpec()

    def model(self) -> ModelKind:
        return ModelKind.parse(self.model_name, self.params)

    def box(self) -> Box:
        return Box(self.side, self.params.d)

    def exact(self) -> OracleValue:
        return cached("exact_connection_prob", _connection_for_cache, box=self.box(),
                      source=self.source, target=self.target, params=self.params,
                      model=self.model(), trunc=self.trunc)


def _connection_for_cache(box, source, target, params, model, trunc):
    return exact_connection_prob(box, source, target, params, model, trunc)


def tiny_suite():
    """Connection events on 1x2, 2x2 and 3x3 boxes exercising every enumerable model."""
    P = Params(2, 2, 2.0, 0.5, 0.5)
    P1 = Params(2, 2, 1.0, 0.5, 0.3)
    P3 = Params(2, 2, 2.0, 0.25, 0.2)
    cases = [
        TinyCase("nn-pair", 2, (0, 0), (0, 1), Params(2, 2, 2.0, 0.0, 0.3), "nested",
                 TruncationSpec(2, "exact-tail-absorbed")),
        TinyCase("nested-2x2", 2, (0, 0), (1, 1), P, "nested", TruncationSpec(8)),
        TinyCase("nested-3x3-alpha1", 3, (0, 0), (2, 2), P1, "nested"),
        TinyCase("nested-3x3", 3, (0, 0), (2, 2), P, "nested", TruncationSpec(3)),
        TinyCase("nested-3x3-b", 3, (0, 0), (2, 2), P3, "nested", TruncationSpec(3)),
        TinyCase("distance-3x3", 3, (0, 0), (2, 2), P, "distance",
                 TruncationSpec(2, "exact-tail-absorbed")),
        TinyCase("distance-3x3-b", 3, (0, 0), (2, 2), P3, "distance",
                 TruncationSpec(2, "exact-tail-absorbed")),
        TinyCase("directed-pair-3x3", 3, (0, 0), (2, 2), P3, "directed-pair"),
        TinyCase("long-range-3x3", 3, (0, 0), (2, 2), P3, "long-range"),
    ]
    return cases
