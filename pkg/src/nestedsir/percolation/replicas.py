"""Independent replicas and their CSV records."""
from __future__ import annotations

import csv
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields

from .. import rng as _rng
from ..lattice import Box
from ..netmodels import ModelKind, Params
from .clusters import clusters
from .graph import sample_open_graph


@dataclass(frozen=True)
class ReplicaRecord:
    seed: int
    L: int
    alpha: float
    rho: float
    p: float
    model: str
    crossing: int
    origin_size: int
    largest_fraction: float
    n_open_edges: int
    origin_boundary: int = 0


REPLICA_COLUMNS = [f.name for f in fields(ReplicaRecord)][:10]


def run_replica(side: int, model: ModelKind, params: Params, seed: int) -> ReplicaRecord:
    g = sample_open_graph(Box(side, params.d), model, params, seed)
    st = clusters(g)
    return ReplicaRecord(int(seed), side, params.alpha, params.rho, params.p,
                         model.kind.value, int(st.crossing), st.origin_size,
                         st.largest_fraction, g.n_open_edges, int(st.origin_boundary))


def _run_many(args):
    side, model, params, seeds = args
    return [run_replica(side, model, params, s) for s in seeds]


def replica_seeds(master_seed: int, n: int):
    return [int(s) for s in _rng.child_seed(master_seed, range(n))]


def run_replicas(side: int, model: ModelKind, params: Params, seeds, workers: int = 1):
    """Records in seed order; identical for any worker count."""
    seeds = list(seeds)
    if workers <= 1 or len(seeds) < 2 * workers:
        return _run_many((side, model, params, seeds))
    chunks = [seeds[i::workers] for i in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_many, [(side, model, params, c) for c in chunks]))
    by_seed = {}
    for part, chunk in zip(parts, chunks):
        for rec, s in zip(part, chunk):
            by_seed.setdefault(s, []).append(rec)
    return [by_seed[s].pop(0) for s in seeds]


def default_workers() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1


def append_replicas(path, records) -> None:
    """Append rows ``seed L alpha rho p model crossing origin_size largest_fraction
    n_open_edges``; writes the header when the file is new."""
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(REPLICA_COLUMNS)
        for r in records:
            row = asdict(r)
            w.writerow([row[c] for c in REPLICA_COLUMNS])
