"""Classification of (alpha, rho) cells at a fixed transmission probability."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from ..netmodels import InvalidParameter, Params
from .crossing import crossing_estimate
from .gw import gw_root

CERTIFIED = "certified-subcritical-at-p"
PERCOLATING = "percolating-at-p"
UNCLASSIFIED = "unclassified"

SCAN_COLUMNS = ["alpha", "rho", "p", "L", "n", "crossing_freq", "ci_low", "ci_high"]


def theory_region(alpha: float, rho: float, z: int, d: int) -> str:
    """``trivial`` when ``rho > alpha / z^d`` (p_c = 0), ``nontrivial`` when
    ``rho < alpha / z^d`` (p_c > 0), ``boundary`` on the line itself."""
    edge = alpha / z ** d
    if math.isclose(rho, edge, rel_tol=1e-12, abs_tol=1e-15):
        return "boundary"
    return "trivial" if rho > edge else "nontrivial"


@dataclass
class Cell:
    alpha: float
    rho: float
    p: float
    region: str
    classification: str
    gw_root: float
    estimates: list  # CrossingEstimate per L, increasing L


def classify_cell(params: Params, L_list, n_reps: int, seed: int, workers: int = 1) -> Cell:
    """Certified subcritical when the Galton-Watson root exceeds ``p``;
    percolating when the crossing frequency grows with ``L`` beyond the
    confidence intervals; unclassified otherwise (and always on the line
    ``rho = alpha / z^d``, which no theorem covers)."""
    region = theory_region(params.alpha, params.rho, params.z, params.d)
    root = math.nan
    if region == "nontrivial" and 0 < params.rho < 1:
        try:
            root = gw_root(params)
        except InvalidParameter:
            root = math.nan
    ests = [crossing_estimate(params, L, n_reps, seed, workers=workers)
            for L in sorted(L_list)]
    if region == "boundary":
        cls = UNCLASSIFIED
    elif not math.isnan(root) and params.p < root:
        cls = CERTIFIED
    elif len(ests) >= 2 and ests[0].separated_below(ests[-1]):
        cls = PERCOLATING
    elif ests and ests[-1].ci_low > 0.5:
        cls = PERCOLATING
    else:
        cls = UNCLASSIFIED
    return Cell(params.alpha, params.rho, params.p, region, cls, root, ests)


def phase_scan(base: Params, alphas, rhos, L_list, n_reps: int, seed: int, workers: int = 1):
    cells = []
    for a in alphas:
        for r in rhos:
            cells.append(classify_cell(base.with_(alpha=float(a), rho=float(r)),
                                       L_list, n_reps, seed, workers))
    return cells


def write_scan_csv(path, cells) -> None:
    """Rows ``alpha rho p L n crossing_freq ci_low ci_high``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SCAN_COLUMNS)
        for c in cells:
            for e in c.estimates:
                w.writerow([c.alpha, c.rho, c.p, e.L, e.n, e.p_hat, e.ci_low, e.ci_high])


def write_cells_csv(path, cells) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "rho", "p", "region", "classification", "gw_root"])
        for c in cells:
            w.writerow([c.alpha, c.rho, c.p, c.region, c.classification, c.gw_root])
