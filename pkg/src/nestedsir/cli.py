"""Command-line front end.

Every subcommand reads a flat ``key = value`` config (``--config``) with
``--set key=value`` overrides, writes its outputs plus ``manifest.json`` into
``--out``, and prints a short report.

Exit status: 0 success, 2 usage error, 3 precondition violation, 4 failed check.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, apply_overrides, as_list, load_config, require
from .manifest import RunManifest, Timer, digests, host_info
from .netmodels import InvalidParameter, ModelKind, Params

EXIT_OK, EXIT_USAGE, EXIT_PRECONDITION, EXIT_CHECK = 0, 2, 3, 4


def _params(cfg, **defaults) -> Params:
    vals = {**defaults, **cfg}
    require(vals, "d", "z", "alpha", "rho", "p")
    return Params(int(vals["d"]), int(vals["z"]), float(vals["alpha"]), float(vals["rho"]),
                  float(vals["p"]), None if "delta" not in vals else float(vals["delta"]))


def _warn_region(params: Params, out):
    if params.alpha >= params.z ** params.d:
        msg = (f"warning: alpha={params.alpha:g} >= z^d={params.z ** params.d}: "
               "outside scale-free region")
        print(msg, file=sys.stderr)
        out.append(msg)


# -- subcommands -----------------------------------------------------------------

def cmd_degree_tail(cfg, args, outdir: Path):
    from .analysis.tail import sandwich_check, tail_exponent
    from .heights import sample_field, write_field
    from .lattice import Box
    from .netmodels import degree_field
    from .plotting import degree_ccdf

    require(cfg, "d", "z", "alpha", "L")
    params = _params(cfg, rho=0.0, p=0.0)
    h_range = tuple(int(h) for h in as_list(cfg.get("h_range", [16, 512])))
    if len(h_range) != 2 or not 0 < h_range[0] < h_range[1]:
        raise InvalidParameter(f"h_range must be two increasing positive integers, got {h_range}")
    probes = [int(h) for h in as_list(cfg.get("probes", [32, 64, 128]))]
    report = []
    _warn_region(params, report)
    hf = sample_field(Box(int(cfg["L"]), params.d), params.alpha, args.seed)
    if params.alpha == 1:
        raise InvalidParameter("alpha = 1 gives infinite degrees")
    df = degree_field(hf, params)
    files = [outdir / "degree_histogram.csv"]
    h, cnt, cen = df.histogram()
    with open(files[0], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["h", "count", "censored_count"])
        w.writerows(zip(h.tolist(), cnt.tolist(), cen.tolist()))
    if int(cfg.get("write_heights", 0)):
        files.append(outdir / "heights.txt")
        write_field(files[-1], hf, params.z)
    samples = df.degrees[~df.censored]
    report.append(f"uncensored vertices: {len(samples)}")
    failed = False
    try:
        target = params.gamma_minus_1
    except InvalidParameter:
        target = math.nan
    report.append(f"target gamma-1: {target:.4f}")
    try:
        fit = tail_exponent(samples, h_range, d=params.d)
    except ValueError as exc:
        report.append(f"tail fit unavailable: {exc}")
        fit = None
    if fit is not None:
        r, m = fit.regression, fit.hill
        report.append(f"gamma-1 (log-log regression, h in {list(h_range)}): "
                      f"{r.gamma_minus_1:.4f} +- {r.stderr:.4f}")
        report.append(f"gamma-1 (Hill, truncated): {m.gamma_minus_1:.4f} +- {m.stderr:.4f}")
        if fit.disagree:
            report.append("note: the two estimators differ by more than 2 joint stderr")
    if not math.isnan(target):
        for hp in probes:
            sw = sandwich_check(samples, params, hp)
            status = "skipped" if sw.skipped else ("pass" if sw.passed else "FAIL")
            failed |= not sw.passed
            report.append(f"sandwich h={hp}: ccdf*h^(gamma-1)={sw.value:.4f} "
                          f"in [{sw.low:.4f}, {sw.high:.4f}]: {status}")
    files.append(outdir / "degree_ccdf.svg")
    degree_ccdf(samples if len(samples) else [0], files[-1],
                None if fit is None else fit.regression.gamma_minus_1, h_range)
    return report, files, failed


def cmd_phase_scan(cfg, args, outdir: Path):
    from .analysis.phase import phase_scan, write_cells_csv, write_scan_csv
    from .plotting import phase_diagram

    require(cfg, "p", "alphas", "rhos")
    cfg = {"d": 2, "z": 2, **cfg}
    alphas = [float(a) for a in as_list(cfg["alphas"])]
    rhos = [float(r) for r in as_list(cfg["rhos"])]
    base = _params(cfg, alpha=2.0, rho=0.5)
    L_list = [int(L) for L in as_list(cfg.get("L_list", [32, 128]))]
    cells = phase_scan(base, alphas, rhos, L_list, int(cfg.get("n_reps", 200)), args.seed,
                       args.workers)
    files = [outdir / "phase_scan.csv", outdir / "phase_cells.csv", outdir / "phase_diagram.svg"]
    write_scan_csv(files[0], cells)
    write_cells_csv(files[1], cells)
    phase_diagram(cells, base.z, base.d, files[2], base.p)
    report = [f"{len(cells)} cells at p={base.p:g}, L={L_list}"]
    for c in cells:
        freqs = " ".join(f"L={e.L}:{e.p_hat:.3f}" for e in c.estimates)
        report.append(f"alpha={c.alpha:g} rho={c.rho:g} [{c.region}] -> {c.classification} "
                      f"(gw root {c.gw_root:.4g}; {freqs})")
    return report, files, False


def cmd_percolate(cfg, args, outdir: Path):
    from .analysis.crossing import CrossingEstimate
    from .lattice import Box
    from .percolation.graph import sample_open_graph
    from .percolation.replicas import append_replicas, replica_seeds, run_replicas

    require(cfg, "L")
    params = _params(cfg)
    report = []
    _warn_region(params, report)
    model = ModelKind.parse(str(cfg.get("model", "nested")), params)
    L, n = int(cfg["L"]), int(cfg.get("n_reps", 100))
    seeds = replica_seeds(args.seed, n)
    recs = run_replicas(L, model, params, seeds, args.workers)
    files = [outdir / "replicas.csv"]
    append_replicas(files[0], recs)
    if int(cfg.get("write_edges", 0)) and seeds:
        files.append(outdir / "edges.txt")
        sample_open_graph(Box(L, params.d), model, params, seeds[0]).write_edges(files[-1])
    k = sum(r.crossing for r in recs)
    est = CrossingEstimate.from_counts(k, n, L, params.p)
    report += [f"model {model.kind.value}, L={L}, {n} replicas",
               f"crossing frequency {est.p_hat:.4f}  95% CI [{est.ci_low:.4f}, {est.ci_high:.4f}]",
               f"mean origin cluster size {np.mean([r.origin_size for r in recs]):.2f}"]
    return report, files, False


def cmd_compare_longrange(cfg, args, outdir: Path):
    from .analysis.domination import domination_check
    from .analysis.gw import gw_bound

    require(cfg, "L")
    params = _params(cfg)
    reports = domination_check(int(cfg["L"]), params, int(cfg.get("n_reps", 200)), args.seed,
                               args.workers)
    files = [outdir / "domination.csv"]
    with open(files[0], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["event", "model", "n", "freq", "ci_low", "ci_high"])
        for rep in reports:
            for name, e in rep.estimates.items():
                w.writerow([rep.event, name, e.n, e.p_hat, e.ci_low, e.ci_high])
    try:
        gw = gw_bound(params)
        report = [f"long-range comparison s={gw.s:.4f} beta'={gw.beta_prime:.4g}; "
                  f"GW mean offspring {gw.mean_offspring:.4f}"]
    except InvalidParameter as exc:
        report = [f"no GW bound: {exc}"]
    failed = False
    for rep in reports:
        chain = " <= ".join(f"{k}:{e.p_hat:.3f}" for k, e in rep.estimates.items())
        report.append(f"{rep.event}: {chain}  [{'ordered' if rep.passed else 'VIOLATED'}]")
        failed |= not rep.passed
    return report, files, failed


def cmd_ladder(cfg, args, outdir: Path):
    from .percolation.dynamics import Outcome, ladder_outcomes, tail_all_a_probability

    params = _params(cfg)
    k_max, k0 = int(cfg.get("k_max", 12)), int(cfg.get("k0", 6))
    if not 1 <= k0 <= k_max:
        raise InvalidParameter(f"need 1 <= k0 <= k_max, got k0={k0}, k_max={k_max}")
    n = int(cfg.get("n_traces", 1000))
    codes = ladder_outcomes(params, k_max, args.seed, n)
    files = [outdir / "ladder.csv"]
    names = np.array([o.name for o in Outcome])
    with open(files[0], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["trace", "outcomes"])
        for i, row in enumerate(codes):
            w.writerow([i, "".join(names[row])])
    freq = float(np.mean(np.all(codes[:, k0 - 1:] == Outcome.A, axis=1)))
    exact = tail_all_a_probability(params, k0, k_max)
    return [f"{n} traces, levels 1..{k_max}",
            f"tail-all-A frequency from k0={k0}: {freq:.4f} (exact {exact:.4f})"], files, False


def cmd_verify(cfg, args, outdir: Path):
    from .checks import run_verify

    fault = args.fault or cfg.get("fault")
    keys = ("n_oracle", "n_coupling", "n_zero", "domination_side", "n_domination",
            "n_reed_frost", "yukich_side")
    kw = {k: int(cfg[k]) for k in keys if k in cfg}
    results = run_verify(args.seed, fault, args.workers, **kw)
    files = [outdir / "verify.csv"]
    with open(files[0], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["check", "passed", "detail"])
        for r in results:
            w.writerow([r.name, int(r.passed), r.detail])
    report = [r.line() for r in results]
    n_fail = sum(not r.passed for r in results)
    report.append(f"{len(results) - n_fail}/{len(results)} checks passed")
    return report, files, n_fail > 0


def cmd_oracle(cfg, args, outdir: Path):
    from . import oracle
    from .lattice import Box

    quantity = str(cfg.get("quantity", "connection"))
    params = _params(cfg)
    trunc = oracle.TruncationSpec(int(cfg.get("height_cap", 3)),
                                  str(cfg.get("tail_policy", "capped-and-flagged")))
    if quantity == "connection":
        require(cfg, "L", "source", "target")
        model = ModelKind.parse(str(cfg.get("model", "nested")), params)
        res = oracle.exact_connection_prob(Box(int(cfg["L"]), params.d),
                                           tuple(as_list(cfg["source"])),
                                           tuple(as_list(cfg["target"])), params, model, trunc)
    elif quantity == "edge":
        require(cfg, "u", "v")
        v = oracle.exact_edge_prob(as_list(cfg["u"]), as_list(cfg["v"]), params)
        res = oracle.OracleValue(v, v, v)
    elif quantity == "degree":
        require(cfg, "h")
        res = oracle.exact_degree_ccdf(params, int(cfg["h"]),
                                       trunc if "height_cap" in cfg else None)
    else:
        raise ConfigError(f"quantity must be connection, edge or degree, got {quantity!r}")
    files = [outdir / "oracle.csv"]
    with open(files[0], "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["quantity", "value", "lower", "upper", "exact"])
        w.writerow([quantity, repr(res.value), repr(res.lower), repr(res.upper), int(res.exact)])
    flag = "" if res.exact else "  (bracket: truncated heights)"
    return [f"{quantity}: {res.value:.12g} in [{res.lower:.12g}, {res.upper:.12g}]{flag}"], \
        files, False


COMMANDS = {
    "degree-tail": (cmd_degree_tail, "degree histogram and tail exponent of the nested network"),
    "phase-scan": (cmd_phase_scan, "classify an (alpha, rho) grid at fixed p"),
    "percolate": (cmd_percolate, "independent percolation replicas on one box"),
    "compare-longrange": (cmd_compare_longrange,
                          "Monte Carlo comparison chain nested <= P' <= P'' <= Q"),
    "ladder": (cmd_ladder, "level-by-level A/C/E ladder traces"),
    "verify": (cmd_verify, "self-check table; nonzero exit on any failure"),
    "oracle": (cmd_oracle, "exact connection, edge or degree probabilities"),
}


def build_parser() -> argparse.ArgumentParser:
    from .percolation.replicas import default_workers

    ap = argparse.ArgumentParser(prog="nestedsir", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, (_, help_) in COMMANDS.items():
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, help="key = value file, or a manifest.json")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config entry (repeatable)")
        p.add_argument("--seed", type=int, help="64-bit master seed (default: config or 0)")
        p.add_argument("--workers", type=int, default=default_workers(),
                       help="parallel replica processes")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        if name == "verify":
            p.add_argument("--fault", choices=["beta-equals-alpha"],
                           help="inject a known defect to confirm the check catches it")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    func = COMMANDS[args.command][0]
    try:
        cfg = load_config(args.config) if args.config else {}
        cfg = apply_overrides(cfg, args.set)
    except (ConfigError, OSError) as exc:
        print(f"nestedsir: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.seed is None:
        args.seed = int(cfg.get("seed", 0))
    cfg["seed"] = args.seed
    if args.workers < 1:
        print("nestedsir: usage error: --workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    args.out.mkdir(parents=True, exist_ok=True)
    from .oracle import BudgetExceeded
    from .percolation.graph import MemoryGuardError
    try:
        with Timer() as timer, warnings.catch_warnings():
            warnings.simplefilter("always")
            report, files, failed = func(cfg, args, args.out)
    except ConfigError as exc:
        print(f"nestedsir: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidParameter, MemoryGuardError, BudgetExceeded, ValueError) as exc:
        print(f"nestedsir: precondition violated: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    report_path = args.out / f"{args.command}_report.txt"
    report_path.write_text("\n".join(report) + "\n")
    files = [*files, report_path]
    RunManifest(__version__, args.command, dict(sorted(cfg.items())), args.seed, host_info(),
                round(timer.elapsed, 3), digests(files)).write(args.out / "manifest.json")
    print("\n".join(report))
    return EXIT_CHECK if failed else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
