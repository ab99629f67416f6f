"""Command-line entry point. Every command prints deterministic CSV or single-line JSON
and exits 0 exactly when no check failed."""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

import numpy as np

from mlsiconc import bounds, convex_distance as cd, harness, perm_stats, poly
from mlsiconc.config import load_settings
from mlsiconc.finite_space import DomainError, ProbabilityMeasure, build_space, hypercube
from mlsiconc.mlsi import certify_mlsi

EXIT_FAIL = 1
EXIT_ERROR = 2


def _dump(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), sort_keys=False)


def _space(args, settings):
    cap = settings.enumeration_cap
    if args.space == "sn":
        return build_space("sn", n=args.n, cap=cap)
    if args.space == "slice":
        if args.r is None:
            raise DomainError("--r is required for slices")
        return build_space("slice", n=args.n, r=args.r, cap=cap)
    return hypercube(args.n, cap=cap)


# -- commands ----------------------------------------------------------------

def cmd_verify_mlsi(args, settings, out) -> int:
    space = _space(args, settings)
    measure = ProbabilityMeasure.uniform(space)
    rep = certify_mlsi(measure, args.operator, args.rho, count=args.trials, seed=args.seed,
                       low=args.low, high=args.high, probes=not args.no_probes)
    out.write(_dump(rep.to_dict()) + "\n")
    return 0 if rep.passed else EXIT_FAIL


def cmd_bound_eval(args, settings, out) -> int:
    with open(args.spec) as fh:
        spec = bounds.BoundSpec.from_json(fh.read())
    if args.grid is not None:
        out.write(bounds.curve(spec, harness.parse_grid(args.grid)).to_csv())
        return 0
    raw = bounds.tail_bound(spec, args.t)
    rec = {"variant": spec.variant.value, "t": args.t, "raw": raw, "capped": min(1.0, raw)}
    if spec.note:
        rec["note"] = spec.note
    out.write(_dump(rec) + "\n")
    return 0


_PERM_TAILS = {
    # stat -> (statistic, metric for ObsDiam, exact mean)
    "ascents": ("ascents", "hamming", lambda n: (n - 1) / 2),
    "kendall": ("kendall", "kendall", lambda n: n * (n - 1) / 4),
    "footrule": ("footrule", "footrule", lambda n: (n * n - 1) / 3),
    "hamming": ("hamming", "hamming", lambda n: n - 1),
    "fixed_points": ("fixed_points", "hamming", lambda n: 1.0),
}


def _perm_obs_diam(metric: str, n: int) -> tuple[float, str]:
    try:
        return perm_stats.obs_diam_closed_form(metric, n), "closed_form"
    except perm_stats.NoClosedForm:
        return perm_stats.kendall_obs_diam_bound(n), "upper_bound"


def cmd_mc_tail(args, settings, out) -> int:
    grid = harness.parse_grid(args.grid)
    if args.stat == "druns":
        sampler = harness.SeededSampler("product", args.n, args.seed, marginals=[1 - args.p, args.p])
        mean = poly.druns_mean(args.n, args.d, args.p)
        spec = poly.druns_bound_params(args.n, args.d, args.p)
        emp = harness.empirical_tail(lambda x: poly.druns(x, args.d), sampler, args.samples, grid,
                                     center=mean, scale=float(np.sqrt(mean)))
    else:
        stat, metric, mean_fn = _PERM_TAILS[args.stat]
        sampler = harness.SeededSampler("sn", args.n, args.seed)
        diam, _ = _perm_obs_diam(metric, args.n)
        spec = bounds.BoundSpec(bounds.Variant.LOCALLY_LIPSCHITZ, obs_diam=diam)
        emp = harness.empirical_tail(lambda x: perm_stats.statistic(stat, x), sampler, args.samples,
                                     grid, center=mean_fn(args.n), two_sided=True)
    rows = harness.compare_report(emp, spec)
    text = harness.rows_to_csv(rows)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)
    return 0 if harness.violations(rows) == 0 else EXIT_FAIL


def _load_points(space, raw) -> np.ndarray:
    return space.points[np.array([space.from_json_point(p) for p in raw], dtype=np.int64)]


def cmd_convexdist(args, settings, out) -> int:
    space = _space(args, settings)
    omega = space.points[space.from_json_point(json.loads(args.point))]
    with open(args.set_file) as fh:
        A = _load_points(space, json.load(fh))
    res = cd.convex_distance(omega, A, args.tol)
    rec = {"value": res.value, "gap": res.gap, "iterations": res.iterations, "nu": res.nu.tolist(),
           "alpha": None if res.alpha is None else res.alpha.tolist()}
    out.write(_dump(rec) + "\n")
    return 0


def cmd_talagrand(args, settings, out) -> int:
    space = _space(args, settings)
    subsets = cd.random_subsets(space.cardinality, args.subsets, args.seed)
    failed = 0
    for rec in cd.talagrand_scan(space, subsets, args.kappa, tol=args.tol):
        failed += rec.certificate > 1 + 1e-8
        out.write(_dump({"set_id": rec.set_id, "mass": rec.mass, "certificate": rec.certificate,
                         "max_dt": rec.max_dt}) + "\n")
    return 0 if failed == 0 else EXIT_FAIL


def _num(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else x.numerator
    return x


def cmd_stats_moments(args, settings, out) -> int:
    if args.source == "closed_form":
        m, v = perm_stats.exact_moments(args.stat, args.n, exact=args.exact)
    else:
        m, v = perm_stats.enumerated_moments(args.stat, args.n, exact=args.exact,
                                             cap=settings.enumeration_cap)
    out.write(_dump({"stat": args.stat, "n": args.n, "mean": _num(m), "variance": _num(v),
                     "source": args.source}) + "\n")
    return 0


def cmd_obsdiam(args, settings, out) -> int:
    val = perm_stats.obs_diam(args.metric, args.n, args.mode, p=args.p)
    out.write(_dump({"metric": args.metric, "n": args.n, "mode": args.mode, "value": val}) + "\n")
    return 0


# -- parser ------------------------------------------------------------------

def _space_args(p, kinds=("sn", "slice", "product")):
    p.add_argument("--space", choices=kinds, default=kinds[0])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mlsiconc", description="mLSI and concentration checks")
    parser.add_argument("--config", help="INI file with a [mlsiconc] section")
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify").add_subparsers(dest="what", required=True)
    p = verify.add_parser("mlsi")
    _space_args(p)
    p.add_argument("--operator", default="gamma",
                   choices=["gamma", "gamma_plus", "d", "d_plus", "h", "h_plus"])
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--low", type=float, default=-3.0)
    p.add_argument("--high", type=float, default=3.0)
    p.add_argument("--no-probes", action="store_true")
    p.set_defaults(func=cmd_verify_mlsi)

    bound = sub.add_parser("bound").add_subparsers(dest="what", required=True)
    p = bound.add_parser("eval")
    p.add_argument("--spec", required=True)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--t", type=float)
    g.add_argument("--grid")
    p.set_defaults(func=cmd_bound_eval)

    mc = sub.add_parser("mc").add_subparsers(dest="what", required=True)
    p = mc.add_parser("tail")
    p.add_argument("--stat", required=True, choices=["druns", *_PERM_TAILS])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--p", type=float, default=0.5)
    p.add_argument("--samples", type=int, default=100000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--grid", default="0:5:0.25")
    p.add_argument("--out")
    p.set_defaults(func=cmd_mc_tail)

    p = sub.add_parser("convexdist")
    _space_args(p, ("sn", "slice"))
    p.add_argument("--point", required=True, help="JSON point, permutations 1-based")
    p.add_argument("--set-file", required=True, help="JSON list of points")
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_convexdist)

    p = sub.add_parser("talagrand")
    _space_args(p, ("sn", "slice"))
    p.add_argument("--subsets", type=int, default=200)
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--kappa", type=float)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_talagrand)

    stats = sub.add_parser("stats").add_subparsers(dest="what", required=True)
    p = stats.add_parser("moments")
    p.add_argument("--stat", required=True, choices=["hamming", "footrule", "spearman_sq", "kendall"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--source", choices=["closed_form", "enumeration"], default="closed_form")
    p.add_argument("--exact", action="store_true", help="rational arithmetic")
    p.set_defaults(func=cmd_stats_moments)

    p = sub.add_parser("obsdiam")
    p.add_argument("--metric", required=True, choices=[m.value for m in perm_stats.Metric])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mode", choices=["closed_form", "exhaustive"], default="closed_form")
    p.add_argument("--p", type=float, default=2.0)
    p.set_defaults(func=cmd_obsdiam)
    return parser


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    try:
        settings = load_settings(args.config)
        return args.func(args, settings, out)
    except (DomainError, bounds.BoundError, OSError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
