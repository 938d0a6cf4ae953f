"""Command-line front end.

Exit codes: 0 on success, 1 when a verification fails, 2 on usage or IO errors.
Every command writes a JSON report; ``bound`` and ``simulate`` also write a CSV
curve next to it.
"""

import argparse
import datetime
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import bounds as B
from . import verify as V
from .ensembles import TAGS, EnsembleSpec, summand_moments
from .errors import MatrixTailsError
from .io import load_family, load_matrix
from .linalg import MatrixFamily

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _fmt(x):
    return format(float(x), ".17g")


def _t_grid(args, default_max=None):
    if args.t is not None:
        return np.array([args.t], dtype=np.float64)
    t_max = args.t_max if args.t_max is not None else default_max
    if t_max is None:
        raise UsageError("give --t or --t-max")
    if args.t_count < 2:
        raise UsageError("--t-count must be at least 2")
    if args.t_scale == "log":
        if args.t_min <= 0:
            raise UsageError("log grids need --t-min > 0")
        return np.geomspace(args.t_min, t_max, args.t_count)
    return np.linspace(args.t_min, t_max, args.t_count)


def _need(args, *names):
    for name in names:
        if getattr(args, name) is None:
            raise UsageError(f"--{name.replace('_', '-')} is required for this theorem")
    return [getattr(args, name) for name in names]


# ---------------------------------------------------------------------------
# bound


def _bound_values(args, t):
    th = args.theorem
    if th == "gaussian":
        sigma2, d = _need(args, "sigma2", "d")
        return B.gaussian_series_tail(sigma2, d, t, two_sided=args.two_sided), {"sigma2": sigma2, "d": d}
    if th == "rect-gaussian":
        sigma2, d1, d2 = _need(args, "sigma2", "d1", "d2")
        return B.rectangular_series_tail(sigma2, d1, d2, t), {"sigma2": sigma2, "d1": d1, "d2": d2}
    if th == "chernoff-i":
        n, d, mu_bar = _need(args, "n", "d", "mu_bar")
        vals = [B.chernoff_divergence(n, d, mu_bar, a, args.side) for a in t]
        return np.array(vals), {"n": n, "d": d, "mu_bar": mu_bar, "side": args.side}
    if th == "chernoff-ii":
        mu, R, d = _need(args, "mu", "R", "d")
        vals = [B.chernoff_multiplicative(mu, R, d, delta, args.side, args.simplified) for delta in t]
        return np.array(vals), {"mu": mu, "R": R, "d": d, "side": args.side}
    if th == "bernstein-bounded":
        sigma2, R, d = _need(args, "sigma2", "R", "d")
        form = args.form or "bennett"
        if form not in B.BernsteinBounded._fields:
            raise UsageError(f"--form must be one of {B.BernsteinBounded._fields}")
        res = B.bernstein_bounded_tail(sigma2, R, d, t)
        return getattr(res, form), {"sigma2": sigma2, "R": R, "d": d, "form": form}
    if th == "bernstein-subexp":
        sigma2, R, d = _need(args, "sigma2", "R", "d")
        form = args.form or "main"
        if form not in B.BernsteinSubexp._fields:
            raise UsageError(f"--form must be one of {B.BernsteinSubexp._fields}")
        res = B.bernstein_subexp_tail(sigma2, R, d, t)
        return getattr(res, form), {"sigma2": sigma2, "R": R, "d": d, "form": form}
    if th == "bernstein-rect":
        sigma2, R, d1, d2 = _need(args, "sigma2", "R", "d1", "d2")
        return B.bernstein_rect_tail(sigma2, R, d1, d2, t), {"sigma2": sigma2, "R": R, "d1": d1, "d2": d2}
    if th in ("azuma", "mcdiarmid"):
        sigma2, d = _need(args, "sigma2", "d")
        if th == "azuma":
            vals = B.azuma_tail(sigma2, d, t, args.conditionally_symmetric)
        else:
            vals = B.mcdiarmid_tail(sigma2, d, t)
        return vals, {"sigma2": sigma2, "d": d}
    if th == "master":
        (path,) = _need(args, "models")
        with open(path) as fh:
            raw = json.load(fh)
        models = [B.MgfModel(m["kind"], np.asarray(m["shape_matrix"], dtype=np.float64),
                             float(m.get("scale", 1.0))) for m in raw]
        res = [B.master_tail_numeric(models, x) for x in t]
        return np.array([r.bound for r in res]), {
            "models": str(path), "theta_star": [r.theta_star for r in res]}
    raise UsageError(f"unknown theorem {th!r}")


def cmd_bound(args):
    t = _t_grid(args)
    values, params = _bound_values(args, t)
    curve = B.BoundCurve(t, np.atleast_1d(values), args.theorem, params)
    if t.size == 1:
        print(_fmt(curve.values[0]))
    else:
        for x, v in zip(curve.t_grid, curve.values):
            print(f"{_fmt(x)},{_fmt(v)}")
    lines = ["t,bound_raw,bound_clipped"]
    lines += [f"{x!r},{v!r},{c!r}" for x, v, c in
              zip(curve.t_grid.tolist(), curve.values.tolist(), curve.clipped.tolist())]
    return EXIT_OK, {"curve": curve.to_dict()}, "\n".join(lines) + "\n", [
        {"theorem": args.theorem, "parameters": params}]


# ---------------------------------------------------------------------------
# ensembles


def _build_spec(args):
    if args.spec is not None:
        with open(args.spec) as fh:
            return EnsembleSpec.from_dict(json.load(fh))
    tag = args.ensemble
    if tag is None:
        raise UsageError("give --ensemble or --spec")
    if tag in ("goe", "diag_gaussian"):
        (d,) = _need(args, "dim")
        return EnsembleSpec.goe(d) if tag == "goe" else EnsembleSpec.diag_gaussian(d)
    if tag in ("coupon", "rank_one_psd"):
        d, n = _need(args, "dim", "n")
        return getattr(EnsembleSpec, tag)(d, n)
    if tag == "nonuniform_gaussian":
        (path,) = _need(args, "matrix")
        return EnsembleSpec.nonuniform_gaussian(load_matrix(path))
    if tag in ("gaussian_series", "rademacher_series", "sign_modulated"):
        (path,) = _need(args, "family")
        return getattr(EnsembleSpec, tag)(load_family(path))
    raise UsageError(f"{tag} needs --spec")


def _default_t_max(spec, statistic):
    m = summand_moments(spec)
    if not spec.zero_mean:
        return float(spec.n_summands * m.R)
    sigma = math.sqrt(float(np.linalg.eigvalsh(m.second)[-1]))
    return 5.0 * sigma * math.sqrt(math.log(2 * spec.dim) + 1.0)


def cmd_simulate(args):
    spec = _build_spec(args)
    t = _t_grid(args, default_max=None if args.t is not None or args.t_max is not None
                else _default_t_max(spec, args.stat))
    report = V.monte_carlo_tail(spec, args.stat, t, args.trials, args.seed, chunk=args.chunk)
    curve, provenance, status = None, [], EXIT_OK
    result = report.to_dict()
    if args.theorem is not None:
        curve = V.theorem_curve(spec, args.theorem, args.stat, t)
        dom = V.check_dominance(report, curve)
        result = report.to_dict(curve)
        result["dominance"] = {"pass": dom.passed, "failures": dom.failures}
        provenance.append({"theorem": args.theorem, "parameters": curve.parameters})
        if not dom.passed:
            status = EXIT_FAIL
    op = "<=" if args.stat == "lambda_min" else ">="
    for i, x in enumerate(report.t_grid):
        line = (f"P({args.stat} {op} {_fmt(x)}) = {_fmt(report.empirical[i])} "
                f"[{_fmt(report.ci_low[i])}, {_fmt(report.ci_high[i])}]")
        if curve is not None:
            line += f" bound {_fmt(curve.values[i])}"
        print(line)
    if curve is not None:
        print("dominance:", "pass" if status == EXIT_OK else "FAIL")
    return status, result, report.to_csv(curve), provenance


def cmd_mean_study(args):
    spec = _build_spec(args)
    study = V.mean_norm_study(spec, args.trials, args.seed, chunk=args.chunk)
    for key, val in study.to_dict().items():
        print(f"{key}: {val}")
    return (EXIT_OK if study.passed else EXIT_FAIL), study.to_dict(), None, []


# ---------------------------------------------------------------------------
# verification suites


def cmd_verify_lemmas(args):
    verdicts = V.lemma_suite(args.dim, args.instances, args.seed, tol=args.tol)
    for v in verdicts:
        print(f"{v.lemma_id:<11} {'pass' if v.passed else 'FAIL'}  worst={_fmt(v.worst_violation)}")
    ok = all(v.passed for v in verdicts)
    return (EXIT_OK if ok else EXIT_FAIL), {"verdicts": [v.to_dict() for v in verdicts]}, None, []


def _family_or_random(args):
    if args.family is not None:
        return load_family(args.family)
    n, d = _need(args, "n", "dim")
    if args.seed is None:
        raise UsageError("random families need --seed")
    rng = np.random.default_rng(args.seed)
    G = rng.standard_normal((n, d, d))
    return MatrixFamily("self_adjoint", G, label=f"random{n}x{d}")


def cmd_khintchine(args):
    fam = _family_or_random(args)
    rows = V.khintchine_check(fam, args.p_max)
    ok = True
    for r in rows:
        good = r.ratio <= 1.0 + args.tol
        ok &= good
        print(f"p={r.p} lhs={_fmt(r.lhs)} rhs={_fmt(r.rhs)} ratio={_fmt(r.ratio)} "
              f"{'pass' if good else 'FAIL'}")
    return (EXIT_OK if ok else EXIT_FAIL), {"rows": [r._asdict() for r in rows]}, None, []


def cmd_compare_variance(args):
    fam = _family_or_random(args)
    cmp = V.variance_comparison(fam, restarts=args.restarts, seed=args.seed)
    for key, val in cmp.to_dict().items():
        print(f"{key}: {val}")
    return (EXIT_OK if cmp.passed else EXIT_FAIL), cmp.to_dict(), None, []


# ---------------------------------------------------------------------------
# parser


def _add_grid(p):
    g = p.add_argument_group("t grid")
    g.add_argument("--t", type=float, help="single evaluation point")
    g.add_argument("--t-min", type=float, default=0.0)
    g.add_argument("--t-max", type=float)
    g.add_argument("--t-count", type=int, default=30)
    g.add_argument("--t-scale", choices=("linear", "log"), default="linear")


def _add_ensemble(p):
    p.add_argument("--ensemble", choices=TAGS)
    p.add_argument("--spec", help="ensemble spec JSON")
    p.add_argument("--dim", type=int)
    p.add_argument("--n", type=int, help="number of summands")
    p.add_argument("--family", help="coefficient family (JSON or directory of CSVs)")
    p.add_argument("--matrix", help="CSV matrix B for nonuniform_gaussian")
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--chunk", type=int, default=V.DEFAULT_CHUNK)


def build_parser():
    parser = argparse.ArgumentParser(prog="matrix-tails", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--output", help="JSON report path (CSV goes beside it)")
    parser.add_argument("--deterministic", action="store_true",
                        help="omit the timestamp so reports are byte-identical")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bound", help="evaluate a closed-form or master bound")
    p.add_argument("--theorem", choices=V.THEOREMS, required=True)
    for name in ("sigma2", "R", "mu", "mu-bar"):
        p.add_argument(f"--{name}", type=float)
    for name in ("d", "d1", "d2", "n"):
        p.add_argument(f"--{name}", type=int)
    p.add_argument("--side", choices=("lower", "upper"), default="upper")
    p.add_argument("--simplified", action="store_true")
    p.add_argument("--two-sided", action="store_true")
    p.add_argument("--conditionally-symmetric", action="store_true")
    p.add_argument("--form", help="Bernstein variant (bennett|bernstein|split or main|split)")
    p.add_argument("--models", help="JSON list of {kind, shape_matrix, scale} for master")
    _add_grid(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("simulate", help="Monte Carlo tail with optional theorem curve")
    _add_ensemble(p)
    p.add_argument("--stat", choices=V.STATISTICS, default="lambda_max")
    p.add_argument("--theorem", choices=V.THEOREMS)
    _add_grid(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("mean-study", help="expected norm against the bracket")
    _add_ensemble(p)
    p.set_defaults(func=cmd_mean_study)

    p = sub.add_parser("verify-lemmas", help="randomized lemma suite")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_verify_lemmas)

    p = sub.add_parser("khintchine", help="exact noncommutative Khintchine check")
    p.add_argument("--family")
    p.add_argument("--n", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--p-max", type=int, default=4)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=cmd_khintchine)

    p = sub.add_parser("compare-variance", help="sigma^2 vs Ahlswede-Winter vs weak variance")
    p.add_argument("--family")
    p.add_argument("--n", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--restarts", type=int, default=8)
    p.set_defaults(func=cmd_compare_variance)
    return parser


def _config(args):
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _write_reports(args, result, csv_text, provenance):
    out = Path(args.output or f"matrix_tails_{args.command.replace('-', '_')}.json")
    report = {
        "tool": "matrix_tails",
        "version": __version__,
        "command": args.command,
        "config": _config(args),
        "provenance": provenance,
        "result": result,
    }
    if not args.deterministic:
        report["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    out.write_text(json.dumps(report, sort_keys=True, indent=2) + "\n")
    if csv_text is not None:
        out.with_suffix(".csv").write_text(csv_text)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        status, result, csv_text, provenance = args.func(args)
        _write_reports(args, result, csv_text, provenance)
    except (UsageError, MatrixTailsError, OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return status


if __name__ == "__main__":
    sys.exit(main())
