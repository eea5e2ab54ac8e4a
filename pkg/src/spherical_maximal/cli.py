"""Command-line front end: ``spherical-maximal <subcommand> ...``.

Exit status is 0 when every verdict passes, 1 when a verdict fails and 2 on
usage errors. ``--figure`` writes a PNG next to the output file and
``--plotdata`` a two-column text file.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import arith, experiments, lattice, operators, reporting, sparse, symbols, weights
from .grid import GridFunction, load_grid


class UsageError(Exception):
    pass


def _int_list(s: str) -> list[int]:
    try:
        return [int(x) for x in s.split(",") if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from exc


def _exponent(s: str) -> float:
    v = float(s)
    if v < 1:
        raise argparse.ArgumentTypeError("exponents must be >= 1 (use inf for infinity)")
    return v


def _common() -> argparse.ArgumentParser:
    c = argparse.ArgumentParser(add_help=False)
    c.add_argument("--out", type=Path, help="output file (CSV or JSON)")
    c.add_argument("--format", choices=("csv", "json"), default=None,
                   help="output format (default: from the file suffix, else csv)")
    c.add_argument("--plotdata", action="store_true", help="also write a two-column .dat file")
    c.add_argument("--figure", action="store_true", help="also render a PNG next to the output")
    return c


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(prog="spherical-maximal",
                                 description="Discrete spherical averages: symbols, maximal "
                                             "operators, sparse forms and exponent experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("shells", parents=[common], help="shell counts r_d(n)")
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--nmax", type=int, required=True)
    s.add_argument("--enumerate", action="store_true", help="cross-check counts by enumeration")

    s = sub.add_parser("gauss", parents=[common], help="Gauss sum tables")
    s.add_argument("--dim", type=int, default=1)
    s.add_argument("--qmax", type=int, required=True)

    s = sub.add_parser("farey", parents=[common], help="Farey dissection arcs")
    s.add_argument("--lambda", "--Lambda", dest="Lambda", type=int, required=True)

    s = sub.add_parser("symbol", parents=[common], help="multiplier symbols at random frequencies")
    s.add_argument("--dim", type=int, default=5)
    s.add_argument("--lambda2", type=int, required=True)
    s.add_argument("--Lambda", type=int, required=True)
    s.add_argument("--kind", choices=("exact", "circle", "main", "residual"), default="residual")
    s.add_argument("--samples", type=int, default=20)
    s.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("maximal", parents=[common], help="dyadic maximal operator on one input")
    s.add_argument("--dim", type=int, default=5)
    s.add_argument("--Lambda", type=int, required=True)
    s.add_argument("--input", default="delta",
                   help="delta | shell | ball | random:SEED | file:PATH")
    s.add_argument("--p", type=_exponent, default=2.0)
    s.add_argument("--rprime", type=_exponent, default=2.0)

    s = sub.add_parser("sparse", parents=[common], help="stopping collections and sparse constants")
    s.add_argument("--dim", type=int, default=5)
    s.add_argument("--p", type=_exponent, required=True)
    s.add_argument("--r", type=_exponent, required=True)
    s.add_argument("--corpus", default="random:4:8",
                   help="random:COUNT:SIDE[:SEED] or structured:SIDE")
    s.add_argument("--Lambda-max", dest="Lambda_max", type=int, default=2)
    s.add_argument("--A0", type=float, default=sparse.DEFAULT_A0)

    s = sub.add_parser("weights", parents=[common], help="weighted l^2 ratios for power weights")
    s.add_argument("--dim", type=int, default=5)
    s.add_argument("--a", type=float, required=True)
    s.add_argument("--delta", type=float, default=0.1)
    s.add_argument("--Lambda", type=_int_list, default=[2, 4, 8])

    s = sub.add_parser("counterexample", parents=[common], help="grid-free counterexample suites")
    s.add_argument("suite", choices=("delta", "shell", "sparse"))
    s.add_argument("--dim", type=int, default=5)
    s.add_argument("--p", type=_exponent, required=True)
    s.add_argument("--r", type=_exponent, required=True)
    s.add_argument("--Lambda", type=_int_list, default=[8, 16, 32, 64, 128])

    s = sub.add_parser("improving", parents=[common], help="improving-bound sweep")
    s.add_argument("--dim", type=int, default=5)
    s.add_argument("--pairs", default="0.6,0.6;0.5,0.5",
                   help="semicolon-separated (1/p,1/r) pairs")
    s.add_argument("--Lambda", type=_int_list, default=[2, 4, 8])
    s.add_argument("--grid", action="store_true", help="add the grid corpus (small Lambda only)")

    s = sub.add_parser("regions", parents=[common], help="region vertices and consistency check")
    s.add_argument("--dim", type=int, default=5)
    return ap


def _fmt(args) -> str:
    if args.format:
        return args.format
    if args.out is not None and args.out.suffix == ".json":
        return "json"
    return "csv"


def _emit(args, rows, meta=None):
    if args.out is None:
        for r in rows:
            print(",".join(f"{k}={v}" for k, v in r.items()))
        return
    reporting.write_rows(args.out, rows, _fmt(args), meta)


def _sidecar(args, suffix: str) -> Path:
    base = args.out if args.out is not None else Path(f"{args.command}.csv")
    return base.with_suffix(suffix)


def _report_outputs(args, rep: experiments.ExperimentReport, ylabel="measured"):
    meta = {"experiment": rep.experiment, "params": rep.params, "slope": rep.slope,
            "reference_slope": rep.reference_slope, "tolerance": rep.tolerance,
            "passed": rep.passed, **rep.extra}
    _emit(args, rep.rows, meta)
    L = [r["Lambda"] for r in rep.rows]
    v = [r["measured"] for r in rep.rows]
    if args.plotdata:
        reporting.write_plotdata(_sidecar(args, ".dat"), L, v)
    if args.figure:
        reporting.figure_exponent_fit(_sidecar(args, ".png"), L, v, rep.slope, rep.reference_slope,
                                      title=rep.experiment, ylabel=ylabel)
    print(f"{rep.experiment}: slope {rep.slope:.4f} (reference {rep.reference_slope:.4f}) "
          f"{'PASS' if rep.passed else 'FAIL'}")
    return 0 if rep.passed else 1


# --- subcommands ---------------------------------------------------------------

def cmd_shells(args):
    counts = lattice.shell_counts(args.dim, args.nmax)
    rows = []
    ok = True
    for n in range(args.nmax + 1):
        c = int(counts[n])
        if args.enumerate:
            ok &= lattice.enumerate_shell(args.dim, n).count == c
        rows.append({"n": n, "lambda": math.sqrt(n), "count": c})
    _emit(args, rows)
    if args.plotdata:
        reporting.write_plotdata(_sidecar(args, ".dat"), range(args.nmax + 1), counts[:args.nmax + 1])
    if args.figure:
        reporting.figure_series(_sidecar(args, ".png"), list(range(args.nmax + 1)),
                                {"count": counts[:args.nmax + 1]}, title=f"r_{args.dim}(n)",
                                xlabel="n", ylabel="count")
    return 0 if ok else 1


def cmd_gauss(args):
    rows, worst = [], 0.0
    total = sum(q**args.dim * len(arith.units_mod(q)) for q in range(1, args.qmax + 1))
    if total > 2_000_000:
        raise UsageError(f"table would have {total} rows; lower --qmax or --dim")
    for q in range(1, args.qmax + 1):
        for a in arith.units_mod(q):
            tab = arith.gauss_sum_table_1d(a, q)
            vals = tab
            for _ in range(args.dim - 1):
                vals = np.multiply.outer(vals, tab)
            for idx, g in enumerate(np.ravel(vals)):
                mag = abs(g) * q ** (args.dim / 2)
                worst = max(worst, mag)
                rows.append({"q": q, "a": a, "ell_index": idx, "re": g.real, "im": g.imag,
                             "scaled_magnitude": mag})
    _emit(args, rows)
    bound = 2 ** (args.dim / 2) * (1 + 1e-9)
    if args.figure:
        qs = sorted({r["q"] for r in rows})
        mx = [max(r["scaled_magnitude"] for r in rows if r["q"] == q) for q in qs]
        reporting.figure_series(_sidecar(args, ".png"), qs, {"max q^{d/2}|G|": mx},
                                xlabel="q", ylabel="scaled magnitude")
    print(f"max q^(d/2)|G| = {worst:.6f} (bound 2^(d/2) = {2 ** (args.dim / 2):.6f})")
    return 0 if worst <= bound else 1


def cmd_farey(args):
    arcs = arith.farey_dissection(args.Lambda)
    rows = [{"a": A.a, "q": A.q, "left": float(A.left), "right": float(A.right),
             "alpha": A.alpha, "beta": A.beta, "length": A.length} for A in arcs]
    _emit(args, rows)
    total = sum(A.length for A in arcs)
    print(f"{len(arcs)} arcs, total length {total:.15f}")
    return 0 if arith.arcs_tile(arcs) else 1


def cmd_symbol(args):
    rng = np.random.default_rng(args.seed)
    X = rng.uniform(-0.5, 0.5, (args.samples, args.dim))
    rows = []
    for xi in X:
        ev = symbols.evaluate_symbol(args.kind, args.lambda2, args.Lambda, xi)
        rows.append({"kind": ev.kind, "lambda2": ev.n, "Lambda": ev.Lambda,
                     **{f"xi{i}": x for i, x in enumerate(ev.xi)},
                     "re": ev.value.real, "im": ev.value.imag, "abs": abs(ev.value)})
    _emit(args, rows, {"normalization_discrepancy":
                       symbols.normalization_discrepancy(args.dim, args.lambda2)})
    if args.figure:
        reporting.figure_series(_sidecar(args, ".png"), np.linalg.norm(X, axis=1),
                                {args.kind: [r["abs"] for r in rows]},
                                xlabel="|xi|", ylabel="modulus")
    return 0


def _load_input(spec: str, d: int, Lambda: int) -> GridFunction:
    kind, _, arg = spec.partition(":")
    if kind == "delta":
        return GridFunction.delta(d)
    if kind == "shell":
        return GridFunction.shell_indicator(d, Lambda * Lambda)
    if kind == "ball":
        return GridFunction.ball_indicator(d, float(arg) if arg else Lambda)
    if kind == "random":
        return GridFunction.random(d, 3, int(arg or 0), corner=(-1,) * d)
    if kind == "file":
        f = load_grid(arg)
        if f.d != d:
            raise UsageError(f"file holds a {f.d}-dimensional function, --dim is {d}")
        return f
    raise UsageError(f"unknown input {spec!r}")


def cmd_maximal(args):
    f = _load_input(args.input, args.dim, args.Lambda)
    Mf = operators.maximal_dyadic(f, args.Lambda)
    nf, nM = operators.lp_norm(f, args.p), operators.lp_norm(Mf, args.rprime)
    ref = args.dim * (1 / args.rprime - 1 / args.p)
    rows = [{"Lambda": args.Lambda, "input": args.input, "norm_p": nf, "norm_rprime": nM,
             "ratio": nM / nf, "bound_scale": args.Lambda ** ref}]
    _emit(args, rows)
    if args.figure:
        vals = np.sort(Mf.values.ravel())[::-1]
        vals = vals[vals > 0]
        reporting.figure_series(_sidecar(args, ".png"), np.arange(1, len(vals) + 1),
                                {"sorted values": vals}, xlabel="rank", ylabel="sup |A f|",
                                logy=True)
    return 0


def _sparse_corpus(spec: str, d: int):
    parts = spec.split(":")
    if parts[0] == "random":
        count = int(parts[1]) if len(parts) > 1 else 4
        side = int(parts[2]) if len(parts) > 2 else 8
        seed = int(parts[3]) if len(parts) > 3 else 0
        return [(GridFunction.random(d, side, seed + 2 * i, corner=(0,) * d),
                 GridFunction.random(d, side, seed + 2 * i + 1, kind="uniform", corner=(0,) * d))
                for i in range(count)]
    if parts[0] == "structured":
        side = int(parts[1]) if len(parts) > 1 else 8
        h = side // 2
        box = GridFunction.box_indicator((-h,) * d, side)
        return [(GridFunction.delta(d), box), (box, box),
                (GridFunction.ball_indicator(d, max(1, h - 1)), box)]
    raise UsageError(f"unknown corpus {spec!r}")


def cmd_sparse(args):
    params = sparse.FormParams(args.p, args.r)
    corpus = _sparse_corpus(args.corpus, args.dim)
    T = operators.make_operator(f"full:{args.Lambda_max}")
    instances, ok = [], True
    for i, (f, g) in enumerate(corpus):
        Tf = T(f)
        S = sparse.build_stopping_collection(f, g, params, args.A0, Tf=Tf)
        rep = sparse.verify_sparsity(S)
        const = sparse.pairing(Tf, g) / sparse.sparse_form(S, params, f, g)
        ok &= rep.passed
        instances.append({"instance": i, "constant": const, "sparse": rep.passed,
                          "min_ratio": rep.min_ratio, "max_overlap": rep.max_overlap,
                          "collection": S.to_dict()})
    payload = {"p": args.p, "r": args.r, "breaks_duality": params.breaks_duality,
               "constant": max(x["constant"] for x in instances), "instances": instances}
    if args.out is not None:
        if _fmt(args) == "json":
            reporting.write_json(args.out, payload)
        else:
            reporting.write_rows(args.out, [{k: v for k, v in x.items() if k != "collection"}
                                            for x in instances])
    if args.figure:
        reporting.figure_series(_sidecar(args, ".png"), [x["instance"] for x in instances],
                                {"constant": [x["constant"] for x in instances]},
                                xlabel="instance", ylabel="pairing / sparse form")
    print(f"sparse constant {payload['constant']:.4f}; all 1/2-sparse: {ok}")
    return 0 if ok else 1


def cmd_weights(args):
    rep = weights.weighted_bound_experiment(args.dim, args.a, args.delta, args.Lambda)
    _emit(args, rep.rows(), {"growth": rep.growth, "stable": rep.stable})
    if args.plotdata:
        reporting.write_plotdata(_sidecar(args, ".dat"), rep.Lambdas, rep.ratios)
    if args.figure:
        reporting.figure_series(_sidecar(args, ".png"), rep.Lambdas, rep.per_function,
                                xlabel="Lambda", ylabel="l2(w) ratio")
    print(f"a={args.a}: admissible={rep.admissible} growth={rep.growth:.4f} stable={rep.stable}")
    # the verdict: admissible weights must be stable
    return 0 if (rep.stable or not rep.admissible) else 1


def cmd_counterexample(args):
    fn = {"delta": experiments.counterexample_delta, "shell": experiments.counterexample_shell,
          "sparse": experiments.counterexample_sparse}[args.suite]
    if len(args.Lambda) < 3:
        raise UsageError("need at least three values of Lambda")
    try:
        rep = fn(args.dim, args.p, args.r, args.Lambda)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return _report_outputs(args, rep)


def cmd_improving(args):
    try:
        pairs = [tuple(float(x) for x in s.split(",")) for s in args.pairs.split(";") if s]
    except ValueError as exc:
        raise UsageError(f"bad --pairs {args.pairs!r}") from exc
    reps = experiments.improving_sweep(args.dim, pairs, args.Lambda,
                                       corpus="grid" if args.grid else "analytic")
    rows = []
    for rep in reps:
        for r in rep.rows:
            rows.append({**rep.params, **r, "slope": rep.slope, "passed": rep.passed})
    _emit(args, rows)
    if args.figure:
        series = {f"({rep.params['inv_p']:.2f},{rep.params['inv_r']:.2f})":
                  [r["measured"] for r in rep.rows] for rep in reps}
        reporting.figure_series(_sidecar(args, ".png"), args.Lambda, series, xlabel="Lambda",
                                ylabel="lower bound", logy=True)
    for rep in reps:
        print(f"{rep.params}: slope {rep.slope:.4f} reference {rep.reference_slope:.4f} "
              f"{'PASS' if rep.passed else 'FAIL'}")
    return 0 if all(r.passed for r in reps) else 1


def cmd_regions(args):
    rows = []
    regs = [experiments.region(n, args.dim) for n in ("R", "S", "T")]
    for reg in regs:
        for i, (x, y) in enumerate(reg.vertices):
            rows.append({"region": reg.name, "vertex": i, "inv_p": x, "inv_r": y})
    cons = experiments.region_consistency(args.dim)
    _emit(args, rows, cons)
    if args.figure:
        reporting.figure_regions(_sidecar(args, ".png"), regs)
    print(f"R({args.dim}) grid points: {cons['inside']}, failing the necessary condition: "
          f"{cons['violations']}")
    return 0 if cons["violations"] == 0 else 1


COMMANDS = {"shells": cmd_shells, "gauss": cmd_gauss, "farey": cmd_farey, "symbol": cmd_symbol,
            "maximal": cmd_maximal, "sparse": cmd_sparse, "weights": cmd_weights,
            "counterexample": cmd_counterexample, "improving": cmd_improving,
            "regions": cmd_regions}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
