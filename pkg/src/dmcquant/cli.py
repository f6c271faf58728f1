"""Command-line interface.

Exit codes: 0 success (or the checked property holds), 1 the property fails
or a guarded engine refuses the input, 2 usage or I/O error, 3 numeric or
domain error. Errors are printed to stderr as one JSON object.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import statistics
import sys
import time
from pathlib import Path

import numpy as np

from . import _backend, baselines, dp as dpmod
from .channel import (
    Channel,
    ChannelError,
    PamSpec,
    check_dominance,
    discretize_pam,
    dumps_channel,
    posterior_geometry,
    read_channel,
)
from .cost import CostFamily, SegmentCostView, parse_alpha
from .idp import idp
from .oracle import random_channel, verify_segment_conditions
from .quantizer import Assignment
from .report import ALGORITHMS, alpha_gap, load_report, run_design, verify_report

OK, FAILS, USAGE, DOMAIN = 0, 1, 2, 3
DEFAULT_SEED = 0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit_error(kind: str, message: str, code: int, **extra) -> int:
    record = {"error": kind, "message": message, "exit_code": code, **extra}
    print(json.dumps(record), file=sys.stderr)
    return code


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _int_range(text: str) -> list[int]:
    lo, sep, hi = text.partition("..")
    try:
        return list(range(int(lo), int(hi) + 1)) if sep else [int(lo)]
    except ValueError:
        raise UsageError(f"bad range {text!r}; expected a..b") from None


def _alpha(text: str) -> float:
    try:
        return parse_alpha(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


# -- design -----------------------------------------------------------------------------


def _load_init(path: str, n: int, M: int) -> Assignment:
    doc = json.loads(Path(path).read_text())
    labels = doc["labels"] if isinstance(doc, dict) else doc
    a = Assignment(labels, M)
    if a.n != n:
        raise UsageError(f"initial assignment has {a.n} labels, channel has {n} outputs")
    return a


def cmd_design(args) -> int:
    channel = read_channel(args.channel)
    top = channel.n if args.alg == "klmeans" else channel.n - 1
    if not 2 <= args.M <= top:
        raise UsageError(f"--M must lie in 2..{top} for {args.alg} on {channel.n} outputs")
    init_assignment = None
    if args.alg == "idp" and args.init == "file":
        if not args.init_file:
            raise UsageError("--init file needs --init-file")
        init_assignment = _load_init(args.init_file, channel.n, args.M)
    if args.alg == "dp-smawk" and not args.assume_qi:
        report = dpmod.check_qi(SegmentCostView(channel, CostFamily(channel.px, args.alpha, args.log_base)))
        if not report.holds:
            return _emit_error(
                "qi_violation",
                "the quadrangle inequality fails on this channel; dp-smawk would not be exact. "
                "Use --alg dp (or --assume-qi to force).",
                FAILS, first_violation=list(report.first_violation), suggestion="dp")
    rep = run_design(channel, args.alg, args.M, args.alpha, args.log_base, args.seed, args.iters,
                     args.restarts, args.kl_iters, args.init, init_assignment, args.assume_qi,
                     args.order_mode)
    _write(rep.dumps(), args.out)
    return OK


def cmd_verify(args) -> int:
    channel = read_channel(args.channel)
    problems = verify_report(load_report(args.report), channel)
    print(json.dumps({"verified": not problems, "problems": problems}, indent=2))
    return OK if not problems else FAILS


# -- pam ----------------------------------------------------------------------------------


def cmd_pam(args) -> int:
    if args.levels:
        levels = tuple(float(x) for x in args.levels.split(","))
        spec = PamSpec(levels, args.sigma, args.n, args.coverage, args.lo, args.hi)
    else:
        if args.q is None:
            raise UsageError("give --q or --levels")
        spec = PamSpec.standard(args.q, args.sigma, args.n, args.spacing, coverage=args.coverage,
                                lo=args.lo, hi=args.hi)
    channel = discretize_pam(spec)
    if args.out:
        Path(args.out).write_text(dumps_channel(channel))
        print(json.dumps({"out": args.out, "q": channel.q, "n": channel.n, "levels": list(spec.levels),
                          "gamma": channel.meta["gamma"]}))
    else:
        sys.stdout.write(dumps_channel(channel))
    return OK


# -- check --------------------------------------------------------------------------------


def cmd_check(args) -> int:
    channel = read_channel(args.channel)
    if args.what == "qi":
        view = SegmentCostView(channel, CostFamily(channel.px, args.alpha, args.log_base))
        r = dpmod.check_qi(view, args.tol if args.tol is not None else dpmod.QI_TOL)
        out = {"property": "qi", "holds": r.holds, "slack_min": r.slack_min,
               "first_violation": None if r.first_violation is None else list(r.first_violation)}
        holds = r.holds
    elif args.what == "dominance":
        r = check_dominance(channel, args.tol if args.tol is not None else 1e-9, strict=args.strict)
        out = {"property": "dominance", "holds": r.holds,
               "violation": None if r.violation is None else list(r.violation)}
        holds = r.holds
    elif args.what == "collinear":
        g = posterior_geometry(channel, args.tol if args.tol is not None else 1e-9)
        out = {"property": "collinear", "holds": g.collinear, "sequential": g.sequential,
               "degenerate": g.degenerate, "residual": g.residual,
               "t": None if g.t is None else g.t.tolist()}
        holds = g.collinear
    else:
        r = verify_segment_conditions(channel, args.tol if args.tol is not None else 1e-9)
        out = {"property": "segment", "holds": r.consistent, **r.as_dict()}
        holds = r.consistent
    print(json.dumps(out, indent=2))
    return OK if holds else FAILS


# -- compare ------------------------------------------------------------------------------


COMPARE_ALGS = ("dp", "dp-yao", "dp-smawk", "gc", "gc-heap", "klmeans", "idp-gc", "idp-klmeans")


def compare_gaps(channel: Channel, Ms, algs, alpha: float = 1.0, seed: int = DEFAULT_SEED,
                 restarts: int = 100, kl_iters: int = 100, idp_iters: int = 50,
                 order_mode: str = "random") -> list[dict]:
    """MI gap (bits; alpha-MI gap for alpha != 1) of every algorithm at every M."""
    cost = CostFamily(channel.px, alpha)
    view = SegmentCostView(channel, cost)
    rows = []
    for M in Ms:
        row = {"M": M}
        cache: dict[str, Assignment] = {}

        def get(name):
            if name not in cache:
                if name.startswith("dp"):
                    sol = dpmod.solve(view, M, name, qi=None)
                    cache[name] = Assignment.from_boundaries(sol.boundaries)
                elif name in ("gc", "gc-heap"):
                    cache[name] = baselines.run_gc(channel, cost, M, heap=name == "gc-heap").assignment
                elif name == "klmeans":
                    cache[name] = baselines.kl_means(channel, M, restarts, kl_iters, seed)
                else:
                    init = get("gc-heap" if name == "idp-gc" else "klmeans")
                    cache[name] = idp(channel, cost, M, init, idp_iters, order_mode, seed)[0]
            return cache[name]

        for name in algs:
            row[name] = alpha_gap(channel, get(name), alpha)
        rows.append(row)
    return rows


def cmd_compare(args) -> int:
    channel = read_channel(args.channel)
    algs = [a.strip() for a in args.algs.split(",") if a.strip()]
    bad = [a for a in algs if a not in COMPARE_ALGS]
    if bad:
        raise UsageError(f"unknown algorithm(s) {bad}; choose from {', '.join(COMPARE_ALGS)}")
    Ms = _int_range(args.M_range)
    if not Ms or Ms[0] < 2 or Ms[-1] >= channel.n:
        raise UsageError(f"M range must lie in 2..{channel.n - 1}")
    rows = compare_gaps(channel, Ms, algs, args.alpha, args.seed, args.restarts, args.kl_iters,
                        args.iters, args.order_mode)
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=args.delimiter, lineterminator="\n")
    w.writerow(["M", *algs])
    for row in rows:
        w.writerow([row["M"], *(repr(float(row[a])) for a in algs)])
    _write(buf.getvalue(), args.out)
    return OK


# -- bench --------------------------------------------------------------------------------


BENCH_ALGS = ("dp", "dp-yao", "dp-smawk", "gc", "gc-heap")


def bench_channel(source: str, q: int, n: int, seed: int) -> Channel:
    if source == "pam":
        return discretize_pam(PamSpec.standard(q, 1.0, n))
    return random_channel(np.random.default_rng(seed), q, n)


def bench(channel: Channel, M: int, algs, reps: int = 5, alpha: float = 1.0) -> list[dict]:
    """Median wall-clock of each algorithm; DP engines run with QI assumed (checked once, untimed)."""
    cost = CostFamily(channel.px, alpha)
    view = SegmentCostView(channel, cost)
    qi = None
    out = []
    for name in algs:
        if name in ("dp-yao", "dp-smawk") and qi is None:
            qi = dpmod.check_qi(view)
            if not qi.holds:
                raise dpmod.QiViolation(f"{name} needs the quadrangle inequality, which fails here")
        times, counters = [], {}
        for _ in range(reps):
            t0 = time.perf_counter()
            if name.startswith("dp"):
                res = dpmod.solve(view, M, name, qi=True)
                counters = {"w_evals": res.counters["w_evals"]}
            else:
                res = baselines.run_gc(channel, cost, M, heap=name == "gc-heap")
                counters = {"loss_evals": res.loss_evals}
            times.append(time.perf_counter() - t0)
        out.append({"alg": name, "median_s": statistics.median(times), "reps": reps, **counters})
    return out


def cmd_bench(args) -> int:
    algs = [a.strip() for a in args.algs.split(",") if a.strip()]
    bad = [a for a in algs if a not in BENCH_ALGS]
    if bad:
        raise UsageError(f"unknown algorithm(s) {bad}; choose from {', '.join(BENCH_ALGS)}")
    if args.backend == "compiled" and not _backend.HAVE_COMPILED:
        raise UsageError("compiled kernels are not available; build the extension or use --backend python")
    channel = bench_channel(args.source, args.q, args.n, args.seed)
    with _backend.use(args.backend or _backend.active()):
        name = _backend.active()
        rows = bench(channel, args.M, algs, args.reps, args.alpha)
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=args.delimiter, lineterminator="\n")
    w.writerow(["alg", "backend", "q", "n", "M", "reps", "median_s", "evals"])
    for r in rows:
        evals = r.get("w_evals", r.get("loss_evals"))
        w.writerow([r["alg"], name, args.q, args.n, args.M, r["reps"], f"{r['median_s']:.6g}", evals])
    _write(buf.getvalue(), args.out)
    return OK


# -- parser -------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dmcquant", description="Design output quantizers for discrete memoryless channels.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def cost_opts(sp):
        sp.add_argument("--alpha", type=_alpha, default=1.0, help="alpha-MI order; 'inf' allowed (default 1)")
        sp.add_argument("--log-base", type=float, default=2.0)

    d = sub.add_parser("design", help="design a quantizer and print a JSON report")
    d.add_argument("channel")
    d.add_argument("--alg", choices=ALGORITHMS, default="dp")
    d.add_argument("--M", type=int, required=True)
    cost_opts(d)
    d.add_argument("--seed", type=int, default=DEFAULT_SEED)
    d.add_argument("--iters", type=int, default=50, help="IDP iterations")
    d.add_argument("--restarts", type=int, default=100, help="KL-means restarts")
    d.add_argument("--kl-iters", type=int, default=100, help="KL-means iterations per restart")
    d.add_argument("--init", choices=("gc", "klmeans", "file"), default="gc")
    d.add_argument("--init-file", help="JSON report or label list for --init file")
    d.add_argument("--order-mode", choices=("stable", "random"), default="stable")
    d.add_argument("--assume-qi", action="store_true", help="skip the QI check for dp-yao/dp-smawk")
    d.add_argument("--out")
    d.set_defaults(func=cmd_design)

    v = sub.add_parser("verify", help="recompute a saved report against its channel")
    v.add_argument("report")
    v.add_argument("channel")
    v.set_defaults(func=cmd_verify)

    m = sub.add_parser("pam", help="write a discretized PAM/AWGN channel")
    m.add_argument("--q", type=int)
    m.add_argument("--levels", help="comma-separated amplitudes (overrides --q)")
    m.add_argument("--spacing", type=float, default=2.0)
    m.add_argument("--sigma", type=float, default=1.0)
    m.add_argument("--n", type=int, required=True)
    m.add_argument("--coverage", type=float, default=3.0, help="grid extends this many sigma past the levels")
    m.add_argument("--lo", type=float)
    m.add_argument("--hi", type=float)
    m.add_argument("--out")
    m.set_defaults(func=cmd_pam)

    c = sub.add_parser("check", help="test a structural property (exit 0 iff it holds)")
    c.add_argument("channel")
    c.add_argument("--what", choices=("qi", "dominance", "collinear", "segment"), required=True)
    cost_opts(c)
    c.add_argument("--tol", type=float)
    c.add_argument("--strict", action="store_true", help="dominance over all row/column pairs")
    c.set_defaults(func=cmd_check)

    k = sub.add_parser("compare", help="MI gap table over a range of M")
    k.add_argument("channel")
    k.add_argument("--M-range", dest="M_range", required=True, help="a..b")
    k.add_argument("--algs", default="dp,gc,klmeans")
    cost_opts(k)
    k.add_argument("--seed", type=int, default=DEFAULT_SEED)
    k.add_argument("--restarts", type=int, default=100)
    k.add_argument("--kl-iters", type=int, default=100)
    k.add_argument("--iters", type=int, default=50, help="IDP iterations")
    k.add_argument("--order-mode", choices=("stable", "random"), default="random")
    k.add_argument("--delimiter", default=",")
    k.add_argument("--out")
    k.set_defaults(func=cmd_compare)

    b = sub.add_parser("bench", help="median running time per algorithm")
    b.add_argument("--q", type=int, default=2)
    b.add_argument("--n", type=int, default=1000)
    b.add_argument("--M", type=int, default=8)
    b.add_argument("--algs", default="dp,dp-yao,dp-smawk")
    b.add_argument("--reps", type=int, default=5)
    b.add_argument("--source", choices=("pam", "random"), default="pam")
    b.add_argument("--backend", choices=("compiled", "python"))
    b.add_argument("--alpha", type=_alpha, default=1.0)
    b.add_argument("--seed", type=int, default=DEFAULT_SEED)
    b.add_argument("--delimiter", default=",")
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as e:
        return _emit_error("usage", str(e), USAGE)
    except (FileNotFoundError, IsADirectoryError, PermissionError) as e:
        return _emit_error("io", str(e), USAGE)
    except dpmod.QiViolation as e:
        return _emit_error("qi_violation", str(e), FAILS, suggestion="dp")
    except (ChannelError, ValueError, ArithmeticError) as e:
        return _emit_error(type(e).__name__, str(e), DOMAIN)


if __name__ == "__main__":
    sys.exit(main())
