"""Command-line front end.

Subcommands: stats, eig, optimize, bounds, asymptotics, weyl.  Outputs are
deterministic given identical flags and seed: CSV with a header row, comma
separators, LF line endings, floats at 17 significant digits.  Exit codes:
0 success, 1 validation or parse error, 2 a computed energy violated an
applicable bound.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from fractions import Fraction

from . import asymptotics as asym
from . import bounds as bounds_mod
from . import optimize as opt
from . import spectral
from .errors import MgpartError
from .graphs import MetricGraph, build_standard, parse_graph, stats

__all__ = ["main"]


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _parse_p(text: str) -> float:
    if text.lower() in ("inf", "infinity"):
        return math.inf
    p = float(text)
    if p < 1:
        raise MgpartError("p must be at least 1 or 'inf'")
    return p


def _parse_k_range(text: str) -> list[int]:
    if ".." in text:
        a, b = text.split("..", 1)
        lo, hi = int(a), int(b)
        if hi < lo:
            raise MgpartError(f"empty k range {text!r}")
        return list(range(lo, hi + 1))
    return [int(text)]


def _parse_length(text: str):
    if "/" in text:
        num, den = text.split("/", 1)
        return Fraction(int(num), int(den))
    try:
        return int(text)
    except ValueError:
        return float(text)


def _family_from_args(args) -> MetricGraph:
    fam = args.family
    if fam in ("interval", "loop"):
        return build_standard(fam, length=_parse_length(args.len))
    if fam == "star":
        total = _parse_length(args.L) if args.L is not None else int(args.m)
        return build_standard("star", m=int(args.m), total_length=total)
    if fam == "lasso":
        return build_standard("lasso", stick=_parse_length(args.stick), loop=_parse_length(args.loop))
    if fam == "dumbbell":
        return build_standard(
            "dumbbell",
            loop1=_parse_length(args.loop1),
            handle=_parse_length(args.handle),
            loop2=_parse_length(args.loop2),
        )
    if fam == "two_intervals":
        return build_standard("two_intervals", a=_parse_length(args.a))
    if fam == "windmill":
        return build_standard(
            "windmill", m=int(args.m), n=int(args.n),
            spoke=_parse_length(args.spoke), loop=_parse_length(args.loop),
        )
    if fam == "pumpkin_chain":
        bundles = []
        for tok in args.bundles.split(","):
            mult, ell = tok.split(":")
            bundles.append((int(mult), _parse_length(ell)))
        return build_standard("pumpkin_chain", bundles=bundles)
    if fam == "caterpillar":
        return build_standard(
            "caterpillar",
            bundles=[_parse_length(t) for t in args.bundles.split(",")],
            dirichlet_end=args.dirichlet_end,
        )
    raise MgpartError(f"unknown family {fam!r}")


def _load_graph(args) -> MetricGraph:
    has_file = getattr(args, "input", None) is not None
    has_family = getattr(args, "family", None) is not None
    if has_file == has_family:
        raise MgpartError("supply exactly one input: a .mg file or --family")
    if has_file:
        with open(args.input, "r", encoding="utf-8") as fh:
            return parse_graph(fh.read())
    return _family_from_args(args)


def _emit(args, text: str) -> None:
    out = getattr(args, "output", None)
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_graph_source(sub, with_family_params=True):
    sub.add_argument("input", nargs="?", help=".mg graph file")
    sub.add_argument("--family", help="catalog family instead of a file")
    if with_family_params:
        sub.add_argument("--len", default="1", help="length for interval/loop")
        sub.add_argument("-m", type=int, default=3)
        sub.add_argument("-n", type=int, default=0)
        sub.add_argument("-L", default=None, help="total length for star")
        sub.add_argument("--stick", default="1")
        sub.add_argument("--loop", default="1")
        sub.add_argument("--loop1", default="1")
        sub.add_argument("--handle", default="1")
        sub.add_argument("--loop2", default="1")
        sub.add_argument("--spoke", default="1")
        sub.add_argument("-a", default="1", help="second interval length")
        sub.add_argument("--bundles", default="1", help="pumpkin/caterpillar bundles")
        sub.add_argument("--dirichlet-end", default="left", choices=["left", "right"])
    sub.add_argument("-o", "--output", default=None)
    sub.add_argument("--threads", type=int, default=None,
                     help="worker hint; evaluation order is deterministic for any value")


def cmd_stats(args) -> int:
    g = _load_graph(args)
    st = stats(g)
    lines = ["field,value"]
    for key, val in st.as_dict().items():
        if isinstance(val, float):
            lines.append(f"{key},{_fmt(val)}")
        else:
            lines.append(f"{key},{val}")
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_eig(args) -> int:
    g = _load_graph(args)
    dirichlet = set()
    if args.dirichlet:
        dirichlet = set(args.dirichlet.split(","))
    res = spectral.eigenvalues(g, frozenset(dirichlet), count=args.count)
    lines = ["index,eigenvalue"]
    for i, lam in enumerate(res.eigenvalues, start=1):
        lines.append(f"{i},{_fmt(lam)}")
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_optimize(args) -> int:
    g = _load_graph(args)
    p = _parse_p(args.p)
    req = opt.OptimizeRequest(
        graph=g,
        k=args.k,
        p=p,
        problem=args.problem,
        klass="rigid" if args.klass == "rigid" else "connected",
        refine_tol=args.refine_tol,
        multistart=args.multistart,
        seed=args.seed,
    )
    res = opt.minimize(req)
    rep = None
    from .partition import energy as partition_energy, serialize_cut_config

    rep = partition_energy(res.partition, args.problem, p)
    lines = [
        f"energy,{_fmt(res.energy)}",
        f"energy_over_pi2,{_fmt(res.energy / math.pi**2)}",
        f"classification,{res.partition.classification}",
        f"certified,{res.certified}",
        f"evaluations,{res.evaluations}",
        "",
        serialize_cut_config(res.cut_config).rstrip("\n"),
        "",
        "cluster,length,eigenvalue",
    ]
    for idx, lam, ell in rep.per_cluster:
        lines.append(f"{idx},{_fmt(ell)},{_fmt(lam)}")
    report = bounds_mod.audit(
        res.partition.graph, args.k, p, args.problem, req.klass, res.energy
    )
    lines += ["", "audit", "name,kind,value,valid,verdict"]
    for name, kind, value, valid, verdict in report.csv_rows():
        lines.append(f"{name},{kind},{_fmt(value)},{valid},{verdict}")
    _emit(args, "\n".join(lines) + "\n")
    return 2 if report.failures() else 0


def cmd_bounds(args) -> int:
    g = _load_graph(args)
    p = _parse_p(args.p)
    ks = _parse_k_range(args.k)
    st = stats(g)
    lines = ["k,name,kind,value,valid,valid_for"]
    for k in ks:
        try:
            entries = bounds_mod.all_bounds(g, k, args.problem, st)
        except MgpartError:
            continue
        for e in entries:
            lines.append(f"{k},{e.name},{e.kind},{_fmt(e.value)},{e.valid},{e.valid_for}")
    _emit(args, "\n".join(lines) + "\n")
    return 0


def _closed_form_energy_fn(args, g: MetricGraph, family: str, problem: str):
    L = g.total_length
    if family == "star":
        m = args.m
        if problem == "dirichlet":
            return lambda k: asym.star_dirichlet_energy(m, L, k), 2
        return lambda k: asym.star_neumann_energy(m, L, k), 2
    if family == "two_intervals":
        a = _parse_length(args.a)
        if problem == "dirichlet":
            return lambda k: asym.two_interval_dirichlet_energy(a, k), 4
        return lambda k: asym.two_interval_neumann_energy(a, k), 2
    if family == "loop":
        return lambda k: math.pi**2 * k * k / (L * L), 2
    if family == "interval":
        if problem == "dirichlet":
            return lambda k: math.pi**2 * (k - 1) ** 2 / (L * L), 2
        return lambda k: math.pi**2 * k * k / (L * L), 2
    raise MgpartError(
        f"no closed-form energies for family {family!r}; "
        "asymptotics supports star, two_intervals, loop, interval"
    )


def cmd_asymptotics(args) -> int:
    g = _family_from_args(args)
    energy_fn, kmin = _closed_form_energy_fn(args, g, args.family, args.problem)
    ks = range(kmin, args.kmax + 1)
    seq = asym.ck_sequence(energy_fn, g.total_length, ks)
    est = asym.limit_points(seq, args.eps, args.tail_fraction)
    lines = ["k,energy,c_k"]
    for pt in seq:
        lines.append(f"{pt.k},{_fmt(pt.energy)},{_fmt(pt.c_k)}")
    lines += ["", "value,count"]
    for value, count in est.points:
        lines.append(f"{_fmt(value)},{count}")
    _emit(args, "\n".join(lines) + "\n")
    return 0


def cmd_weyl(args) -> int:
    g = _family_from_args(args) if args.family else _load_graph(args)
    family = args.family
    if family is None:
        raise MgpartError("weyl requires --family (closed-form energies)")
    energy_fn, kmin = _closed_form_energy_fn(args, g, family, args.problem)
    pts = [(k, energy_fn(k)) for k in range(kmin, args.kmax + 1)]
    A, B, rms = asym.weyl_fit(pts)
    _emit(args, f"A,B,rms\n{_fmt(A)},{_fmt(B)},{_fmt(rms)}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mgpart",
        description="spectral minimal partitions of compact metric graphs",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("stats", help="graph statistics table")
    _add_graph_source(s)
    s.set_defaults(fn=cmd_stats)

    s = sub.add_parser("eig", help="lowest Laplacian eigenvalues")
    _add_graph_source(s)
    s.add_argument("--dirichlet", default="", help="comma-separated Dirichlet vertex ids")
    s.add_argument("--count", type=int, default=6)
    s.set_defaults(fn=cmd_eig)

    s = sub.add_parser("optimize", help="minimal partition search")
    _add_graph_source(s)
    s.add_argument("-k", type=int, required=True)
    s.add_argument("-p", default="inf")
    s.add_argument("--problem", choices=["dirichlet", "natural"], required=True)
    s.add_argument("--class", dest="klass", choices=["rigid", "connected"], default="rigid")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--multistart", type=int, default=3)
    s.add_argument("--refine-tol", type=float, default=1e-8)
    s.set_defaults(fn=cmd_optimize)

    s = sub.add_parser("bounds", help="bound catalog per k")
    _add_graph_source(s)
    s.add_argument("-k", required=True, help="k or inclusive range a..b")
    s.add_argument("-p", default="inf")
    s.add_argument("--problem", choices=["dirichlet", "natural"], required=True)
    s.set_defaults(fn=cmd_bounds)

    s = sub.add_parser("asymptotics", help="c_k sequence and limit-set clusters")
    s.add_argument("family", choices=["star", "two_intervals", "loop", "interval"])
    s.add_argument("-m", type=int, default=3)
    s.add_argument("-L", default=None)
    s.add_argument("-a", default="1")
    s.add_argument("--len", default="1")
    s.add_argument("--problem", choices=["dirichlet", "natural"], required=True)
    s.add_argument("--kmax", type=int, default=300)
    s.add_argument("--eps", type=float, default=None)
    s.add_argument("--tail-fraction", type=float, default=0.5)
    s.add_argument("-o", "--output", default=None)
    s.add_argument("--threads", type=int, default=None)
    s.set_defaults(fn=cmd_asymptotics)

    s = sub.add_parser("weyl", help="leading Weyl coefficient fit")
    _add_graph_source(s)
    s.add_argument("--problem", choices=["dirichlet", "natural"], default="natural")
    s.add_argument("--kmax", type=int, default=500)
    s.set_defaults(fn=cmd_weyl)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "threads", None) is None:
        os.environ.get("MGPART_THREADS")  # accepted; execution is sequential
    try:
        return args.fn(args)
    except MgpartError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
