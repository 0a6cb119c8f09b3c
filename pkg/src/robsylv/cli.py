"""Command-line driver: ``robsylv {verify,bench,tune,solve}``."""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import bench as B
from .linalg import QuasiTriangular, read_matrix, write_matrix
from .robust import LARGEST
from .testgen import relative_residual


def _floats(text):
    return [float(x) for x in text.split(",") if x]


def _ints(text):
    return [int(x) for x in text.split(",") if x]


def _common(p, omega_list=False):
    p.add_argument("--m", type=int, default=256)
    p.add_argument("--n", type=int, default=None, help="defaults to --m")
    p.add_argument("--mu", type=_floats, default=None,
                   help="diagonal magnitude of A (comma list to sweep); default m")
    p.add_argument("--nu", type=float, default=None, help="diagonal magnitude of B; default n")
    if omega_list:
        p.add_argument("--omega", type=_floats, default=[1e4],
                       help="comma list of overflow thresholds for the bounded suite")
    else:
        p.add_argument("--omega", type=float, default=LARGEST / 2)
    p.add_argument("--tile-size", type=int, default=256)
    p.add_argument("--workers", type=_ints, default=None,
                   help="thread counts (comma list); omitted = sequential")
    p.add_argument("--reps", type=int, default=3)
    p.add_argument("--seed", type=_ints, default=[0, 1, 2])
    p.add_argument("--csv", default=None, help="write records to this path")
    p.add_argument("--pattern", choices=("mixed", "ones"), default="mixed")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="robsylv", description=(
        "Overflow-protected solvers for A Y + Y B = alpha C with quasi-triangular A, B."))
    sub = ap.add_subparsers(dest="cmd", required=True)

    v = sub.add_parser("verify", help="oracle, residual and bounded-tile suites")
    _common(v, omega_list=True)
    v.add_argument("--sizes", type=_ints, default=[3, 8, 17, 40])
    v.set_defaults(tile_size=8)

    b = sub.add_parser("bench", help="timed runs, CSV output")
    _common(b)
    b.add_argument("--solver", default="robust-tiled")

    t = sub.add_parser("tune", help="sweep tile sizes, report the fastest")
    _common(t)
    t.add_argument("--range", dest="tile_range", type=_ints, default=[100, 612],
                   help="lo,hi of the tile sizes")
    t.add_argument("--step", type=int, default=32)

    s = sub.add_parser("solve", help="solve a system stored in matrix files")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("c")
    s.add_argument("--out", required=True, help="where to write Y")
    s.add_argument("--solver", default="robust-tiled")
    s.add_argument("--omega", type=float, default=LARGEST / 2)
    s.add_argument("--tile-size", type=int, default=256)
    s.add_argument("--workers", type=int, default=None)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "solver", None) is not None and args.solver not in B.SOLVERS:
        ap.error(f"--solver must be one of {', '.join(B.SOLVERS)}")
    if args.cmd == "solve":
        return _solve(args)
    B.warm_up()
    if args.cmd == "verify":
        return _verify(args)
    if args.cmd == "bench":
        return _bench(args)
    return _tune(args)


def _verify(args):
    mu = args.mu[0] if args.mu else 1e-3
    nu = args.nu if args.nu is not None else 1e-2
    reports = B.verify(sizes=tuple(args.sizes), seeds=tuple(args.seed), omegas=tuple(args.omega),
                       mu=mu, nu=nu, tile_size=args.tile_size)
    failed = [r for r in reports if not r.ok]
    bounded = [r.min_local_alpha for r in reports if r.suite == "bounded"]
    worst = max((r.residual for r in reports), default=0.0)
    print(f"{len(reports) - len(failed)}/{len(reports)} cases passed; "
          f"max residual {worst:.3e}", end="")
    if bounded:
        print(f"; min-local-alpha 2**{min(bounded):.6g}", end="")
    print()
    return 1 if failed else 0


def _bench(args):
    n = args.n or args.m
    mus = args.mu or [None]
    workers = args.workers or [None]
    records = []
    for mu in mus:
        records += B.bench(args.solver, args.m, n, mu, args.nu, args.tile_size, workers,
                           args.reps, args.omega, args.pattern)
    _emit(records, args.csv)
    return 0


def _tune(args):
    n = args.n or args.m
    lo, hi = (args.tile_range + args.tile_range)[:2] if len(args.tile_range) == 1 \
        else args.tile_range[:2]
    workers = args.workers[0] if args.workers else None
    best, records = B.tune(args.m, n, lo, hi, args.step, workers, args.reps,
                           args.mu[0] if args.mu else None, args.nu, args.omega, args.pattern)
    _emit(records, args.csv)
    print(f"best tile size: {best}", file=sys.stderr)
    return 0


def _emit(records, path):
    if path:
        B.write_csv(records, path)
    else:
        B.write_csv(records, sys.stdout)


def _solve(args):
    A = QuasiTriangular(read_matrix(args.a))
    Bm = QuasiTriangular(read_matrix(args.b))
    C = read_matrix(args.c)
    res = B.run_solver(args.solver, A, Bm, C, args.omega, args.tile_size, args.workers)
    write_matrix(args.out, res.Y)
    with np.errstate(all="ignore"):
        resid = relative_residual(A, Bm, C, res.Y, res.scale)
    print(f"alpha = {res.alpha!r}  (log2 alpha = {res.log2_alpha!r})")
    print(f"residual = {resid!r}  scaling events = {res.events}")
    return 0
