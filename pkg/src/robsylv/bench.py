"""Verification suites, timed benchmark runs, and tile-size tuning."""
from __future__ import annotations

import csv
import statistics
import time
from dataclasses import asdict, dataclass, fields

import numpy as np

from .linalg import block_norms, partition
from .robust import LARGEST, Scale
from .scalar import SolveResult, solve_nonrobust, solve_robust_scalar
from .testgen import random_quasi_triangular, relative_residual, sylvester_test_problem
from .tiled import solve_tiled_robust

SOLVERS = ("nonrobust", "robust-scalar", "robust-tiled")
EPS = 2.0 ** -53


@dataclass
class RunRecord:
    solver: str
    m: int
    n: int
    tile_size: int
    workers: int
    mu: float
    nu: float
    omega: float
    alpha: float
    alpha_log2: float
    wall_time: float
    residual: float
    min_local_alpha: float
    scaling_events: int
    rep: object = 0
    median: bool = False


CSV_FIELDS = [f.name for f in fields(RunRecord)]


def run_solver(name, A, B, C, omega=LARGEST / 2, tile_size=256, workers=None) -> SolveResult:
    """Dispatch to one of the three solvers; always returns a SolveResult."""
    if name == "nonrobust":
        return SolveResult(Scale.one(), solve_nonrobust(A, B, C))
    if name == "robust-scalar":
        return solve_robust_scalar(A, B, C, omega)
    if name == "robust-tiled":
        return solve_tiled_robust(A, B, C, tile_size, omega, workers=workers)
    raise ValueError(f"unknown solver {name!r}; choose from {', '.join(SOLVERS)}")


def warm_up():
    """Trigger compilation (or cache loading) of the compiled kernels."""
    A, B, C = sylvester_test_problem(6, 5)
    for name in SOLVERS:
        run_solver(name, A, B, C, tile_size=2)
    solve_tiled_robust(A, B, C, 2, 1e4, workers=2)


def kronecker_solution(A, B, C) -> np.ndarray:
    """Reference solution from the dense (m*n)-order Kronecker system."""
    A = getattr(A, "matrix", A)
    B = getattr(B, "matrix", B)
    m, n = np.shape(C)
    K = np.zeros((m * n, m * n))
    # column j of Y couples to column t through B[t, j]
    for j in range(n):
        K[j * m:(j + 1) * m, j * m:(j + 1) * m] += A
        for t in range(n):
            if B[t, j] != 0.0:
                K[j * m:(j + 1) * m, t * m:(t + 1) * m] += B[t, j] * np.eye(m)
    y = np.linalg.solve(K, np.asarray(C, dtype=float).reshape(-1, order="F"))
    return y.reshape((m, n), order="F")


def _rel_inf(X, ref) -> float:
    d = np.abs(X - ref).sum(axis=1).max()
    return float(d / max(np.abs(ref).sum(axis=1).max(), np.finfo(float).tiny))


# --------------------------------------------------------------------------
# verify
# --------------------------------------------------------------------------

@dataclass
class CaseReport:
    suite: str
    solver: str
    m: int
    n: int
    seed: object
    omega: float
    error: float
    residual: float
    min_local_alpha: float
    ok: bool
    note: str = ""

    def line(self) -> str:
        flag = "ok  " if self.ok else "FAIL"
        err = "-" if self.error != self.error else f"{self.error:.2e}"
        return (f"{flag} {self.suite:<8} {self.solver:<13} m={self.m:<3} n={self.n:<3} "
                f"seed={self.seed!s:<4} omega={self.omega:.3g} err={err:<8} "
                f"residual={self.residual:.2e} min_alpha=2**{self.min_local_alpha:.6g} {self.note}")


def verify(sizes=(3, 8, 17, 40), seeds=(0, 1, 2), omegas=(1e4,), mu=1e-3, nu=1e-2,
           tile_size=8, solvers=None, out=print):
    """Run the oracle, residual and bounded-tile suites.

    Parameters
    ----------
    sizes, seeds
        Square and rectangular random systems are built for every size pair
        and seed.
    omegas
        Small thresholds for the bounded-tile suite.
    solvers : dict, optional
        Maps solver names to callables ``f(A, B, C, omega, tile_size)``
        returning a SolveResult; lets tests inject broken solvers.
    out : callable
        Receives one report line per case.

    Returns
    -------
    list of CaseReport
    """
    if solvers is None:
        solvers = {name: _default_runner(name) for name in SOLVERS}
    reports = []

    def record(r):
        reports.append(r)
        if out is not None:
            out(r.line())

    huge = LARGEST
    for seed in seeds:
        for i, m in enumerate(sizes):
            n = sizes[(i + seed) % len(sizes)]
            rng = np.random.default_rng([seed, m, n])
            A = random_quasi_triangular(m, rng)
            B = random_quasi_triangular(n, rng)
            C = rng.standard_normal((m, n))
            ref = kronecker_solution(A, B, C)
            for name, f in solvers.items():
                res = f(A, B, C, huge, tile_size)
                err = _rel_inf(res.unscaled(), ref)
                resid = relative_residual(A, B, C, res.Y, res.scale)
                unit = res.scale.is_one()
                ok = err <= 1e-11 and resid <= 1e-11 and unit
                record(CaseReport("oracle", name, m, n, seed, huge, err, resid,
                                  res.scale.log2(), ok, "" if unit else "alpha != 1"))

    for m in sizes:
        A, B, C = sylvester_test_problem(m, m)
        for name, f in solvers.items():
            res = f(A, B, C, huge, tile_size)
            resid = relative_residual(A, B, C, res.Y, res.scale)
            ok = resid <= 100 * EPS * m
            record(CaseReport("residual", name, m, m, "-", huge, float("nan"), resid,
                              res.scale.log2(), ok))

    for omega in omegas:
        for m in sizes:
            A, B, C = sylvester_test_problem(m, m, mu, nu)
            for name, f in solvers.items():
                if name == "nonrobust":
                    continue
                res = f(A, B, C, omega, tile_size)
                resid = relative_residual(A, B, C, res.Y, res.scale)
                if name == "robust-tiled":
                    rows, cols = partition(A, tile_size), partition(B, tile_size)
                else:
                    rows, cols = A.block_partition(), B.block_partition()
                bounded = bool(np.all(block_norms(res.Y, rows, cols) <= omega))
                ok = resid <= 1e-12 and bounded and res.scale < 1.0
                record(CaseReport("bounded", name, m, m, "-", omega, float("nan"), resid,
                                  res.scale.log2(), ok))
    return reports


def _default_runner(name):
    def f(A, B, C, omega, tile_size):
        return run_solver(name, A, B, C, omega=omega, tile_size=tile_size)
    return f


# --------------------------------------------------------------------------
# bench and tune
# --------------------------------------------------------------------------

def bench(solver, m, n, mu=None, nu=None, tile_size=256, workers=(1,), reps=3,
          omega=LARGEST / 2, pattern="mixed", timer=time.perf_counter):
    """Timed runs of one solver; returns RunRecords (reps plus a median row).

    Only the solve is timed.  For the tiled solver each entry of `workers`
    gives one configuration; the other solvers are single-threaded and
    record ``workers = 1``.
    """
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}; choose from {', '.join(SOLVERS)}")
    mu = float(m) if mu is None else float(mu)
    nu = float(n) if nu is None else float(nu)
    A, B, C = sylvester_test_problem(m, n, mu, nu, pattern)
    if solver != "robust-tiled":
        workers = (1,)
    records = []
    for w in workers:
        runs = []
        for rep in range(reps):
            t0 = timer()
            res = run_solver(solver, A, B, C, omega, tile_size, None if w in (None, 0) else w)
            dt = timer() - t0
            with np.errstate(all="ignore"):
                resid = relative_residual(A, B, C, res.Y, res.scale)
            mla = res.min_local_alpha if res.min_local_alpha is not None else res.scale
            runs.append(RunRecord(solver, m, n, tile_size if solver == "robust-tiled" else 0,
                                  w or 1, mu, nu, omega, res.alpha, res.log2_alpha, dt, resid,
                                  float(mla), res.events, rep))
        records.extend(runs)
        mid = statistics.median(r.wall_time for r in runs)
        last = runs[-1]
        records.append(RunRecord(**{**asdict(last), "wall_time": mid, "rep": "median",
                                    "median": True}))
    return records


def tune(m, n, lo, hi, step, workers=None, reps=3, mu=None, nu=None, omega=LARGEST / 2,
         pattern="mixed", timer=time.perf_counter):
    """Time the tiled solver at tile sizes lo, lo+step, ..., <= hi.

    Returns ``(best_tile_size, records)`` where records hold every timed
    run.  The best size has the smallest median time; ties go to the
    smaller size.
    """
    if lo < 2 or hi < lo or step < 1:
        raise ValueError(f"invalid tile range [{lo}, {hi}] step {step}")
    mu = float(m) if mu is None else float(mu)
    nu = float(n) if nu is None else float(nu)
    A, B, C = sylvester_test_problem(m, n, mu, nu, pattern)
    records = []
    best = None
    for ts in range(lo, hi + 1, step):
        times = []
        for rep in range(reps):
            t0 = timer()
            res = solve_tiled_robust(A, B, C, ts, omega, workers=workers)
            dt = timer() - t0
            times.append(dt)
            records.append(RunRecord("robust-tiled", m, n, ts, workers or 1, mu, nu, omega,
                                     res.alpha, res.log2_alpha, dt,
                                     relative_residual(A, B, C, res.Y, res.scale),
                                     float(res.min_local_alpha), res.events, rep))
        med = statistics.median(times)
        if best is None or med < best[1]:
            best = (ts, med)
    return best[0], records


def write_csv(records, path_or_file):
    """Write records with a header; floats use shortest round-trip repr."""
    def fmt(v):
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, float):
            return repr(v)
        return str(v)

    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\r\n")
        w.writerow(CSV_FIELDS)
        for r in records:
            w.writerow([fmt(getattr(r, k)) for k in CSV_FIELDS])
    finally:
        if own:
            fh.close()


def read_csv(path_or_file) -> list:
    """Parse a file written by :func:`write_csv` back into RunRecords."""
    types = {f.name: f.type for f in fields(RunRecord)}
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, newline="") if own else path_or_file
    try:
        out = []
        for row in csv.DictReader(fh):
            vals = {}
            for k, v in row.items():
                t = types[k]
                if t == "float":
                    vals[k] = float(v)
                elif t == "int":
                    vals[k] = int(v)
                elif t == "bool":
                    vals[k] = v == "true"
                elif k == "rep":
                    vals[k] = int(v) if v.lstrip("-").isdigit() else v
                else:
                    vals[k] = v
            out.append(RunRecord(**vals))
        return out
    finally:
        if own:
            fh.close()


def speedup(records) -> dict:
    """Median time of 1 worker divided by median time of each worker count."""
    med = {r.workers: r.wall_time for r in records if r.median}
    base = med.get(1)
    if not base:
        return {}
    return {w: base / t for w, t in sorted(med.items()) if t > 0}
