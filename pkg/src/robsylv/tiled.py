"""Tiled robust solver with one scale factor per tile.

Y is split into an M x N grid of tiles.  Each tile carries its own scale
factor, so a guard firing on one tile rescales only that tile.  Diagonal
tile problems are solved with the scalar robust kernel, off-diagonal
contributions are applied with :func:`robsylv.robust.robust_update` (a
guarded matrix product), and a final pass brings all tiles to the smallest
scale.

The task graph is run either sequentially or on a thread pool.  A tile's
solve becomes ready once every update targeting it has finished; this is
tracked by a countdown per tile.  Every task locks exactly one tile, the
one it writes, so no lock cycle can form.
"""
from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _kernels
from .linalg import BlockPartition, QuasiTriangular, block_norms, inf_norm, partition
from .robust import OverflowConfig, Scale, _update, min_scale
from .scalar import SolveResult, _prepare, robust_block_solve

__all__ = ["TileGrid", "compute_bounds", "reduce_and_scale", "solve_tiled_robust"]

DEFAULT_TILE_SIZE = 256


def _local_cuts(blocks: BlockPartition, tiles: BlockPartition) -> list:
    cuts = np.asarray(blocks.cuts, dtype=np.int64)
    out = []
    for t in range(tiles.block_count):
        s = tiles[t]
        inner = cuts[(cuts >= s.start) & (cuts <= s.stop)]
        out.append(inner - s.start)
    return out


class TileGrid:
    """Tiles of the workspace Y with their scales, norms and locks.

    Parameters
    ----------
    A, B : QuasiTriangular
    Y : ndarray
        Workspace, initially the right-hand side; tiles are views into it.
    tile_size : int
    """

    def __init__(self, A: QuasiTriangular, B: QuasiTriangular, Y: np.ndarray, tile_size: int):
        self.A = A
        self.B = B
        self.Y = Y
        self.rows = partition(A, tile_size)
        self.cols = partition(B, tile_size)
        M, N = self.shape
        self.alpha = [[Scale.one() for _ in range(N)] for _ in range(M)]
        self.norms = block_norms(Y, self.rows, self.cols)
        self.a_bounds = np.zeros((M, M))
        self.b_bounds = np.zeros((N, N))
        self.locks = [[threading.Lock() for _ in range(N)] for _ in range(M)]
        self.row_cuts = _local_cuts(A.block_partition(), self.rows)
        self.col_cuts = _local_cuts(B.block_partition(), self.cols)

    @property
    def shape(self):
        return self.rows.block_count, self.cols.block_count

    def tile(self, k, l) -> np.ndarray:
        return self.Y[self.rows[k], self.cols[l]]

    def a_tile(self, i, k) -> np.ndarray:
        return self.A.matrix[self.rows[i], self.rows[k]]

    def b_tile(self, l, j) -> np.ndarray:
        return self.B.matrix[self.cols[l], self.cols[j]]


def _bound_row(grid, which, i):
    if which == "a":
        T, part, out = grid.A.matrix, grid.rows, grid.a_bounds
    else:
        T, part, out = grid.B.matrix, grid.cols, grid.b_bounds
    s = part[i]
    sub = BlockPartition(tuple(c - s.start for c in part.cuts[i:]))
    out[i, i:] = block_norms(T[s, s.start:], BlockPartition((0, s.stop - s.start)), sub)[0]


def compute_bounds(A, B, grid: TileGrid, pool=None) -> None:
    """Fill the upper triangular tile-norm tables of A and B.

    With a pool, one task per tile row; returns once all are done.
    """
    M, N = grid.shape
    jobs = [("a", i) for i in range(M)] + [("b", j) for j in range(N)]
    if pool is None:
        for which, i in jobs:
            _bound_row(grid, which, i)
    else:
        # barrier: wait for every bound task
        for f in [pool.submit(_bound_row, grid, which, i) for which, i in jobs]:
            f.result()


def reduce_and_scale(grid: TileGrid, pool=None):
    """Bring every tile to the smallest tile scale; returns ``(alpha, Y)``.

    Tiles already at that scale are left untouched.
    """
    M, N = grid.shape
    alpha = min_scale(a for row in grid.alpha for a in row)

    def scale_tile(k, l):
        r = alpha.ratio(grid.alpha[k][l])
        if r != 1.0:
            X = grid.tile(k, l)
            X *= r
            grid.norms[k, l] = inf_norm(X)
            grid.alpha[k][l] = alpha

    pairs = [(k, l) for k in range(M) for l in range(N)]
    if pool is None:
        for k, l in pairs:
            scale_tile(k, l)
    else:
        for f in [pool.submit(scale_tile, k, l) for k, l in pairs]:
            f.result()
    return alpha, grid.Y


def _fit_tile(X, omega):
    """Shrink X in place until ``inf_norm(X) <= omega``.

    Returns ``(factor, norm)`` with factor 1.0 when X already fits.  The
    norm is taken of ``X * 2**-e`` with ``2**e`` at least the tile width,
    so the row sums cannot overflow even when they exceed omega.
    """
    nrm = inf_norm(X)
    if nrm <= omega:
        return 1.0, nrm
    e = max(X.shape[1], 1).bit_length()
    total = 1.0
    while True:
        small = inf_norm(np.ldexp(X, -e))
        if not math.isfinite(small):
            raise FloatingPointError("tile holds non-finite entries")
        z = _kernels.SAFETY * (math.ldexp(omega, -e) / small)
        X *= z
        total *= z
        nrm = inf_norm(X)
        if nrm <= omega:
            return total, nrm


class _Solver:
    """Task bodies shared by the sequential and the threaded schedule."""

    def __init__(self, grid: TileGrid, cfg: OverflowConfig, on_release=None):
        self.grid = grid
        self.cfg = cfg
        self.on_release = on_release
        self.events = 0
        self._events_lock = threading.Lock()

    def _count(self, n):
        if n:
            with self._events_lock:
                self.events += n

    def _release(self, k, l):
        if self.on_release is not None:
            g = self.grid
            self.on_release(k, l, g.alpha[k][l], float(g.norms[k, l]))

    def solve_tile(self, k, l):
        g = self.grid
        rk, cl = g.rows[k], g.cols[l]
        with g.locks[k][l]:
            X = g.tile(k, l)
            s, ev = robust_block_solve(g.A.matrix[rk, rk], g.B.matrix[cl, cl], X,
                                       g.row_cuts[k], g.col_cuts[l], self.cfg)
            # blocks are bounded by omega; their sum over a tile row may not be
            z, g.norms[k, l] = _fit_tile(X, self.cfg.omega)
            if z != 1.0:
                s = s * z
                ev += 1
            if not s.is_one():
                g.alpha[k][l] = g.alpha[k][l] * s
            self._release(k, l)
        self._count(ev)

    def update_column(self, i, k, l):
        # Y[i, l] -= A[i, k] @ Y[k, l]
        g = self.grid
        one = Scale.one()
        with g.locks[i][l]:
            X = g.tile(i, l)
            delta, zeta = _update(X, g.alpha[i][l], g.norms[i, l],
                                  g.a_tile(i, k), one, g.a_bounds[i, k],
                                  g.tile(k, l), g.alpha[k][l], g.norms[k, l],
                                  self.cfg.omega)
            z, g.norms[i, l] = _fit_tile(X, self.cfg.omega)
            g.alpha[i][l] = delta if z == 1.0 else delta * z
            self._release(i, l)
        self._count((zeta != 1.0) + (z != 1.0))

    def update_row(self, k, l, j):
        # Y[k, j] -= Y[k, l] @ B[l, j]
        g = self.grid
        one = Scale.one()
        with g.locks[k][j]:
            X = g.tile(k, j)
            delta, zeta = _update(X, g.alpha[k][j], g.norms[k, j],
                                  g.tile(k, l), g.alpha[k][l], g.norms[k, l],
                                  g.b_tile(l, j), one, g.b_bounds[l, j],
                                  self.cfg.omega)
            z, g.norms[k, j] = _fit_tile(X, self.cfg.omega)
            g.alpha[k][j] = delta if z == 1.0 else delta * z
            self._release(k, j)
        self._count((zeta != 1.0) + (z != 1.0))

    def run_sequential(self):
        M, N = self.grid.shape
        for k in range(M - 1, -1, -1):
            for l in range(N):
                self.solve_tile(k, l)
                for i in range(k):
                    self.update_column(i, k, l)
                for j in range(l + 1, N):
                    self.update_row(k, l, j)

    def run_threaded(self, pool: ThreadPoolExecutor):
        M, N = self.grid.shape
        # tile (k, l) waits for one update from each (k', l), k' > k, and
        # from each (k, l'), l' < l
        pending = [[(M - 1 - k) + l for l in range(N)] for k in range(M)]
        state = threading.Condition()
        outstanding = [0]
        failure = []

        def submit(fn, *args):
            with state:
                outstanding[0] += 1
            pool.submit(run, fn, *args)

        def run(fn, *args):
            try:
                if not failure:
                    fn(*args)
            except BaseException as exc:  # noqa: BLE001 - re-raised in caller
                with state:
                    failure.append(exc)
            finally:
                with state:
                    outstanding[0] -= 1
                    if outstanding[0] == 0:
                        state.notify_all()

        def arrived(k, l):
            with state:
                pending[k][l] -= 1
                ready = pending[k][l] == 0
            if ready:
                submit(solve, k, l)

        def solve(k, l):
            self.solve_tile(k, l)
            for i in range(k):
                submit(col, i, k, l)
            for j in range(l + 1, N):
                submit(row, k, l, j)

        def col(i, k, l):
            self.update_column(i, k, l)
            arrived(i, l)

        def row(k, l, j):
            self.update_row(k, l, j)
            arrived(k, j)

        submit(solve, M - 1, 0)
        with state:
            while outstanding[0]:
                state.wait()
        if failure:
            raise failure[0]


def solve_tiled_robust(A, B, C, tile_size: int = DEFAULT_TILE_SIZE, cfg=None,
                       workers: int | None = None, on_release=None) -> SolveResult:
    """Solve ``A Y + Y B = alpha * C`` tile by tile with per-tile scaling.

    Parameters
    ----------
    A, B : array_like or QuasiTriangular
        Upper quasi-triangular, of order m and n.
    C : array_like
        (m, n) right-hand side.  Every tile of A, B and C must have
        inf-norm at most omega.
    tile_size : int
        Requested tile edge; tiles grow by one where a 2x2 block would
        otherwise be cut.
    cfg : OverflowConfig or float, optional
    workers : int, optional
        ``None`` runs the tasks sequentially in a fixed order (fully
        deterministic).  An integer runs them on that many threads; the
        order of updates on a tile then varies between runs.
    on_release : callable, optional
        Called as ``on_release(k, l, alpha_kl, norm_kl)`` whenever a task
        finishes writing tile (k, l), while it still holds the tile.

    Returns
    -------
    SolveResult
        ``events`` counts guards that returned a factor below 1;
        ``min_local_alpha`` is the smallest tile scale.

    Raises
    ------
    SingularError
        If a diagonal block equation is singular.  Outstanding tasks are
        abandoned.
    """
    cfg = OverflowConfig.coerce(cfg)
    A, B, Y = _prepare(A, B, C)
    if Y.size == 0:
        return SolveResult(Scale.one(), Y, min_local_alpha=Scale.one())
    grid = TileGrid(A, B, Y, tile_size)
    solver = _Solver(grid, cfg, on_release)
    if workers is None:
        compute_bounds(A, B, grid)
        _check_tiles(grid, cfg.omega)
        solver.run_sequential()
        alpha, Y = reduce_and_scale(grid)
    else:
        if workers < 1:
            raise ValueError(f"workers must be positive, got {workers}")
        with ThreadPoolExecutor(max_workers=workers) as pool:
            compute_bounds(A, B, grid, pool)
            _check_tiles(grid, cfg.omega)
            solver.run_threaded(pool)
            alpha, Y = reduce_and_scale(grid, pool)
    return SolveResult(alpha, Y, events=solver.events, min_local_alpha=alpha)


def _check_tiles(grid, omega):
    for name, table in (("A", grid.a_bounds), ("B", grid.b_bounds), ("C", grid.norms)):
        worst = float(table.max()) if table.size else 0.0
        if not worst <= omega:
            raise ValueError(f"a tile of {name} has inf-norm {worst!r} > omega = {omega!r}")
