"""Block backward substitution over the diagonal-block structure.

Both solvers walk the 1x1/2x2 diagonal blocks column by column (left to
right) and, within a block column, bottom to top.  The robust variant
guards every step and keeps one running scale factor for the whole of Y.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import SingularError
from .linalg import BlockPartition, QuasiTriangular, as_matrix, block_norms
from .robust import LARGEST, OverflowConfig, Scale

__all__ = ["SolveResult", "solve_nonrobust", "solve_robust_scalar"]


@dataclass
class SolveResult:
    """Solution of ``A Y + Y B = alpha * C``.

    Attributes
    ----------
    scale : Scale
        The scaling factor alpha, kept with an unbounded exponent range.
    Y : ndarray
        The scaled solution; every block has inf-norm at most omega.
    events : int
        Number of guards that returned a factor below 1.
    peak : float
        Largest block inf-norm observed during the solve (only filled in
        when tracing was requested, else 0).
    min_local_alpha : Scale, optional
        Smallest tile scale before the final reduction (tiled solver).
    """

    scale: Scale
    Y: np.ndarray
    events: int = 0
    peak: float = 0.0
    min_local_alpha: Scale = None

    @property
    def alpha(self) -> float:
        """alpha as a double; 0.0 if it lies below the double range."""
        return float(self.scale)

    @property
    def log2_alpha(self) -> float:
        return self.scale.log2()

    def unscaled(self) -> np.ndarray:
        """``Y / alpha``; overflows to inf when the true solution does."""
        with np.errstate(over="ignore"):
            return np.ldexp(self.Y / self.scale.mantissa, -self.scale.exponent)

    def rescaled_to(self, other: Scale) -> np.ndarray:
        """``Y * other / alpha``: this solution expressed at scale `other`."""
        r = other.ratio(self.scale)
        return self.Y * r if r != 1.0 else self.Y.copy()


def _prepare(A, B, C):
    A = QuasiTriangular.from_matrix(A)
    B = QuasiTriangular.from_matrix(B)
    Y = as_matrix(C, copy=True)
    if Y.shape != (A.n, B.n):
        raise ValueError(f"C must have shape {(A.n, B.n)}, got {Y.shape}")
    if not np.all(np.isfinite(Y)):
        raise ValueError("C has non-finite entries")
    return A, B, Y


def _cuts(T: QuasiTriangular) -> np.ndarray:
    return T.block_partition().as_array()


def _check_data_bounds(A, B, Y, rc, cc, omega):
    for name, M, r, c in (("A", A.matrix, rc, rc), ("B", B.matrix, cc, cc), ("C", Y, rc, cc)):
        if M.size == 0:
            continue
        worst = float(np.max(block_norms(M, BlockPartition(tuple(r)), BlockPartition(tuple(c)))))
        if worst > omega:
            raise ValueError(f"a block of {name} has inf-norm {worst!r} > omega = {omega!r}")


def _raise_singular(pivot):
    raise SingularError(
        f"diagonal Sylvester block is singular (pivot {pivot!r}); "
        "an eigenvalue of A is (nearly) minus an eigenvalue of B", pivot=pivot)


def solve_nonrobust(A, B, C, cfg=None) -> np.ndarray:
    """Solve ``A Y + Y B = C`` by block backward substitution, unguarded.

    Entries may overflow to inf; nothing is done to prevent it.

    Parameters
    ----------
    A, B : array_like or QuasiTriangular
        Upper quasi-triangular coefficient matrices of order m and n.
    C : array_like
        Right-hand side of shape (m, n).
    cfg : OverflowConfig, optional
        Only ``smallnum`` is used (singular-pivot detection).

    Returns
    -------
    Y : ndarray
    """
    return _solve_nonrobust(A, B, C, cfg=cfg)[0]


def _solve_nonrobust(A, B, C, cfg=None, trace=False):
    cfg = OverflowConfig.coerce(cfg)
    A, B, Y = _prepare(A, B, C)
    if Y.size == 0:
        return Y, 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        status, piv, _, _, _, peak = _kernels.block_sylvester(
            A.matrix, B.matrix, Y, _cuts(A), _cuts(B), LARGEST, cfg.smallnum, False, trace)
    if status != _kernels.STATUS_OK:
        _raise_singular(piv)
    return Y, peak


def solve_robust_scalar(A, B, C, cfg=None, trace: bool = False) -> SolveResult:
    """Solve ``A Y + Y B = alpha * C`` with overflow protection.

    Every small diagonal solve, column update and row update is guarded;
    when a guard returns a factor below 1 all of Y is rescaled and the
    factor is folded into alpha.  With no guard firing the floating-point
    operations are exactly those of :func:`solve_nonrobust`.

    Parameters
    ----------
    A, B : array_like or QuasiTriangular
    C : array_like
        Every diagonal-block-sized block of A, B and C must have inf-norm
        at most omega.
    cfg : OverflowConfig or float, optional
        Overflow threshold (default: half the largest double).
    trace : bool
        Record the largest block norm reached during the solve in
        ``SolveResult.peak``.

    Returns
    -------
    SolveResult

    Raises
    ------
    SingularError
        If a diagonal block equation is singular.
    """
    cfg = OverflowConfig.coerce(cfg)
    A, B, Y = _prepare(A, B, C)
    if Y.size == 0:
        return SolveResult(Scale.one(), Y)
    rc, cc = _cuts(A), _cuts(B)
    _check_data_bounds(A, B, Y, rc, cc, cfg.omega)
    status, piv, am, ae, events, peak = _kernels.block_sylvester(
        A.matrix, B.matrix, Y, rc, cc, cfg.omega, cfg.smallnum, True, trace)
    if status != _kernels.STATUS_OK:
        _raise_singular(piv)
    return SolveResult(Scale(am, ae), Y, events=int(events), peak=float(peak))


def robust_block_solve(A, B, Y, rc, cc, cfg):
    """Guarded solve in place on (possibly strided) views; no validation.

    Returns ``(Scale, events)``.  Used by the tiled solver on diagonal tiles.
    """
    status, piv, am, ae, events, _ = _kernels.block_sylvester(
        A, B, Y, rc, cc, cfg.omega, cfg.smallnum, True, False)
    if status != _kernels.STATUS_OK:
        _raise_singular(piv)
    return Scale(am, ae), int(events)
