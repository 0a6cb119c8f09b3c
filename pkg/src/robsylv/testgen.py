"""Test problems with controllable growth, and the extended relative residual."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import UndefinedResidualError
from .linalg import QuasiTriangular, as_matrix, frob_norm

__all__ = [
    "GeneratorSpec",
    "block_pattern",
    "generate_quasi_triangular",
    "generate_rhs",
    "random_quasi_triangular",
    "relative_residual",
    "sylvester_test_problem",
]

ROTATION_BLOCK = np.array([[1.0, 1.0], [-1.0, 1.0]])


def block_pattern(n: int, kind: str = "mixed") -> list:
    """Diagonal block sizes covering `n`.

    ``"mixed"`` alternates 1, 2, 1, 2, ... and ends with a 1 when a 2 would
    not fit.  ``"ones"`` gives an upper triangular matrix.
    """
    if kind == "ones":
        return [1] * n
    if kind != "mixed":
        raise ValueError(f"unknown block pattern {kind!r}; use 'mixed' or 'ones'")
    sizes, total, nxt = [], 0, 1
    while total < n:
        w = nxt if total + nxt <= n else 1
        sizes.append(w)
        total += w
        nxt = 3 - nxt
    return sizes


@dataclass(frozen=True)
class GeneratorSpec:
    """Order, diagonal magnitude, and diagonal block layout of a test matrix.

    ``pattern`` may be a sequence of block sizes (1 or 2) or one of the
    names accepted by :func:`block_pattern`.
    """

    n: int
    mu: float
    pattern: tuple = field(default="mixed")

    def __post_init__(self):
        if self.n < 0:
            raise ValueError(f"n must be non-negative, got {self.n}")
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu!r}")
        pat = self.pattern
        if isinstance(pat, str):
            pat = block_pattern(self.n, pat)
        pat = tuple(int(w) for w in pat)
        if any(w not in (1, 2) for w in pat):
            raise ValueError(f"block sizes must be 1 or 2, got {pat}")
        if sum(pat) != self.n:
            raise ValueError(f"block sizes sum to {sum(pat)}, expected n = {self.n}")
        object.__setattr__(self, "pattern", pat)


def generate_quasi_triangular(spec: GeneratorSpec) -> QuasiTriangular:
    """Ones above the diagonal blocks; ``mu`` or ``mu*[[1,1],[-1,1]]`` on them."""
    n = spec.n
    T = np.triu(np.ones((n, n)), 1)
    blocks = []
    s = 0
    for w in spec.pattern:
        if w == 1:
            T[s, s] = spec.mu
        else:
            T[s:s + 2, s:s + 2] = spec.mu * ROTATION_BLOCK
        blocks.append((s, w))
        s += w
    return QuasiTriangular(np.asfortranarray(T), blocks)


def generate_rhs(m: int, n: int) -> np.ndarray:
    """All-ones right-hand side."""
    if m < 1 or n < 1:
        raise ValueError(f"dimensions must be positive, got {(m, n)}")
    return np.ones((m, n), order="F")


def sylvester_test_problem(m, n, mu=None, nu=None, pattern="mixed"):
    """``(A, B, C)`` with diagonal magnitudes mu (A) and nu (B).

    mu and nu default to m and n, which keeps the solution small.
    """
    mu = float(m) if mu is None else mu
    nu = float(n) if nu is None else nu
    A = generate_quasi_triangular(GeneratorSpec(m, mu, pattern))
    B = generate_quasi_triangular(GeneratorSpec(n, nu, pattern))
    return A, B, generate_rhs(m, n)


def random_quasi_triangular(n: int, rng, pattern="mixed", offdiag=None) -> QuasiTriangular:
    """Random well-conditioned upper quasi-triangular matrix.

    Eigenvalues have real parts in [1, 2], so ``A Y + Y B = C`` is uniquely
    solvable for any two such matrices.  Off-diagonal entries are uniform in
    ``[-offdiag, offdiag]`` with ``offdiag = 1/n`` by default, which keeps
    the equation well conditioned at every size.
    """
    rng = np.random.default_rng(rng)
    sizes = block_pattern(n, pattern) if isinstance(pattern, str) else list(pattern)
    offdiag = 1.0 / max(n, 1) if offdiag is None else offdiag
    T = np.triu(rng.uniform(-offdiag, offdiag, (n, n)), 1)
    blocks = []
    s = 0
    for w in sizes:
        re = rng.uniform(1.0, 2.0)
        if w == 1:
            T[s, s] = re
        else:
            # [[re, b], [-c, re]] with b, c > 0 has eigenvalues re +- i*sqrt(bc)
            b, c = rng.uniform(0.5, 1.5, 2)
            T[s:s + 2, s:s + 2] = [[re, b], [-c, re]]
        blocks.append((s, w))
        s += w
    return QuasiTriangular(np.asfortranarray(T), blocks)


def relative_residual(A, B, C, Y, alpha=1.0) -> float:
    """``||alpha C - (A Y + Y B)||_F / ((||A||_F + ||B||_F) ||Y||_F + ||alpha C||_F)``.

    `alpha` may be a float or a :class:`~robsylv.robust.Scale`; a scale below
    the double range contributes ``alpha C = 0``, which changes the
    numerator by less than one rounding error of the remaining terms.

    Raises
    ------
    UndefinedResidualError
        If the denominator is zero.
    """
    A = A.matrix if isinstance(A, QuasiTriangular) else as_matrix(A)
    B = B.matrix if isinstance(B, QuasiTriangular) else as_matrix(B)
    C = as_matrix(C)
    Y = as_matrix(Y)
    aC = float(alpha) * C
    denom = (frob_norm(A) + frob_norm(B)) * frob_norm(Y) + frob_norm(aC)
    if denom == 0.0:
        raise UndefinedResidualError("residual denominator is zero (all inputs vanish)")
    R = aC - (A @ Y + Y @ B)
    return frob_norm(R) / denom
