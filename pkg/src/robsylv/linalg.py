"""Dense storage helpers, norms, and the quasi-triangular block partitioner.

Matrices are plain ``numpy.ndarray`` objects of dtype float64 stored in
column-major (Fortran) order.  Tiles are basic-slicing views into the parent
array, so they share memory and cost nothing to create.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

__all__ = [
    "BlockPartition",
    "QuasiTriangular",
    "as_matrix",
    "block_norms",
    "frob_norm",
    "gemm_update",
    "inf_norm",
    "partition",
    "read_matrix",
    "write_matrix",
]


def as_matrix(M, copy: bool = False) -> np.ndarray:
    """Return `M` as a 2-D float64 column-major array."""
    if copy:
        arr = np.array(M, dtype=np.float64, order="F", ndmin=2)
    else:
        arr = np.asarray(M, dtype=np.float64, order="F")
        if arr.ndim < 2:
            arr = arr.reshape((1, -1) if arr.ndim == 1 else (1, 1))
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    return arr


def inf_norm(M) -> float:
    """Maximum absolute row sum of `M`; 0 for an empty matrix."""
    M = np.asarray(M, dtype=np.float64)
    if M.size == 0:
        return 0.0
    return float(np.abs(M).sum(axis=1).max())


def frob_norm(M) -> float:
    """Frobenius norm of `M`.

    Entries are divided by the largest magnitude before squaring, so
    matrices with entries near the overflow threshold do not overflow the
    sum of squares.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.size == 0:
        return 0.0
    scale = float(np.abs(M).max())
    if scale == 0.0 or not math.isfinite(scale):
        return scale
    return scale * float(np.linalg.norm(M / scale))


def gemm_update(C: np.ndarray, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """In-place ``C <- C - A @ B``; returns `C`.

    `C` may be a view into a larger matrix.  `A` and `B` must not alias `C`.
    """
    if A.ndim != 2 or B.ndim != 2 or C.ndim != 2:
        raise ValueError("gemm_update expects 2-D operands")
    if A.shape[1] != B.shape[0] or C.shape != (A.shape[0], B.shape[1]):
        raise ValueError(
            f"shape mismatch: C{C.shape} - A{A.shape} @ B{B.shape}")
    if C.size and A.shape[1]:
        C -= A @ B
    return C


@dataclass(frozen=True)
class BlockPartition:
    """Cut points ``0 = c0 < c1 < ... < ck = n`` splitting ``range(n)``."""

    cuts: tuple

    def __post_init__(self):
        cuts = tuple(int(c) for c in self.cuts)
        if len(cuts) < 1 or cuts[0] != 0:
            raise ValueError("cuts must start at 0")
        if any(b <= a for a, b in zip(cuts, cuts[1:])):
            raise ValueError(f"cuts must be strictly increasing: {cuts}")
        object.__setattr__(self, "cuts", cuts)

    @property
    def block_count(self) -> int:
        return len(self.cuts) - 1

    @property
    def size(self) -> int:
        return self.cuts[-1]

    def __len__(self):
        return self.block_count

    def __getitem__(self, k) -> slice:
        return slice(self.cuts[k], self.cuts[k + 1])

    def sizes(self) -> list:
        return [b - a for a, b in zip(self.cuts, self.cuts[1:])]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.cuts, dtype=np.int64)


class QuasiTriangular:
    """Square upper quasi-triangular matrix with its diagonal block layout.

    Parameters
    ----------
    matrix : array_like
        The (n, n) matrix.  Stored as a column-major float64 array.
    blocks : sequence of (start, size), optional
        Diagonal blocks with ``size`` in {1, 2}.  When omitted, blocks are
        detected from the nonzero subdiagonal entries (exact zero test).
    """

    def __init__(self, matrix, blocks: Sequence | None = None):
        M = as_matrix(matrix)
        n, n2 = M.shape
        if n != n2:
            raise ValueError(f"quasi-triangular matrix must be square, got {M.shape}")
        if not np.all(np.isfinite(M)):
            raise ValueError("matrix has non-finite entries")
        if blocks is None:
            blocks = _detect_blocks(M)
        blocks = [(int(s), int(w)) for s, w in blocks]
        _check_layout(M, blocks)
        self.matrix = M
        self.blocks = blocks

    @classmethod
    def from_matrix(cls, M) -> "QuasiTriangular":
        if isinstance(M, QuasiTriangular):
            return M
        return cls(M)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def block_partition(self) -> BlockPartition:
        """One part per diagonal block."""
        return BlockPartition(tuple(s for s, _ in self.blocks) + (self.n,))

    def two_by_two_starts(self) -> set:
        return {s for s, w in self.blocks if w == 2}

    def __repr__(self):
        nb = sum(1 for _, w in self.blocks if w == 2)
        return f"QuasiTriangular(n={self.n}, 2x2 blocks={nb})"


def _detect_blocks(M) -> list:
    n = M.shape[0]
    blocks = []
    i = 0
    while i < n:
        if i + 1 < n and M[i + 1, i] != 0.0:
            blocks.append((i, 2))
            i += 2
        else:
            blocks.append((i, 1))
            i += 1
    return blocks


def _check_layout(M, blocks):
    n = M.shape[0]
    pos = 0
    for s, w in blocks:
        if s != pos or w not in (1, 2):
            raise ValueError(f"diagonal blocks must tile 0..n in order, bad block {(s, w)}")
        pos += w
    if pos != n:
        raise ValueError(f"diagonal blocks cover {pos} of {n} rows")
    if n > 2 and np.any(np.tril(M, -2) != 0.0):
        raise ValueError("entries below the first subdiagonal must be zero")
    inside = np.zeros(max(n - 1, 0), dtype=bool)
    for s, w in blocks:
        if w == 2:
            inside[s] = True
    sub = np.diagonal(M, -1) if n > 1 else np.empty(0)
    if np.any((sub != 0.0) & ~inside):
        raise ValueError("nonzero subdiagonal entry outside a 2x2 diagonal block")


def partition(T: QuasiTriangular, tile_size: int) -> BlockPartition:
    """Split ``range(T.n)`` into tiles of about `tile_size` rows.

    Each cut is placed `tile_size` past the previous one and moved one index
    later when it would separate the two rows of a 2x2 diagonal block.
    """
    if tile_size < 2:
        raise ValueError(f"tile size must be at least 2, got {tile_size}")
    n = T.n
    splits = {s + 1 for s in T.two_by_two_starts()}
    cuts = [0]
    while cuts[-1] < n:
        c = cuts[-1] + tile_size
        if c in splits:
            c += 1
        cuts.append(min(c, n))
    return BlockPartition(tuple(cuts))


def block_norms(M, rows: BlockPartition, cols: BlockPartition) -> np.ndarray:
    """Table of ``inf_norm(M[rows[i], cols[j]])`` for every block pair."""
    A = np.abs(np.asarray(M, dtype=np.float64))
    if A.size == 0:
        return np.zeros((rows.block_count, cols.block_count))
    sums = np.add.reduceat(A, list(cols.cuts[:-1]), axis=1)
    return np.maximum.reduceat(sums, list(rows.cuts[:-1]), axis=0)


def write_matrix(path, M) -> None:
    """Write `M` as text: ``rows cols`` then one row per line."""
    M = np.asarray(M, dtype=np.float64)
    with open(path, "w") as fh:
        fh.write(f"{M.shape[0]} {M.shape[1]}\n")
        for row in M:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def read_matrix(path) -> np.ndarray:
    """Read a matrix written by :func:`write_matrix`."""
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}: first line must be 'rows cols'")
        m, n = int(header[0]), int(header[1])
        rows = [line.split() for line in fh if line.strip()]
    if len(rows) != m or any(len(r) != n for r in rows):
        raise ValueError(f"{path}: expected {m} rows of {n} entries")
    M = np.empty((m, n), dtype=np.float64, order="F")
    for i, r in enumerate(rows):
        M[i, :] = [float(x) for x in r]
    return M
