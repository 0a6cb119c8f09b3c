"""Independent reference routines used only by the tests.

None of these share code with the package: the Kronecker matrix is built
entry by entry, the products are triple loops, and the exact checks use
rational arithmetic.
"""
from fractions import Fraction

import numpy as np


def kron_system(A, B):
    """Entry-wise ``I kron A + B^T kron I`` for column-major vec(Y)."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    m, n = A.shape[0], B.shape[0]
    K = np.zeros((m * n, m * n))
    for j in range(n):
        for i in range(m):
            r = i + m * j
            for i2 in range(m):
                K[r, i2 + m * j] += A[i, i2]
            for j2 in range(n):
                K[r, i + m * j2] += B[j2, j]
    return K


def kron_solve(A, B, C):
    """Solve ``A Y + Y B = C`` through the dense Kronecker system (LAPACK)."""
    A = getattr(A, "matrix", A)
    B = getattr(B, "matrix", B)
    C = np.asarray(C, dtype=float)
    y = np.linalg.solve(kron_system(A, B), C.reshape(-1, order="F"))
    return y.reshape(C.shape, order="F")


def gauss_solve(K, b):
    """Plain Gaussian elimination with partial pivoting, in Python floats."""
    K = [list(map(float, row)) for row in K]
    b = list(map(float, b))
    s = len(b)
    for i in range(s):
        p = max(range(i, s), key=lambda r: abs(K[r][i]))
        K[i], K[p] = K[p], K[i]
        b[i], b[p] = b[p], b[i]
        for r in range(i + 1, s):
            f = K[r][i] / K[i][i]
            for c in range(i, s):
                K[r][c] -= f * K[i][c]
            b[r] -= f * b[i]
    x = [0.0] * s
    for i in range(s - 1, -1, -1):
        x[i] = (b[i] - sum(K[i][c] * x[c] for c in range(i + 1, s))) / K[i][i]
    return np.array(x)


def triple_loop_product(A, B):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    m, k = A.shape
    n = B.shape[1]
    out = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for t in range(k):
                acc += A[i, t] * B[t, j]
            out[i, j] = acc
    return out


def exact(x):
    return Fraction(float(x))


def rel_inf(X, ref):
    X = np.asarray(X, dtype=float)
    ref = np.asarray(ref, dtype=float)
    return np.abs(X - ref).sum(axis=1).max() / np.abs(ref).sum(axis=1).max()


def tile_views_equal(a, b):
    return a.shape == b.shape and np.array_equal(a, b)
