"""Compiled inner loops.

Everything here is jitted with numba in ``nogil`` mode so the tiled solver can
run diagonal-tile solves on several threads at once.  Functions never raise;
error conditions come back as status codes and the Python wrappers turn them
into exceptions.
"""
import math

import numpy as np
from numba import njit

_JIT = dict(cache=True, nogil=True)

# Relative margin taken off every scaling factor that is < 1, so that the
# rounding of the scaled operations cannot push a result back above omega.
SAFETY = 1.0 - 2.0 ** -40
BELOW_ONE = 1.0 - 2.0 ** -53
TINY = 2.2250738585072014e-308
DENORM_MIN = 5e-324
_REPRESENTATIVE_TINY = 2.0 ** -900

STATUS_OK = 0
STATUS_SINGULAR = 1


# --------------------------------------------------------------------------
# error-free transformations
# --------------------------------------------------------------------------

@njit(**_JIT)
def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


@njit(**_JIT)
def _split(a):
    c = 134217729.0 * a
    hi = c - (c - a)
    return hi, a - hi


@njit(**_JIT)
def _two_prod(a, b):
    # exact only for |a|, |b| well inside the range; callers pass mantissas
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


@njit(**_JIT)
def _sign4(x0, x1, x2, x3):
    """Exact sign of ``x0 + x1 + x2 + x3`` (partial sums must not overflow).

    Grows a nonoverlapping expansion one term at a time; the sign of the sum
    is the sign of its most significant nonzero component.
    """
    e0 = x0
    q, h0 = _two_sum(x1, e0)
    e0, e1 = h0, q
    q, h0 = _two_sum(x2, e0)
    q, h1 = _two_sum(q, e1)
    e0, e1, e2 = h0, h1, q
    q, h0 = _two_sum(x3, e0)
    q, h1 = _two_sum(q, e1)
    q, h2 = _two_sum(q, e2)
    for v in (q, h2, h1, h0):
        if v > 0.0:
            return 1
        if v < 0.0:
            return -1
    return 0


@njit(**_JIT)
def _finish_scale(z):
    if z > BELOW_ONE:
        z = BELOW_ONE
    if z < TINY:
        # subnormal results were rounded to nearest; step below
        z = np.nextafter(z, 0.0)
        if z <= 0.0:
            z = DENORM_MIN
    return z


# --------------------------------------------------------------------------
# overflow guards
# --------------------------------------------------------------------------

@njit(**_JIT)
def protect_update_core(c, a, b, omega):
    """Largest-ish zeta in (0, 1] with ``zeta * (c + a*b) <= omega``.

    Returns exactly 1.0 iff ``c + a*b <= omega`` holds in exact arithmetic.
    Inputs are assumed to lie in [0, omega].
    """
    if a == 0.0 or b == 0.0:
        return 1.0
    fa, ea = math.frexp(a)
    fb, eb = math.frexp(b)
    E = ea + eb
    if E > 1025:
        need = True                      # a*b >= 2**1024
    elif E < -968:
        need = c >= omega                # a*b < 2**-968 < omega - c unless c == omega
    else:
        ph, pl = _two_prod(fa, fb)       # fa*fb == ph + pl exactly
        sh = -4 if E >= 1022 else 0
        P = math.ldexp(ph, E + sh)
        L = math.ldexp(pl, E + sh)
        W = math.ldexp(omega, sh)
        if sh != 0 and c != 0.0 and c < _REPRESENTATIVE_TINY:
            # c too small to matter except for exact ties a*b == omega
            cc = math.ldexp(_REPRESENTATIVE_TINY, sh)
        else:
            cc = math.ldexp(c, sh)
        need = _sign4(W, -P, -cc, -L) < 0
    if not need:
        return 1.0
    if E <= 1020:
        z = (0.25 * omega) / (0.25 * c + 0.25 * (a * b))
    else:
        if a < b:
            a, b = b, a
        z = (omega / a) / (c / a + b)
    return _finish_scale(z * SAFETY)


@njit(**_JIT)
def protect_division_core(b, t, omega):
    """zeta in (0, 1] with ``(zeta * b) / |t| <= omega``; t must be nonzero.

    Returns exactly 1.0 iff ``b <= omega * |t|`` in exact arithmetic.
    """
    t = abs(t)
    if b == 0.0 or t >= 1.0:
        return 1.0
    fb, eb = math.frexp(b)
    fo, eo = math.frexp(omega)
    ft, et = math.frexp(t)
    ph, pl = _two_prod(fo, ft)
    D = eb - eo - et
    if D >= 2:
        need = True
    elif D <= -2:
        need = False
    else:
        need = _sign4(ph, pl, -math.ldexp(fb, D), 0.0) < 0
    if not need:
        return 1.0
    z = math.ldexp((ph / fb) * SAFETY, eo + et - eb)
    return _finish_scale(z)


# --------------------------------------------------------------------------
# small dense helpers
# --------------------------------------------------------------------------

@njit(**_JIT)
def _norm(M, r0, r1, c0, c1):
    best = 0.0
    for i in range(r0, r1):
        s = 0.0
        for j in range(c0, c1):
            s += abs(M[i, j])
        if s != s:
            return np.inf
        if s > best:
            best = s
    return best


@njit(**_JIT)
def _norm_tall(M, r1, c0, c1, acc):
    # _norm(M, 0, r1, c0, c1) for narrow column ranges, column by column
    for i in range(r1):
        acc[i] = 0.0
    for j in range(c0, c1):
        for i in range(r1):
            acc[i] += abs(M[i, j])
    best = 0.0
    for i in range(r1):
        s = acc[i]
        if s != s:
            return np.inf
        if s > best:
            best = s
    return best


@njit(**_JIT)
def _scale(Y, g):
    m, n = Y.shape
    for j in range(n):
        for i in range(m):
            Y[i, j] *= g


@njit(**_JIT)
def _scale_except(Y, g, ks, ke, ls, le):
    m, n = Y.shape
    for j in range(n):
        inside = ls <= j < le
        for i in range(m):
            if inside and ks <= i < ke:
                continue
            Y[i, j] *= g


@njit(**_JIT)
def _mul_scale(am, ae, x):
    fx, ex = math.frexp(x)
    m, e = math.frexp(am * fx)
    return m, ae + ex + e


# --------------------------------------------------------------------------
# the <= 2x2 by <= 2x2 Sylvester solve
# --------------------------------------------------------------------------

@njit(**_JIT)
def small_sylvester(A, ks, ke, B, ls, le, Y, omega, smallnum, robust,
                    Z, K, rhs, perm):
    """Solve ``A[ks:ke, ks:ke] Z + Z B[ls:le, ls:le] = beta * Y[ks:ke, ls:le]``.

    The result goes to ``Z[:ke-ks, :le-ls]``; K, rhs and perm are scratch.
    Returns ``(beta, status, pivot)``.
    """
    mk = ke - ks
    nl = le - ls
    s = mk * nl
    for i in range(s):
        perm[i] = i
        for j in range(s):
            K[i, j] = 0.0
    for j in range(nl):
        for i in range(mk):
            r = i + mk * j
            rhs[r] = Y[ks + i, ls + j]
            for i2 in range(mk):
                K[r, i2 + mk * j] += A[ks + i, ks + i2]
            for j2 in range(nl):
                K[r, i + mk * j2] += B[ls + j2, ls + j]

    beta = 1.0
    # elimination with complete pivoting
    for i in range(s):
        best = -1.0
        pr = i
        pc = i
        for c in range(i, s):
            for r in range(i, s):
                v = abs(K[r, c])
                if v > best:
                    best = v
                    pr = r
                    pc = c
        if best < smallnum:
            return beta, STATUS_SINGULAR, K[pr, pc]
        if pr != i:
            for c in range(s):
                K[i, c], K[pr, c] = K[pr, c], K[i, c]
            rhs[i], rhs[pr] = rhs[pr], rhs[i]
        if pc != i:
            for r in range(s):
                K[r, i], K[r, pc] = K[r, pc], K[r, i]
            perm[i], perm[pc] = perm[pc], perm[i]
        piv = K[i, i]
        for r in range(i + 1, s):
            lr = K[r, i] / piv
            for c in range(i + 1, s):
                K[r, c] -= lr * K[i, c]
            if robust:
                zeta = protect_update_core(abs(rhs[r]), abs(lr), abs(rhs[i]), omega)
                if zeta != 1.0:
                    for t in range(s):
                        rhs[t] *= zeta
                    beta *= zeta
            rhs[r] -= lr * rhs[i]

    # back substitution on the upper triangle
    for i in range(s - 1, -1, -1):
        piv = K[i, i]
        if robust:
            zeta = protect_division_core(abs(rhs[i]), piv, omega)
            if zeta != 1.0:
                for t in range(s):
                    rhs[t] *= zeta
                beta *= zeta
        rhs[i] = rhs[i] / piv
        if i > 0:
            if robust:
                xn = 0.0
                un = 0.0
                for r in range(i):
                    xn = max(xn, abs(rhs[r]))
                    un = max(un, abs(K[r, i]))
                zeta = protect_update_core(xn, un, abs(rhs[i]), omega)
                if zeta != 1.0:
                    for t in range(s):
                        rhs[t] *= zeta
                    beta *= zeta
            for r in range(i):
                rhs[r] -= K[r, i] * rhs[i]

    for i in range(s):
        v = perm[i]
        Z[v % mk, v // mk] = rhs[i]

    # entries are <= omega; two-column rows can still sum past it
    if robust and nl == 2:
        zeta = 1.0
        for i in range(mk):
            zr = protect_update_core(abs(Z[i, 0]), 1.0, abs(Z[i, 1]), omega)
            zeta = min(zeta, zr)
        if zeta != 1.0:
            for j in range(nl):
                for i in range(mk):
                    Z[i, j] *= zeta
            beta *= zeta
    return beta, STATUS_OK, 0.0


# --------------------------------------------------------------------------
# block backward substitution (non-robust and robust variants)
# --------------------------------------------------------------------------

@njit(**_JIT)
def _column_update(Y, A, ks, ke, ls, le):
    # Y[:ks, ls:le] -= A[:ks, ks:ke] @ Y[ks:ke, ls:le]
    for j in range(ls, le):
        for t in range(ks, ke):
            z = Y[t, j]
            for i in range(ks):
                Y[i, j] -= A[i, t] * z


@njit(**_JIT)
def _row_update(Y, B, ks, ke, ls, le):
    # Y[ks:ke, le:] -= Y[ks:ke, ls:le] @ B[ls:le, le:]
    n = Y.shape[1]
    for j in range(le, n):
        for t in range(ls, le):
            b = B[t, j]
            for i in range(ks, ke):
                Y[i, j] -= Y[i, t] * b


@njit(**_JIT)
def block_sylvester(A, B, Y, rc, cc, omega, smallnum, robust, trace):
    """Overwrite Y with the solution of ``A Y + Y B = alpha * Y``.

    ``rc``/``cc`` are the diagonal-block cut points of A and B.  With
    ``robust`` False no guard is evaluated and alpha stays 1; the floating
    point operations applied to Y are otherwise identical, so when no guard
    fires both variants produce bitwise equal results.

    Returns ``(status, pivot, alpha_mantissa, alpha_exponent, events, peak)``
    where ``peak`` is the largest block norm seen after any step when
    ``trace`` is set (else 0).  Inputs are assumed to be traced from the
    start: the initial block norms of Y are included.
    """
    p = rc.size - 1
    q = cc.size - 1
    n = Y.shape[1]
    am = 1.0
    ae = 0
    events = 0
    peak = 0.0
    Z = np.empty((2, 2))
    K = np.empty((4, 4))
    rhs = np.empty(4)
    perm = np.empty(4, dtype=np.int64)
    # norms of A and B never change: precompute what the guards read
    acc = np.empty(Y.shape[0])
    acol = np.zeros(p)
    brow = np.zeros(q)
    if robust:
        for k in range(1, p):
            acol[k] = _norm(A, 0, rc[k], rc[k], rc[k + 1])
        for l in range(q):
            for j in range(l + 1, q):
                brow[l] = max(brow[l], _norm(B, cc[l], cc[l + 1], cc[j], cc[j + 1]))
    if trace:
        for k in range(p):
            for l in range(q):
                peak = max(peak, _norm(Y, rc[k], rc[k + 1], cc[l], cc[l + 1]))
    for l in range(q):
        ls = cc[l]
        le = cc[l + 1]
        for k in range(p - 1, -1, -1):
            ks = rc[k]
            ke = rc[k + 1]
            beta, status, piv = small_sylvester(
                A, ks, ke, B, ls, le, Y, omega, smallnum, robust, Z, K, rhs, perm)
            if status != STATUS_OK:
                return status, piv, am, ae, events, peak
            if beta != 1.0:
                _scale_except(Y, beta, ks, ke, ls, le)
                events += 1
            for j in range(le - ls):
                for i in range(ke - ks):
                    Y[ks + i, ls + j] = Z[i, j]
            # rescaling by factors < 1 cannot raise a block norm, so the
            # trace only re-measures blocks that were just written
            if trace:
                peak = max(peak, _norm(Y, ks, ke, ls, le))

            g1 = 1.0
            if ks > 0:
                if robust:
                    g1 = protect_update_core(_norm_tall(Y, ks, ls, le, acc), acol[k],
                                             _norm(Y, ks, ke, ls, le), omega)
                    if g1 != 1.0:
                        _scale(Y, g1)
                        events += 1
                _column_update(Y, A, ks, ke, ls, le)
                if trace:
                    for i in range(k):
                        peak = max(peak, _norm(Y, rc[i], rc[i + 1], ls, le))

            g2 = 1.0
            if le < n:
                if robust:
                    ymax = 0.0
                    for j in range(l + 1, q):
                        ymax = max(ymax, _norm(Y, ks, ke, cc[j], cc[j + 1]))
                    g2 = protect_update_core(ymax, _norm(Y, ks, ke, ls, le), brow[l], omega)
                    if g2 != 1.0:
                        _scale(Y, g2)
                        events += 1
                _row_update(Y, B, ks, ke, ls, le)
                if trace:
                    for j in range(l + 1, q):
                        peak = max(peak, _norm(Y, ks, ke, cc[j], cc[j + 1]))

            if beta != 1.0:
                am, ae = _mul_scale(am, ae, beta)
            if g1 != 1.0:
                am, ae = _mul_scale(am, ae, g1)
            if g2 != 1.0:
                am, ae = _mul_scale(am, ae, g2)
    return STATUS_OK, 0.0, am, ae, events, peak
