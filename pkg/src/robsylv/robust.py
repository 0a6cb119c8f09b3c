"""Overflow protection primitives.

``protect_update`` and ``protect_division`` return scaling factors that keep a
linear update ``zeta*C - A @ (zeta*B)`` or a division below the overflow
threshold.  Scaling factors of whole solutions are kept as :class:`Scale`
objects (mantissa and binary exponent), because the accumulated factor of a
strongly growing problem can be far below the smallest positive double.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import SingularError
from .linalg import as_matrix, inf_norm

__all__ = [
    "AugmentedTile",
    "OverflowConfig",
    "Scale",
    "ScaledSolve",
    "protect_division",
    "protect_update",
    "robust_update",
    "solve_small_sylvester",
]

LARGEST = sys.float_info.max
EPS = sys.float_info.epsilon / 2      # unit roundoff
TINY = sys.float_info.min


@dataclass(frozen=True)
class OverflowConfig:
    """Overflow threshold and tiny-pivot threshold.

    Parameters
    ----------
    omega : float
        No stored intermediate may exceed this magnitude.  Defaults to half
        the largest double.
    smallnum : float, optional
        Pivots with magnitude below this are treated as singular.  Defaults
        to ``TINY / EPS`` so that their reciprocals remain representable.
    """

    omega: float = LARGEST / 2
    smallnum: float = field(default=None)

    def __post_init__(self):
        omega = float(self.omega)
        if not (1.0 < omega <= LARGEST):
            raise ValueError(f"omega must lie in (1, {LARGEST!r}], got {self.omega!r}")
        object.__setattr__(self, "omega", omega)
        smallnum = self.smallnum
        if smallnum is None:
            smallnum = max(TINY / EPS, 1.0 / LARGEST)
        object.__setattr__(self, "smallnum", float(smallnum))

    @classmethod
    def coerce(cls, cfg) -> "OverflowConfig":
        """Accept a config, a bare omega, or None (defaults)."""
        if cfg is None:
            return cls()
        if isinstance(cfg, cls):
            return cfg
        return cls(omega=cfg)


# --------------------------------------------------------------------------
# extended-range scale factors
# --------------------------------------------------------------------------

class Scale:
    """Positive scaling factor ``mantissa * 2**exponent`` with unbounded range.

    The mantissa is kept in [0.5, 1).  Scales compare, multiply and divide
    exactly like the reals they stand for; ``float(s)`` rounds (and may
    underflow to 0.0 for very small factors).
    """

    __slots__ = ("mantissa", "exponent")

    def __init__(self, value=1.0, exponent=0):
        if isinstance(value, Scale):
            m, e = value.mantissa, value.exponent + exponent
        else:
            value = float(value)
            if not (value > 0.0 and math.isfinite(value)):
                raise ValueError(f"scale factors must be positive and finite, got {value!r}")
            m, e = math.frexp(value)
            e += int(exponent)
        self.mantissa = m
        self.exponent = e

    @classmethod
    def one(cls) -> "Scale":
        return cls(1.0)

    def __float__(self):
        return math.ldexp(self.mantissa, self.exponent)

    def log2(self) -> float:
        return math.log2(self.mantissa) + self.exponent

    def log10(self) -> float:
        return self.log2() * math.log10(2.0)

    def is_one(self) -> bool:
        return self.mantissa == 0.5 and self.exponent == 1

    def __mul__(self, other):
        o = other if isinstance(other, Scale) else Scale(other)
        return Scale(self.mantissa * o.mantissa, self.exponent + o.exponent)

    __rmul__ = __mul__

    def ratio(self, other) -> float:
        """``self / other`` rounded to a double (0.0 on underflow)."""
        o = other if isinstance(other, Scale) else Scale(other)
        return math.ldexp(self.mantissa / o.mantissa, self.exponent - o.exponent)

    def _key(self):
        return (self.exponent, self.mantissa)

    @staticmethod
    def _key_of(other):
        if isinstance(other, Scale):
            return other._key()
        v = float(other)
        if not v > 0.0:
            return (-math.inf, v)
        if math.isinf(v):
            return (math.inf, v)
        m, e = math.frexp(v)
        return (e, m)

    def __eq__(self, other):
        if not isinstance(other, (Scale, int, float)):
            return NotImplemented
        return self._key() == Scale._key_of(other)

    def __hash__(self):
        return hash(self._key())

    def __lt__(self, other):
        return self._key() < Scale._key_of(other)

    def __le__(self, other):
        return self._key() <= Scale._key_of(other)

    def __gt__(self, other):
        return self._key() > Scale._key_of(other)

    def __ge__(self, other):
        return self._key() >= Scale._key_of(other)

    def __repr__(self):
        v = float(self)
        if v == 0.0 or not math.isfinite(v):
            return f"Scale(2**{self.log2():.6g})"
        return f"Scale({v!r})"


def min_scale(scales):
    return min(scales, key=Scale._key)


@dataclass
class AugmentedTile:
    """A tile ``X`` with scale ``alpha``; it stands for ``X / alpha``.

    ``norm`` caches ``inf_norm(X)`` and is computed when not given.
    """

    alpha: Scale
    X: np.ndarray
    norm: float = None

    def __post_init__(self):
        if not isinstance(self.alpha, Scale):
            self.alpha = Scale(self.alpha)
        if self.alpha > 1.0:
            raise ValueError("tile scale factors must lie in (0, 1]")
        if self.norm is None:
            self.norm = inf_norm(self.X)

    def represented(self) -> np.ndarray:
        """``X / alpha`` as a new array (may overflow for tiny alpha)."""
        return self.X / float(self.alpha)


# --------------------------------------------------------------------------
# guards
# --------------------------------------------------------------------------

def _check_bound(name, x, omega):
    x = float(x)
    if not (0.0 <= x <= omega):
        raise ValueError(f"{name} must lie in [0, omega={omega!r}], got {x!r}")
    return x


def protect_update(cnorm, anorm, bnorm, cfg=None) -> float:
    """Scaling factor for the update ``zeta*C - A @ (zeta*B)``.

    Parameters
    ----------
    cnorm, anorm, bnorm : float
        Upper bounds of ``||C||``, ``||A||`` and ``||B||``, each in
        ``[0, omega]``.
    cfg : OverflowConfig or float, optional

    Returns
    -------
    zeta : float
        In (0, 1] with ``zeta * (cnorm + anorm*bnorm) <= omega`` in exact
        arithmetic.  Exactly 1 when no scaling is needed; otherwise about
        ``omega / (cnorm + anorm*bnorm)``, slightly reduced so that
        rounding in the scaled update cannot cross omega.
    """
    omega = OverflowConfig.coerce(cfg).omega
    c = _check_bound("cnorm", cnorm, omega)
    a = _check_bound("anorm", anorm, omega)
    b = _check_bound("bnorm", bnorm, omega)
    return float(_kernels.protect_update_core(c, a, b, omega))


def protect_division(bnorm, divisor, cfg=None) -> float:
    """Scaling factor zeta with ``(zeta*bnorm) / |divisor| <= omega``.

    Returns 1 when ``bnorm / |divisor|`` is already at most omega.  Raises
    :class:`SingularError` for a zero divisor.
    """
    omega = OverflowConfig.coerce(cfg).omega
    b = _check_bound("bnorm", bnorm, omega)
    t = float(divisor)
    if t == 0.0:
        raise SingularError("division by zero", pivot=0.0)
    if not math.isfinite(t):
        raise ValueError(f"divisor must be finite, got {t!r}")
    return float(_kernels.protect_division_core(b, t, omega))


# --------------------------------------------------------------------------
# small Sylvester solve
# --------------------------------------------------------------------------

@dataclass
class ScaledSolve:
    """Solution ``Z`` of ``Akk Z + Z Bll = beta * C``."""

    beta: float
    Z: np.ndarray


def solve_small_sylvester(Akk, Bll, C, cfg=None) -> ScaledSolve:
    """Robustly solve a Sylvester equation with 1x1 or 2x2 coefficients.

    The equation is rewritten as the Kronecker system
    ``(I kron Akk + Bll^T kron I) vec(Z) = vec(C)`` of order at most 4 and
    solved by Gaussian elimination with complete pivoting.  Every update of
    the right-hand side and every division is guarded, and the scalings
    are folded into ``beta``.

    Raises
    ------
    SingularError
        If a pivot falls below ``cfg.smallnum``; the equation then has no
        unique solution (an eigenvalue of Akk is close to minus one of Bll).
    """
    cfg = OverflowConfig.coerce(cfg)
    A = as_matrix(Akk)
    B = as_matrix(Bll)
    Cm = as_matrix(C, copy=True)
    mk, nl = A.shape[0], B.shape[0]
    if A.shape != (mk, mk) or B.shape != (nl, nl) or mk not in (1, 2) or nl not in (1, 2):
        raise ValueError(f"Akk and Bll must be square of order 1 or 2, got {A.shape}, {B.shape}")
    if Cm.shape != (mk, nl):
        raise ValueError(f"C must have shape {(mk, nl)}, got {Cm.shape}")
    for name, M in (("Akk", A), ("Bll", B), ("C", Cm)):
        _check_bound(f"inf_norm({name})", inf_norm(M), cfg.omega)
    Z = np.zeros((2, 2))
    beta, status, piv = _kernels.small_sylvester(
        A, 0, mk, B, 0, nl, Cm, cfg.omega, cfg.smallnum, True,
        Z, np.empty((4, 4)), np.empty(4), np.empty(4, dtype=np.int64))
    if status != _kernels.STATUS_OK:
        raise SingularError(
            f"pivot {piv!r} below smallnum: eigenvalues of Akk and -Bll (nearly) coincide",
            pivot=piv)
    return ScaledSolve(beta=float(beta), Z=np.array(Z[:mk, :nl], order="F"))


# --------------------------------------------------------------------------
# tile update
# --------------------------------------------------------------------------

def _update(C, gamma, cnorm, A, alpha, anorm, B, beta, bnorm, omega):
    """Core of :func:`robust_update`; overwrites C, returns (delta, zeta)."""
    rho = alpha * beta
    eta = gamma if gamma <= rho else rho
    scale_a = alpha < beta or (alpha == beta and A.size < B.size)
    fc = eta.ratio(gamma)
    fp = eta.ratio(rho)
    if scale_a:
        zeta = _kernels.protect_update_core(fc * cnorm, fp * anorm, bnorm, omega)
    else:
        zeta = _kernels.protect_update_core(fc * cnorm, anorm, fp * bnorm, omega)
    delta = eta * zeta if zeta != 1.0 else eta
    fc = delta.ratio(gamma)
    fp = delta.ratio(rho)
    if fc != 1.0:
        C *= fc
    if fp != 1.0:
        if scale_a:
            A = fp * A
        else:
            B = fp * B
    if C.size and A.shape[1]:
        C -= A @ B
    return delta, zeta


def robust_update(C: AugmentedTile, A: AugmentedTile, B: AugmentedTile, cfg=None) -> AugmentedTile:
    """Overflow-free ``<delta, D>  =  <gamma, C> - <alpha, A> <beta, B>``.

    The result satisfies ``D/delta = C/gamma - (A/alpha) @ (B/beta)`` in
    exact arithmetic and ``inf_norm(D) <= omega``.  The common scale
    ``eta = min(gamma, alpha*beta)`` is applied to C and to one factor of
    the product (the one with the smaller scale), then ``protect_update``
    supplies any extra reduction.  Factors equal to 1 are never applied,
    so with unit scales and no growth this is exactly ``C -= A @ B``.

    ``C.X`` is overwritten with D; the returned tile shares that array.
    """
    omega = OverflowConfig.coerce(cfg).omega
    for name, t in (("C", C), ("A", A), ("B", B)):
        _check_bound(f"inf_norm({name})", t.norm, omega)
    if A.X.shape[1] != B.X.shape[0] or C.X.shape != (A.X.shape[0], B.X.shape[1]):
        raise ValueError(f"shape mismatch: {C.X.shape} - {A.X.shape} @ {B.X.shape}")
    delta, _ = _update(C.X, C.alpha, C.norm, A.X, A.alpha, A.norm,
                       B.X, B.alpha, B.norm, omega)
    return AugmentedTile(delta, C.X)
