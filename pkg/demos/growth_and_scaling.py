"""Watch the unprotected solver overflow and the robust ones scale instead.

Run: ``python demos/growth_and_scaling.py``
"""
import numpy as np

from robsylv import (relative_residual, solve_robust_scalar, solve_tiled_robust,
                     sylvester_test_problem)
from robsylv.scalar import _solve_nonrobust

OMEGA = 1e4


def main(n=120):
    print(f"n = {n}, omega = {OMEGA:g}, nu = 1e-2")
    print(f"{'mu':>8} {'unprotected peak':>18} {'log2 alpha':>11} {'events':>7} {'residual':>10}")
    for mu in (1e2, 1.0, 1e-3, 1e-7):
        A, B, C = sylvester_test_problem(n, n, mu, 1e-2)
        with np.errstate(all="ignore"):
            _, peak = _solve_nonrobust(A, B, C, trace=True)
        res = solve_tiled_robust(A, B, C, tile_size=32, cfg=OMEGA)
        r = relative_residual(A, B, C, res.Y, res.scale)
        print(f"{mu:>8g} {peak:>18.3g} {res.log2_alpha:>11.1f} {res.events:>7d} {r:>10.1e}")

    # alpha may be far below the double range; the Scale object keeps it exact
    A, B, C = sylvester_test_problem(n, n, 1e-7, 1e-2)
    res = solve_robust_scalar(A, B, C, OMEGA)
    print(f"\nscalar solver: alpha as float = {res.alpha!r}, log10 alpha = {res.scale.log10():.1f}")
    print(f"largest |Y| entry = {np.abs(res.Y).max():.4g} (bounded by omega)")


if __name__ == "__main__":
    main()
