"""Overflow-protected solvers for the quasi-triangular Sylvester equation.

Solves ``A Y + Y B = alpha * C`` for upper quasi-triangular A and B (real
Schur form), choosing ``alpha`` in (0, 1] so that no stored intermediate
exceeds a threshold omega.
"""
from .errors import SingularError, UndefinedResidualError
from .linalg import (BlockPartition, QuasiTriangular, as_matrix, block_norms, frob_norm,
                     gemm_update, inf_norm, partition, read_matrix, write_matrix)
from .robust import (AugmentedTile, OverflowConfig, Scale, ScaledSolve, protect_division,
                     protect_update, robust_update, solve_small_sylvester)
from .scalar import SolveResult, solve_nonrobust, solve_robust_scalar
from .testgen import (GeneratorSpec, block_pattern, generate_quasi_triangular, generate_rhs,
                      random_quasi_triangular, relative_residual, sylvester_test_problem)
from .tiled import TileGrid, compute_bounds, reduce_and_scale, solve_tiled_robust

__version__ = "0.1.0"

__all__ = [
    "AugmentedTile", "BlockPartition", "GeneratorSpec", "OverflowConfig", "QuasiTriangular",
    "Scale", "ScaledSolve", "SingularError", "SolveResult", "TileGrid", "UndefinedResidualError",
    "as_matrix", "block_norms", "block_pattern", "compute_bounds", "frob_norm",
    "gemm_update", "generate_quasi_triangular", "generate_rhs", "inf_norm", "partition",
    "protect_division", "protect_update", "random_quasi_triangular", "read_matrix",
    "reduce_and_scale", "relative_residual", "robust_update", "solve_nonrobust",
    "solve_robust_scalar", "solve_small_sylvester", "solve_tiled_robust",
    "sylvester_test_problem", "write_matrix",
]
