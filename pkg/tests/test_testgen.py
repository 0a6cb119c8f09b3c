import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_array_equal

from robsylv import (GeneratorSpec, QuasiTriangular, Scale, UndefinedResidualError,
                     block_pattern, generate_quasi_triangular, generate_rhs,
                     random_quasi_triangular, relative_residual, solve_robust_scalar,
                     sylvester_test_problem)


def test_five_by_five_display():
    mu = 0.3
    T = generate_quasi_triangular(GeneratorSpec(5, mu, (1, 1, 2, 1))).matrix
    expect = np.array([
        [mu, 1, 1, 1, 1],
        [0, mu, 1, 1, 1],
        [0, 0, mu, mu, 1],
        [0, 0, -mu, mu, 1],
        [0, 0, 0, 0, mu],
    ])
    assert_array_equal(T, expect)


def test_one_by_one():
    assert generate_quasi_triangular(GeneratorSpec(1, 7.0, (1,))).matrix.tolist() == [[7.0]]


def test_rotation_block_eigenvalues():
    T = generate_quasi_triangular(GeneratorSpec(4, 1.0, (2, 2))).matrix
    for s in (0, 2):
        blk = T[s:s + 2, s:s + 2]
        tr, det = np.trace(blk), np.linalg.det(blk)
        # roots of x^2 - tr x + det: 1 +- i
        assert tr / 2 == 1.0
        assert det - tr ** 2 / 4 == pytest.approx(1.0)


def test_pattern_mismatch():
    with pytest.raises(ValueError):
        GeneratorSpec(4, 1.0, (2, 1))
    with pytest.raises(ValueError):
        GeneratorSpec(3, 1.0, (3,))
    with pytest.raises(ValueError):
        GeneratorSpec(3, 0.0)
    with pytest.raises(ValueError):
        block_pattern(3, "zigzag")


def test_default_pattern():
    assert block_pattern(7) == [1, 2, 1, 2, 1]
    assert block_pattern(6) == [1, 2, 1, 2]
    assert block_pattern(5) == [1, 2, 1, 1]
    assert block_pattern(3, "ones") == [1, 1, 1]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 60), st.floats(1e-8, 1e3), st.sampled_from(["mixed", "ones"]))
def test_generated_matrices_are_quasi_triangular(n, mu, pattern):
    T = generate_quasi_triangular(GeneratorSpec(n, mu, pattern))
    again = QuasiTriangular(T.matrix)   # re-detect from the entries
    assert again.blocks == T.blocks
    assert sum(w for _, w in T.blocks) == n


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 50), st.integers(0, 2**31))
def test_random_quasi_triangular_valid(n, seed):
    T = random_quasi_triangular(n, seed)
    assert QuasiTriangular(T.matrix).blocks == T.blocks
    ev = np.linalg.eigvals(T.matrix)
    assert ev.real.min() >= 1.0 - 1e-9


def test_rhs():
    assert generate_rhs(1, 1).tolist() == [[1.0]]
    assert_array_equal(generate_rhs(2, 3), np.ones((2, 3)))
    from robsylv import inf_norm
    assert inf_norm(generate_rhs(5, 5)) == 5.0
    with pytest.raises(ValueError):
        generate_rhs(0, 2)


class TestResidual:
    def test_exact_scalar(self):
        assert relative_residual([[2.0]], [[3.0]], [[10.0]], [[2.0]], 1.0) == 0.0

    def test_perturbed_scalar(self):
        assert relative_residual([[1.0]], [[1.0]], [[1.0]], [[0.5]]) == 0.0
        assert relative_residual([[1.0]], [[1.0]], [[1.0]], [[1.5]]) == 0.5

    def test_half_alpha(self):
        A, B, C = sylvester_test_problem(8, 6)
        Y = solve_robust_scalar(A, B, C).Y
        assert relative_residual(A, B, C, 0.5 * Y, 0.5) <= 1e-15

    def test_zero(self):
        with pytest.raises(UndefinedResidualError):
            relative_residual(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 2)))

    def test_accepts_scale(self):
        assert relative_residual([[2.0]], [[3.0]], [[10.0]], [[0.5]], Scale(0.25)) == 0.0

    @settings(max_examples=30, deadline=None)
    @given(st.floats(1e-3, 1.0), st.integers(2, 20))
    def test_scaling_invariance(self, s, n):
        A, B, C = sylvester_test_problem(n, n)
        Y = solve_robust_scalar(A, B, C).Y + 1e-3  # some nonzero residual
        r1 = relative_residual(A, B, C, Y, 1.0)
        r2 = relative_residual(A, B, C, s * Y, s)
        assert r2 == pytest.approx(r1, rel=1e-10)


def test_growth_monotone_in_mu():
    n = 12
    peaks = []
    for mu in (1e2, 1.0, 1e-3):
        A, B, C = sylvester_test_problem(n, n, mu, mu)
        res = solve_robust_scalar(A, B, C)
        peaks.append(np.abs(res.unscaled()).sum(axis=1).max())
    assert peaks[0] <= peaks[1] <= peaks[2]
