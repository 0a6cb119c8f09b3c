import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_array_equal, assert_allclose

from robsylv import (BlockPartition, QuasiTriangular, frob_norm, gemm_update, inf_norm,
                     partition, read_matrix, write_matrix)
from robsylv.testgen import GeneratorSpec, generate_quasi_triangular, random_quasi_triangular

from oracles import triple_loop_product

# the displayed 5x5 generator matrix with mu = 1 (blocks 1, 1, 2, 1)
FIVE_BY_FIVE = np.array([
    [1, 1, 1, 1, 1],
    [0, 1, 1, 1, 1],
    [0, 0, 1, 1, 1],
    [0, 0, -1, 1, 1],
    [0, 0, 0, 0, 1],
], dtype=float)


class TestInfNorm:
    def test_scalar(self):
        assert inf_norm([[-3.0]]) == 3.0

    def test_rotation_block(self):
        assert inf_norm([[1, 1], [-1, 1]]) == 2.0

    def test_five_by_five_generator(self):
        # brute-force row sums: 5, 4, 3, 3, 1
        sums = [sum(abs(x) for x in row) for row in FIVE_BY_FIVE.tolist()]
        assert sums == [5, 4, 3, 3, 1]
        assert inf_norm(FIVE_BY_FIVE) == 5.0

    def test_empty(self):
        assert inf_norm(np.zeros((0, 3))) == 0.0
        assert inf_norm(np.zeros((3, 0))) == 0.0

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 6), st.integers(1, 6), st.floats(-1e3, 1e3), st.integers(0, 2**31))
    def test_homogeneous(self, m, n, c, seed):
        M = np.random.default_rng(seed).standard_normal((m, n))
        lhs = inf_norm(c * M)
        rhs = abs(c) * inf_norm(M)
        assert lhs == pytest.approx(rhs, rel=4 * n * 2.0 ** -52, abs=1e-300)


class TestFrobNorm:
    def test_zero(self):
        assert frob_norm(np.zeros((3, 3))) == 0.0

    def test_pythagoras(self):
        assert frob_norm([[3.0, 4.0]]) == 5.0

    def test_random_against_direct_sum(self):
        M = np.random.default_rng(4).standard_normal((4, 4))
        direct = sum(x * x for x in M.ravel().tolist()) ** 0.5
        assert frob_norm(M) == pytest.approx(direct, rel=1e-15)

    def test_no_overflow_near_threshold(self):
        M = np.full((3, 3), 1e300)
        assert frob_norm(M) == pytest.approx(3e300, rel=1e-15)


class TestGemmUpdate:
    def test_identity(self):
        C = np.eye(2)
        gemm_update(C, np.eye(2), np.eye(2))
        assert_array_equal(C, np.zeros((2, 2)))

    def test_negation(self):
        C = np.zeros((2, 2))
        gemm_update(C, np.array([[1.0, 2.0], [3.0, 4.0]]), np.eye(2))
        assert_array_equal(C, [[-1, -2], [-3, -4]])

    def test_random_8x8_triple_loop(self):
        rng = np.random.default_rng(8)
        A, B, C = (rng.standard_normal((8, 8)) for _ in range(3))
        ref = C - triple_loop_product(A, B)
        out = C.copy()
        gemm_update(out, A, B)
        assert np.abs(out - ref).max() <= 1e-14 * np.abs(ref).max()

    @settings(max_examples=25, deadline=None)
    @given(st.integers(1, 64), st.integers(0, 64), st.integers(1, 64), st.integers(0, 2**31))
    def test_triple_loop_agreement(self, m, k, n, seed):
        rng = np.random.default_rng(seed)
        A, B, C = rng.standard_normal((m, k)), rng.standard_normal((k, n)), rng.standard_normal((m, n))
        ref = C - triple_loop_product(A, B)
        out = C.copy()
        gemm_update(out, A, B)
        scale = max(np.abs(ref).sum(axis=1).max(), 1e-300)
        assert np.abs(out - ref).sum(axis=1).max() <= 1e-13 * scale

    def test_on_view(self):
        Y = np.zeros((4, 4), order="F")
        gemm_update(Y[1:3, 2:4], np.eye(2), np.ones((2, 2)))
        assert_array_equal(Y[1:3, 2:4], -np.ones((2, 2)))
        assert Y.sum() == -4

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            gemm_update(np.zeros((2, 2)), np.zeros((2, 3)), np.zeros((2, 2)))


class TestQuasiTriangular:
    def test_detects_blocks(self):
        T = QuasiTriangular(FIVE_BY_FIVE)
        assert T.blocks == [(0, 1), (1, 1), (2, 2), (4, 1)]

    def test_rejects_low_entries(self):
        M = np.triu(np.ones((4, 4)))
        M[3, 0] = 1.0
        with pytest.raises(ValueError):
            QuasiTriangular(M)

    def test_rejects_adjacent_subdiagonals(self):
        M = np.triu(np.ones((3, 3)))
        M[1, 0] = M[2, 1] = 1.0
        with pytest.raises(ValueError):
            QuasiTriangular(M)

    def test_rejects_undeclared_subdiagonal(self):
        M = np.triu(np.ones((3, 3)))
        M[1, 0] = 1.0
        with pytest.raises(ValueError):
            QuasiTriangular(M, blocks=[(0, 1), (1, 1), (2, 1)])

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            QuasiTriangular([[np.nan]])

    def test_explicit_block_with_zero_subdiagonal(self):
        T = QuasiTriangular(np.eye(2), blocks=[(0, 2)])
        assert T.two_by_two_starts() == {0}


class TestPartition:
    def test_all_ones(self):
        T = QuasiTriangular(np.eye(6))
        assert partition(T, 2).cuts == (0, 2, 4, 6)

    def test_shift_past_block(self):
        M = np.triu(np.ones((6, 6)))
        M[2, 1] = -1.0
        T = QuasiTriangular(M)
        assert T.blocks[1] == (1, 2)
        assert partition(T, 2).cuts == (0, 3, 5, 6)

    def test_single_tile(self):
        assert partition(QuasiTriangular(np.eye(4)), 8).cuts == (0, 4)

    def test_too_small(self):
        with pytest.raises(ValueError):
            partition(QuasiTriangular(np.eye(4)), 1)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 80), st.integers(2, 20), st.integers(0, 2**31),
           st.sampled_from(["mixed", "ones"]))
    def test_invariants(self, n, ts, seed, pattern):
        T = random_quasi_triangular(n, seed, pattern)
        p = partition(T, ts)
        assert p.cuts[0] == 0 and p.cuts[-1] == n
        starts = T.two_by_two_starts()
        # a cut at s + 1 would separate the rows of the block at s
        assert not any(c - 1 in starts for c in p.cuts)
        sizes = p.sizes()
        assert all(s >= 1 for s in sizes)
        assert all(abs(s - ts) <= 1 for s in sizes[:-1])


class TestBlockPartition:
    def test_validation(self):
        with pytest.raises(ValueError):
            BlockPartition((1, 2))
        with pytest.raises(ValueError):
            BlockPartition((0, 2, 2))

    def test_slices(self):
        p = BlockPartition((0, 3, 5))
        assert len(p) == 2 and p[1] == slice(3, 5) and p.sizes() == [3, 2]


def test_generator_block_partition_matches_pattern():
    T = generate_quasi_triangular(GeneratorSpec(5, 1.0, (1, 1, 2, 1)))
    assert T.block_partition().cuts == (0, 1, 2, 4, 5)


def test_matrix_file_round_trip(tmp_path):
    M = np.random.default_rng(3).standard_normal((3, 4)) * 1e-300
    M[0, 0] = 0.1
    p = tmp_path / "m.txt"
    write_matrix(p, M)
    assert p.read_text().splitlines()[0] == "3 4"
    back = read_matrix(p)
    assert_array_equal(back, M)
    assert back.flags.f_contiguous


def test_read_matrix_rejects_bad_shape(tmp_path):
    p = tmp_path / "bad.txt"
    p.write_text("2 2\n1 2\n3\n")
    with pytest.raises(ValueError):
        read_matrix(p)
