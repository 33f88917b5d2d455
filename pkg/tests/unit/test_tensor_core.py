import numpy as np
import pytest

from krusco.exceptions import StructuralError
from krusco.tensor.core import (
    KruskalTensor,
    as_dense,
    cp_reconstruct,
    dense_parameter_count,
    kruskal_equivalent,
    kruskal_parameter_count,
    refold,
    unfold,
)
from tests.conftest import make_kruskal


class TestDenseTensor:
    """Test the dense tensor coercion."""

    def test_coerces_to_contiguous_float64(self):
        tensor = as_dense(np.arange(6, dtype=np.int32).reshape(2, 3).T)
        assert tensor.dtype == np.float64
        assert tensor.flags.c_contiguous
        assert tensor.shape == (3, 2)

    @pytest.mark.parametrize("value", [3.0, np.float64(3.0), np.array(3.0)])
    def test_rejects_scalar(self, value):
        with pytest.raises(StructuralError, match="order >= 1"):
            as_dense(value)

    def test_accepts_order_one(self):
        assert as_dense([3.0]).shape == (1,)

    def test_rejects_empty_extent(self):
        with pytest.raises(StructuralError):
            as_dense(np.zeros((2, 0)))


class TestKruskalTensor:
    """Test Kruskal tensor construction and reconstruction."""

    def test_rank_one_by_hand(self):
        kt = KruskalTensor.from_factors([[[1.0], [2.0]], [[3.0], [4.0]]])
        np.testing.assert_array_equal(cp_reconstruct(kt), [[3.0, 4.0], [6.0, 8.0]])

    def test_zero_factor_annihilates(self, rng):
        factors = [rng.standard_normal((3, 2)), np.zeros((4, 2)),
                   rng.standard_normal((2, 2))]
        kt = KruskalTensor.from_factors(factors)
        assert not np.any(cp_reconstruct(kt))
        assert cp_reconstruct(kt).shape == (3, 4, 2)

    def test_matches_triple_loop(self, rng):
        factors = [rng.integers(-3, 4, size=(2, 2)).astype(float) for _ in range(3)]
        kt = KruskalTensor.from_factors(factors)
        expected = np.zeros((2, 2, 2))
        for i in range(2):
            for j in range(2):
                for k in range(2):
                    expected[i, j, k] = sum(
                        factors[0][i, r] * factors[1][j, r] * factors[2][k, r]
                        for r in range(2)
                    )
        np.testing.assert_allclose(cp_reconstruct(kt), expected)

    def test_matches_einsum_for_order_four(self, rng):
        kt = make_kruskal(rng, (3, 2, 4, 5), 3)
        expected = np.einsum("ir,jr,kr,lr->ijkl", *kt.factors)
        np.testing.assert_allclose(cp_reconstruct(kt), expected, rtol=1e-12, atol=1e-12)

    def test_first_order_sums_columns(self):
        kt = KruskalTensor.from_factors([[[1.0, 2.0], [3.0, 4.0]]])
        np.testing.assert_array_equal(cp_reconstruct(kt), [3.0, 7.0])

    def test_mismatched_column_counts(self, rng):
        with pytest.raises(StructuralError):
            KruskalTensor.from_factors([rng.standard_normal((3, 2)),
                                        rng.standard_normal((3, 3))])

    def test_factors_are_read_only_copies(self, rng):
        factor = rng.standard_normal((3, 2))
        kt = KruskalTensor.from_factors([factor, factor])
        factor[0, 0] = 100.0
        assert kt.factors[0][0, 0] != 100.0
        with pytest.raises(ValueError):
            kt.factors[0][0, 0] = 1.0

    def test_with_factor_replaces_one_mode(self, rng):
        kt = make_kruskal(rng, (3, 4), 2)
        replaced = kt.with_factor(1, np.zeros((4, 2)))
        assert not np.any(replaced.to_dense())
        np.testing.assert_array_equal(replaced.factors[0], kt.factors[0])

    def test_shape_rank_and_counts(self, rng):
        kt = make_kruskal(rng, (3, 4, 5), 2)
        assert kt.shape == (3, 4, 5)
        assert kt.rank == 2
        assert kt.order == 3
        assert kt.nnz_per_mode() == (6, 8, 10)
        assert kt.n_parameters == 24


class TestUnfolding:
    """Test mode unfoldings."""

    def test_mode_zero_is_plain_reshape(self, rng):
        tensor = rng.standard_normal((3, 4, 5))
        np.testing.assert_array_equal(unfold(tensor, 0), tensor.reshape(3, 20))

    @pytest.mark.parametrize("mode", [0, 1, 2])
    def test_refold_inverts_unfold(self, rng, mode):
        tensor = rng.standard_normal((3, 4, 5))
        matrix = unfold(tensor, mode)
        assert matrix.shape == (tensor.shape[mode], tensor.size // tensor.shape[mode])
        np.testing.assert_array_equal(refold(matrix, mode, tensor.shape), tensor)

    def test_columns_enumerate_other_modes_row_major(self):
        tensor = np.arange(24, dtype=float).reshape(2, 3, 4)
        matrix = unfold(tensor, 1)
        # column c <-> (i, k) with k fastest
        assert matrix[2, 1 * 4 + 3] == tensor[1, 2, 3]

    def test_mode_out_of_range(self, rng):
        with pytest.raises(StructuralError):
            unfold(rng.standard_normal((2, 2)), 2)

    def test_refold_size_mismatch(self):
        with pytest.raises(StructuralError):
            refold(np.zeros((2, 5)), 0, (2, 3))


class TestEquivalenceAndCounts:
    """Test reconstruction-based comparison and parameter counts."""

    def test_equivalent_up_to_scaling(self, rng):
        kt = make_kruskal(rng, (3, 4, 2), 2)
        scaled = KruskalTensor((kt.factors[0] * 4.0, kt.factors[1] / 2.0,
                                kt.factors[2] / 2.0))
        assert kruskal_equivalent(kt, scaled, 1e-12)

    def test_equivalent_up_to_permutation(self, rng):
        kt = make_kruskal(rng, (3, 4), 3)
        permuted = KruskalTensor(tuple(factor[:, [2, 0, 1]] for factor in kt.factors))
        assert kruskal_equivalent(kt, permuted, 1e-12)

    def test_not_equivalent(self, rng):
        first = make_kruskal(rng, (3, 4), 1)
        assert not kruskal_equivalent(first, make_kruskal(rng, (3, 4), 1), 1e-6)

    def test_shape_mismatch(self, rng):
        with pytest.raises(StructuralError):
            kruskal_equivalent(make_kruskal(rng, (3, 4), 1),
                               make_kruskal(rng, (4, 3), 1), 1e-6)

    def test_parameter_counts(self):
        assert kruskal_parameter_count((15, 29, 57), 4) == 4 * (15 + 29 + 57)
        assert dense_parameter_count((15, 29, 57)) == 15 * 29 * 57
