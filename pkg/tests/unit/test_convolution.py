import numpy as np
import pytest

from krusco.exceptions import StructuralError
from krusco.tensor.convolution import (
    conv_fft,
    conv_full,
    conv_separable,
    convolve,
    convolve_along_axes,
    correlate_valid,
)
from krusco.tensor.core import KruskalTensor, cp_reconstruct
from tests.conftest import make_kruskal, nested_loop_convolution, relative_error


class TestFullConvolution:
    """Test direct and spectral full convolutions."""

    def test_delta_atom_is_identity(self, rng):
        act = rng.standard_normal(7)
        np.testing.assert_array_equal(conv_full([1.0], act), act)

    def test_two_tap_by_hand(self):
        np.testing.assert_allclose(conv_full([1.0, 2.0], [1.0, 1.0]), [1.0, 3.0, 2.0])

    def test_matches_nested_loop_2d(self, rng):
        atom = rng.standard_normal((3, 4))
        act = rng.standard_normal((5, 6))
        out = conv_full(atom, act)
        assert out.shape == (7, 9)
        np.testing.assert_allclose(out, nested_loop_convolution(atom, act),
                                   rtol=1e-12, atol=1e-12)

    def test_fft_matches_direct(self, rng):
        atom = rng.standard_normal((4, 5, 3))
        act = rng.standard_normal((6, 2, 7))
        assert relative_error(conv_fft(atom, act), conv_full(atom, act)) <= 1e-10

    def test_order_mismatch(self, rng):
        with pytest.raises(StructuralError):
            conv_full(rng.standard_normal((2, 2)), rng.standard_normal(4))
        with pytest.raises(StructuralError):
            conv_fft(rng.standard_normal((2, 2)), rng.standard_normal(4))

    @pytest.mark.parametrize("threshold", [0, 1000])
    def test_dispatch_is_transparent(self, rng, threshold):
        atom = rng.standard_normal((3, 3))
        act = rng.standard_normal((4, 5))
        out = convolve(atom, act, fft_threshold=threshold)
        assert relative_error(out, nested_loop_convolution(atom, act)) <= 1e-10


class TestSeparableConvolution:
    """Test convolution with Kruskal activations."""

    def test_delta_atom_returns_reconstruction(self, rng):
        kt = make_kruskal(rng, (4, 5), 1)
        out = conv_separable(np.ones((1, 1)), kt)
        np.testing.assert_allclose(out, cp_reconstruct(kt), rtol=1e-12, atol=1e-12)

    def test_ones_atom_by_hand(self):
        kt = KruskalTensor.from_factors([[[1.0], [1.0]], [[1.0], [1.0]]])
        np.testing.assert_allclose(
            conv_separable(np.ones((2, 2)), kt),
            [[1.0, 2.0, 1.0], [2.0, 4.0, 2.0], [1.0, 2.0, 1.0]],
        )

    def test_matches_dense_path(self, rng):
        atom = rng.standard_normal((2, 3, 4))
        kt = make_kruskal(rng, (5, 4, 3), 3)
        expected = conv_full(atom, cp_reconstruct(kt))
        assert relative_error(conv_separable(atom, kt), expected) <= 1e-10

    def test_zero_terms_are_skipped(self, rng):
        factors = [rng.standard_normal((4, 2)), rng.standard_normal((3, 2))]
        factors[1][:, 1] = 0.0
        kt = KruskalTensor.from_factors(factors)
        atom = rng.standard_normal((2, 2))
        direct = conv_full(atom, cp_reconstruct(kt))
        assert relative_error(conv_separable(atom, kt), direct) <= 1e-12

    def test_order_mismatch(self, rng):
        with pytest.raises(StructuralError):
            conv_separable(rng.standard_normal((2, 2)), make_kruskal(rng, (3, 3, 3), 1))

    def test_convolve_along_selected_axes(self, rng):
        tensor = rng.standard_normal((2, 3, 4))
        vector = rng.standard_normal(5)
        out = convolve_along_axes(tensor, {1: vector})
        assert out.shape == (2, 7, 4)
        expected = np.apply_along_axis(lambda line: np.convolve(line, vector), 1,
                                       tensor)
        np.testing.assert_allclose(out, expected, rtol=1e-12, atol=1e-12)


class TestCorrelation:
    """Test the valid-mode correlation used by every adjoint."""

    def test_is_adjoint_of_convolution(self, rng):
        kernel = rng.standard_normal((3, 2, 4))
        act = rng.standard_normal((5, 6, 3))
        residual = rng.standard_normal((7, 7, 6))
        lhs = float(np.sum(conv_full(kernel, act) * residual))
        rhs = float(np.sum(act * correlate_valid(residual, kernel)))
        assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_kernel_larger_than_signal(self, rng):
        with pytest.raises(StructuralError):
            correlate_valid(rng.standard_normal((3, 3)), rng.standard_normal((4, 2)))


class TestConvolutionOracleSuite:
    """Randomized agreement of every path with the definition."""

    def test_hundred_random_instances(self):
        rng = np.random.default_rng(2024)
        max_extent = {1: 10, 2: 10, 3: 6, 4: 4}
        for trial in range(120):
            order = int(rng.integers(1, 5))
            high = max_extent[order] + 1
            atom_shape = tuple(int(w) for w in rng.integers(1, high, size=order))
            act_shape = tuple(int(m) for m in rng.integers(1, high, size=order))
            rank = int(rng.integers(1, 5))
            atom = rng.standard_normal(atom_shape)
            kt = make_kruskal(rng, act_shape, rank)
            dense = cp_reconstruct(kt)
            oracle = nested_loop_convolution(atom, dense)

            for name, out in (("direct", conv_full(atom, dense)),
                              ("fft", conv_fft(atom, dense)),
                              ("separable", conv_separable(atom, kt))):
                assert relative_error(out, oracle) <= 1e-10, f"{name}, trial {trial}"
