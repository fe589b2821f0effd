import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from src.errors import ConfigError, ShapeError
from src.kernels.conv import ConvSpec
from src.nn.manifold import convex_reparam, wFMConv1d, wFMConv2d, wfm_conv
from src.tensor.ctensor import CTensor


def ct(values):
    return CTensor.from_complex(np.asarray(values, dtype=np.complex128), "f64")


def weights_of(raw, scope="per_output"):
    return convex_reparam(ct(raw), scope).numpy().real


class TestConvexReparam:
    def test_zeros_are_uniform(self):
        np.testing.assert_allclose(weights_of(np.zeros((2, 3, 2))), np.full((2, 3, 2), 1 / 6))

    def test_log_two(self):
        np.testing.assert_allclose(weights_of(np.array([[np.log(2.0), 0.0]])), [[2 / 3, 1 / 3]])

    @pytest.mark.parametrize("scope", ["per_output", "per_kernel"])
    def test_each_output_sums_to_one(self, rng, scope):
        w = weights_of(rng.normal(size=(4, 3, 5)), scope)
        assert (w >= 0).all()
        np.testing.assert_allclose(w.sum(axis=(1, 2)), np.ones(4), atol=1e-14)

    def test_per_kernel_splits_evenly_over_inputs(self, rng):
        w = weights_of(rng.normal(size=(2, 4, 3)), "per_kernel")
        np.testing.assert_allclose(w.sum(axis=2), np.full((2, 4), 0.25), atol=1e-14)

    def test_unknown_scope(self):
        with pytest.raises(ConfigError):
            convex_reparam(ct(np.zeros((1, 1, 2))), "global")


class TestWFMConv:
    def test_constant_input_is_preserved(self, rng):
        layer = wFMConv1d(3, 2, 3, rng=rng, dtype="f64")
        out = layer(ct(np.full((2, 3, 8), 1.5 - 2j))).numpy()
        np.testing.assert_allclose(out, np.full((2, 2, 6), 1.5 - 2j), atol=1e-14)

    @given(st.floats(-np.pi, np.pi), st.floats(0.1, 10.0))
    def test_commutes_with_complex_scaling(self, phase, scale):
        gen = np.random.default_rng(5)
        z = gen.normal(size=(1, 2, 6, 6)) + 1j * gen.normal(size=(1, 2, 6, 6))
        layer = wFMConv2d(2, 3, 3, rng=gen, dtype="f64")
        a = scale * np.exp(1j * phase)
        scaled = layer(ct(a * z)).numpy()
        np.testing.assert_allclose(scaled, a * layer(ct(z)).numpy(), rtol=0, atol=1e-12 * scale)

    def test_matches_weighted_loop(self, crandn, rng):
        z = crandn(1, 2, 7)
        layer = wFMConv1d(2, 2, 3, stride=2, rng=rng, dtype="f64")
        w = layer.weights.numpy().real
        out = layer(ct(z)).numpy()
        for o in range(2):
            for i in range(3):
                expected = np.sum(w[o] * z[0, :, 2 * i:2 * i + 3])
                assert out[0, o, i] == pytest.approx(expected, abs=1e-13)

    def test_magnitude_never_grows(self, crandn, rng):
        z = crandn(3, 2, 5, 5)
        out = wFMConv2d(2, 4, 2, rng=rng, dtype="f64")(ct(z)).numpy()
        assert np.abs(out).max() <= np.abs(z).max() + 1e-12

    def test_bias_rejected(self, crandn):
        with pytest.raises(ConfigError):
            wfm_conv(1, ct(np.zeros((1, 1, 2))), ct(crandn(1, 1, 4)), ConvSpec.create(1), bias=ct([0j]))

    def test_three_dimensions_rejected(self, crandn):
        with pytest.raises(ShapeError):
            wfm_conv(3, ct(np.zeros((1, 1, 1, 1, 1))), ct(crandn(1, 1, 2, 2, 2)), ConvSpec.create(3))

    def test_learnable_weights_are_real(self, rng):
        layer = wFMConv1d(1, 1, 3, rng=rng, dtype="f64")
        assert list(dict(layer.named_parameters())) == ["raw"]
        np.testing.assert_array_equal(layer.raw.numpy().imag, 0.0)
