import numpy as np
import pytest

from src.autodiff import functional as F
from src.autodiff.variable import Variable
from src.errors import CVNNError, ShapeError
from src.kernels.conv import ConvSpec
from src.nn.layers import (
    CVAdaptiveAvgPool2d,
    CVConv1d,
    CVConv2d,
    CVConvParams,
    CVConvTranspose1d,
    CVDropout,
    CVLinear,
    CVLinearParams,
    Flatten,
    adaptive_bins,
    cv_adaptive_avg_pool,
    cv_conv_forward,
    cv_conv_transpose_forward,
    cv_dropout,
    cv_linear_forward,
)
from src.nn.module import Parameter, Sequential
from src.tensor.ctensor import CTensor


def ct(values):
    return CTensor.from_complex(np.asarray(values, dtype=np.complex128), "f64")


def param(values):
    return Parameter(ct(values))


class TestLinear:
    def test_identity(self):
        out = cv_linear_forward(CVLinearParams(param([[1.0]])), ct([[5 - 2j]]))
        assert out.numpy()[0, 0] == pytest.approx(5 - 2j)

    def test_bias(self):
        out = cv_linear_forward(CVLinearParams(param([[1j]]), param([1.0])), ct([[1.0]]))
        assert out.numpy()[0, 0] == pytest.approx(1 + 1j)

    @pytest.mark.parametrize("path", ["naive", "gauss"])
    def test_matches_scalar_loop(self, path, crandn):
        w, b, z = crandn(3, 7), crandn(3), crandn(5, 7)
        expected = np.array([[b[o] + sum(w[o, i] * z[n, i] for i in range(7)) for o in range(3)]
                             for n in range(5)])
        out = cv_linear_forward(CVLinearParams(param(w), param(b)), ct(z), path)
        np.testing.assert_allclose(out.numpy(), expected, rtol=1e-12, atol=1e-12)

    def test_wrong_features(self, crandn):
        with pytest.raises(ShapeError):
            CVLinear(4, 2)(Variable(ct(crandn(3, 5))))

    def test_module_init_scale(self, rng):
        layer = CVLinear(400, 300, rng=rng, dtype="f64")
        power = np.mean(np.abs(layer.weight.numpy()) ** 2)
        assert power == pytest.approx(1 / 400, rel=0.05)
        np.testing.assert_array_equal(layer.bias.numpy(), 0)

    def test_no_bias(self, rng):
        layer = CVLinear(3, 2, bias=False, rng=rng)
        assert [name for name, _ in layer.named_parameters()] == ["weight"]


class TestConvLayers:
    def test_forward_delegates(self, crandn):
        params = CVConvParams(param(crandn(2, 1, 3)), None, ConvSpec.create(1, padding=1))
        z = ct(crandn(1, 1, 5))
        out = cv_conv_forward(params, z)
        expected = F.conv(z, params.weight, None, params.spec)
        np.testing.assert_allclose(out.numpy(), expected.numpy())

    def test_transpose_length(self, rng):
        layer = CVConvTranspose1d(1, 1, 3, stride=2, rng=rng)
        assert tuple(layer.weight.shape) == (1, 1, 3)
        assert layer(ct(np.ones((1, 1, 3)))).shape == (1, 1, 7)

    def test_transpose_weight_layout(self, rng):
        layer = CVConvTranspose1d(3, 5, 2, rng=rng)
        assert layer.weight.shape == (3, 5, 2)

    def test_transposed_undoes_shape(self, rng, crandn):
        down = CVConv2d(2, 4, 3, stride=2, padding=1, rng=rng)
        up = CVConvTranspose1d(4, 2, 3, stride=2, padding=1, output_padding=1, rng=rng)
        assert down(ct(crandn(1, 2, 8, 8))).shape == (1, 4, 4, 4)
        assert up(ct(crandn(1, 4, 4))).shape == (1, 2, 8)

    def test_function_form(self, crandn):
        params = CVConvParams(param(crandn(1, 1, 3)), param([0.5j]), ConvSpec.create(1, stride=2, transposed=True))
        out = cv_conv_transpose_forward(params, ct(crandn(1, 1, 3)))
        assert out.shape == (1, 1, 7)

    def test_bad_input_rank(self, rng, crandn):
        with pytest.raises(ShapeError):
            CVConv1d(1, 1, 3, rng=rng)(ct(crandn(1, 1, 4, 4)))


class TestAdaptivePool:
    def test_identity(self, crandn):
        z = ct(crandn(2, 3, 5))
        np.testing.assert_array_equal(cv_adaptive_avg_pool(1, z, 5).numpy(), z.numpy())

    def test_mean(self):
        out = cv_adaptive_avg_pool(1, ct([[[1 + 1j, 3 + 3j]]]), 1)
        assert out.numpy()[0, 0, 0] == pytest.approx(2 + 2j)

    def test_2d_ramp(self):
        ramp = (np.arange(16.0) * (1 + 0.5j)).reshape(1, 1, 4, 4)
        out = CVAdaptiveAvgPool2d(2)(ct(ramp)).numpy()
        expected = ramp.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(2, 2, 4).mean(axis=-1)
        np.testing.assert_allclose(out[0, 0], expected, rtol=0, atol=1e-13)

    def test_uneven_bins_overlap(self):
        bins = adaptive_bins(5, 3)
        np.testing.assert_allclose(bins.sum(axis=1), 1.0)
        assert (bins > 0).sum(axis=1).tolist() == [2, 3, 2]

    def test_out_of_range(self):
        with pytest.raises(ShapeError):
            adaptive_bins(3, 4)


class TestDropout:
    def test_p_zero_is_identity(self, crandn, rng):
        z = ct(crandn(10))
        out = cv_dropout(z, 0.0, True, rng=rng)
        np.testing.assert_array_equal(out.numpy(), z.numpy())

    def test_eval_is_identity(self, crandn):
        z = ct(crandn(10))
        layer = CVDropout(0.9).eval()
        np.testing.assert_array_equal(layer(z).numpy(), z.numpy())

    def test_statistics(self):
        rng = np.random.default_rng(0)
        z = ct(np.full(10 ** 6, 1 + 1j))
        out = cv_dropout(z, 0.5, True, "independent", rng).numpy()
        survivors = np.count_nonzero(out.real) / out.size
        assert survivors == pytest.approx(0.5, abs=0.01)
        assert np.mean(out) == pytest.approx(1 + 1j, rel=0.01)

    def test_shared_mask_drops_both_planes(self, rng):
        out = cv_dropout(ct(np.full(1000, 1 + 1j)), 0.5, True, "shared", rng).numpy()
        np.testing.assert_array_equal(out.real == 0, out.imag == 0)

    def test_independent_masks_differ(self, rng):
        out = cv_dropout(ct(np.full(1000, 1 + 1j)), 0.5, True, "independent", rng).numpy()
        assert np.any((out.real == 0) != (out.imag == 0))

    @pytest.mark.parametrize("p", [-0.1, 1.0])
    def test_invalid_p(self, p):
        with pytest.raises(CVNNError):
            CVDropout(p)


class TestModule:
    def test_state_dict_round_trip(self, rng, crandn):
        model = Sequential(CVLinear(3, 4, rng=rng), Flatten(), CVLinear(4, 2, rng=rng))
        other = Sequential(CVLinear(3, 4), Flatten(), CVLinear(4, 2))
        other.load_state_dict(model.state_dict())
        z = ct(crandn(5, 3))
        np.testing.assert_array_equal(model(z).numpy(), other(z).numpy())
        assert list(model.state_dict()) == ["0.weight", "0.bias", "2.weight", "2.bias"]

    def test_state_mismatch(self, rng):
        model = Sequential(CVLinear(3, 4, rng=rng))
        with pytest.raises(ShapeError):
            model.load_state_dict({"0.weight": ct(np.zeros((4, 3)))})

    def test_train_eval_propagates(self):
        model = Sequential(CVDropout(0.5), Sequential(CVDropout(0.2)))
        model.eval()
        assert not any(m.training for _, m in model.named_modules())

    def test_flatten(self, crandn):
        assert Flatten()(ct(crandn(2, 3, 4))).shape == (2, 12)
