import numpy as np
import pytest

from src.autodiff import functional as F
from src.autodiff.variable import backward
from src.errors import ConfigError, GradientError
from src.nn.module import Parameter
from src.nn.optim import SGD, Adam, AdamState, build_optimizer, optimizer_step
from src.tensor.ctensor import CTensor


def param(values):
    return Parameter(CTensor.from_complex(np.asarray(values, dtype=np.complex128), "f64"))


def abs2_step(optimizer, p):
    optimizer.zero_grad()
    backward(F.sum(F.abs2(p)))
    optimizer.step()


class TestSGD:
    def test_step_follows_real_pair_gradient(self):
        p = param([1 + 1j])
        abs2_step(SGD([p], lr=0.25), p)
        assert p.item() == 0.5 + 0.5j

    def test_step_from_given_gradient(self):
        p = param([1 + 1j])
        p.grad = CTensor.from_complex(np.array([1 + 1j]), "f64")
        optimizer_step("sgd", [p], 0.5)
        assert p.item() == 0.5 + 0.5j

    @pytest.mark.parametrize("lr", [0.01, 0.3, 0.99])
    def test_step_decreases_quadratic(self, lr):
        p = param([0.7 - 1.2j])
        before = np.abs(p.numpy()) ** 2
        abs2_step(SGD([p], lr=lr), p)
        assert np.abs(p.numpy()) ** 2 < before

    def test_converges_to_minimum(self):
        p = param([3 - 2j, 1j])
        opt = SGD([p], lr=0.1)
        for _ in range(200):
            abs2_step(opt, p)
        np.testing.assert_allclose(p.numpy(), 0, atol=1e-12)

    def test_rejects_non_positive_rate(self):
        with pytest.raises(ConfigError):
            SGD([param([1.0])], lr=0.0)


class TestAdam:
    def test_first_step_moves_each_plane_by_lr(self):
        p = param([1 + 1j, -2 + 0.5j])
        abs2_step(Adam([p], lr=0.01), p)
        np.testing.assert_allclose(p.numpy(), [0.99 + 0.99j, -1.99 + 0.49j], atol=1e-7)

    @pytest.mark.parametrize("scale", [1e-3, 1.0, 1e3])
    def test_first_step_ignores_gradient_scale(self, scale):
        p = param([0.5 - 0.5j])
        p.grad = CTensor.from_complex(np.array([scale * (1 - 2j)]), "f64")
        optimizer_step("adam", [p], 0.01)
        np.testing.assert_allclose(p.numpy(), [0.49 - 0.49j], atol=1e-6)

    def test_state_tracks_steps(self):
        p = param([1 + 1j])
        state = None
        for _ in range(3):
            p.zero_grad()
            backward(F.sum(F.abs2(p)))
            state = optimizer_step("adam", [p], 0.01, state)
        assert isinstance(state, AdamState)
        assert state.step == 3
        assert set(state.m_re) == {0}


class TestErrors:
    def test_missing_gradient(self):
        with pytest.raises(GradientError):
            optimizer_step("sgd", [param([1.0])], 0.1)

    def test_unknown_kind(self):
        p = param([1.0])
        backward(F.sum(F.abs2(p)))
        with pytest.raises(ConfigError):
            optimizer_step("rmsprop", [p], 0.1)

    def test_build_optimizer(self):
        p = param([1.0])
        assert isinstance(build_optimizer("adam", [p], 0.1, betas=(0.5, 0.9)), Adam)
        assert type(build_optimizer("sgd", [p], 0.1)) is SGD
        with pytest.raises(ConfigError):
            build_optimizer("lbfgs", [p], 0.1)
