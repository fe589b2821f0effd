import numpy as np
import pytest

from src.autodiff import functional as F
from src.autodiff.gradcheck import check_gradients, finite_diff_check
from src.autodiff.variable import Tape, Variable, backward, no_grad
from src.errors import CVNNError, GradientError
from src.nn.layers import CVLinear
from src.nn.losses import split_loss
from src.tensor.ctensor import CTensor


def var(values, requires_grad=True):
    return Variable(CTensor.from_complex(np.asarray(values, dtype=np.complex128), "f64"), requires_grad)


class TestBackward:
    def test_abs2(self):
        z = var([3 + 4j])
        backward(F.sum(F.abs2(z)))
        assert z.grad.numpy()[0] == 6 + 8j

    def test_real_part(self):
        z = var([2 - 7j])
        backward(F.sum(F.real(z)))
        assert z.grad.numpy()[0] == 1 + 0j

    def test_imag_part(self):
        z = var([2 - 7j])
        backward(F.sum(F.imag(z)))
        assert z.grad.numpy()[0] == 1j

    def test_holomorphic_map_uses_conjugate_derivative(self):
        # L = Re(c z) has dL/dx + j dL/dy = conj(c)
        z = var([0.3 + 0.1j])
        backward(F.real(F.sum(F.mul(z, 2 + 3j))))
        assert z.grad.numpy()[0] == pytest.approx(2 - 3j)

    def test_shared_subexpression_accumulates(self):
        z = var([1 + 2j])
        y = F.abs2(z)
        backward(F.sum(F.add(y, y)))
        assert z.grad.numpy()[0] == pytest.approx(4 + 8j)

    def test_gradient_accumulates_across_calls(self):
        z = var([1 + 0j])
        backward(F.sum(F.real(z)))
        backward(F.sum(F.real(z)))
        assert z.grad.numpy()[0] == 2 + 0j
        z.zero_grad()
        assert z.grad is None

    def test_non_scalar_loss(self):
        with pytest.raises(GradientError, match="scalar"):
            backward(F.abs2(var([1j, 2j])))

    def test_complex_loss(self):
        with pytest.raises(GradientError, match="real"):
            backward(F.sum(var([1 + 1j])))

    def test_constants_get_no_gradient(self):
        c = var([1 + 1j], requires_grad=False)
        z = var([2 + 0j])
        backward(F.sum(F.abs2(F.mul(c, z))))
        assert c.grad is None
        assert z.grad is not None

    def test_broadcast_gradient_is_summed(self):
        z = var(np.ones((3, 2)))
        b = var([1j, 2j])
        backward(F.real(F.sum(F.add(z, b))))
        np.testing.assert_array_equal(b.grad.numpy(), [3 + 0j, 3 + 0j])


class TestTape:
    def test_topological_order(self):
        z = var([1 + 1j])
        a = F.mul(z, 2.0)
        b = F.exp(a)
        loss = F.sum(F.abs2(b))
        tape = Tape.from_output(loss)
        seqs = [node.seq for node in tape]
        assert seqs == sorted(seqs)
        assert [node.op for node in tape] == ["mul", "exp", "abs2", "sum"]

    def test_no_grad_records_nothing(self):
        z = var([1 + 1j])
        with no_grad():
            out = F.exp(z)
        assert out.node is None
        assert not out.requires_grad

    def test_no_grad_restores(self):
        z = var([1 + 1j])
        with no_grad():
            pass
        assert F.exp(z).node is not None


class TestFiniteDifferences:
    def test_abs2(self):
        z0 = CTensor.from_complex(np.array([1 + 1j]), "f64")
        assert finite_diff_check(lambda z: F.sum(F.abs2(z)), z0) <= 1e-8

    def test_real_is_exact(self):
        z0 = CTensor.from_complex(np.array([0.3 - 2j, 5 + 1j]), "f64")
        assert finite_diff_check(lambda z: F.sum(F.real(z)), z0) <= 1e-10

    def test_zrelu_interior(self):
        from src.nn.activations import zrelu

        z0 = CTensor.from_complex(np.array([np.exp(1j * np.pi / 4)]), "f64")
        assert finite_diff_check(lambda z: F.sum(F.abs(zrelu(z))), z0) <= 1e-6

    def test_linear_split_mse(self, rng):
        layer = CVLinear(4, 4, rng=rng, dtype="f64")
        z = Variable(CTensor(rng.normal(size=(4, 4)), rng.normal(size=(4, 4)), "f64"))
        target = CTensor(rng.normal(size=(4, 4)), rng.normal(size=(4, 4)), "f64")
        worst = check_gradients(
            lambda: split_loss("MSE", layer(z), target), [z] + layer.parameters()
        )
        assert worst <= 1e-6

    def test_values_restored(self, rng):
        z0 = CTensor(rng.normal(size=3), rng.normal(size=3), "f64")
        z = Variable(z0)
        check_gradients(lambda: F.sum(F.abs2(z)), [z])
        assert z.value is z0


class TestFunctional:
    def test_log_of_zero(self):
        with pytest.raises(CVNNError):
            F.log(var([0j]))

    def test_unit_phase_at_zero(self):
        out = F.unit_phase(var([0j, 3 + 4j]))
        np.testing.assert_allclose(out.numpy(), [0, 0.6 + 0.8j])
        assert F.unit_phase(var([0j]), at_zero=1.0).numpy()[0] == 1

    def test_magnitude_extremum_first_tie_wins(self):
        z = var([1 + 0j, 1j, 0.5])
        backward(F.real(F.max_magnitude(z)))
        np.testing.assert_array_equal(z.grad.numpy(), [1, 0, 0])

    def test_softmax_sums_to_one(self, rng):
        s = F.softmax(var(rng.normal(size=(3, 5))), axis=-1)
        np.testing.assert_allclose(s.numpy().real.sum(axis=-1), 1.0, atol=1e-12)

    def test_matmul_paths_agree(self, crandn):
        a, b = var(crandn(3, 4)), var(crandn(4, 2))
        np.testing.assert_allclose(
            F.matmul(a, b, "gauss").numpy(), F.matmul(a, b, "naive").numpy(), atol=1e-12
        )
        np.testing.assert_allclose(F.matmul(a, b).numpy(), a.numpy() @ b.numpy(), atol=1e-12)

    def test_getitem_gradient(self):
        z = var([1 + 1j, 2 + 2j, 3 + 3j])
        backward(F.real(F.sum(z[1:])))
        np.testing.assert_array_equal(z.grad.numpy(), [0, 1, 1])
