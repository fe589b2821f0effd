"""Central finite-difference oracle for the real-pair gradient."""
from typing import Callable, Sequence

import numpy as np

from src.autodiff.variable import Variable, backward, no_grad
from src.errors import GradientError
from src.tensor.ctensor import CTensor

ScalarFn = Callable[..., Variable]


def _real_value(out: Variable) -> float:
    if out.value.size != 1:
        raise GradientError(f"checked function must return a scalar, got shape {out.shape}")
    value = out.item()
    if value.imag != 0 and abs(value.imag) > 1e-12 * abs(value.real):
        raise GradientError(f"checked function must return a real value, got {value}")
    return value.real


def _perturbed(base: np.ndarray, flat_index: int, step: complex, dtype: str) -> CTensor:
    values = base.copy().reshape(-1)
    values[flat_index] += step
    return CTensor.from_complex(values.reshape(base.shape), dtype)


def check_gradients(f: Callable[[], Variable], variables: Sequence[Variable], h: float = 1e-6) -> float:
    """Worst relative error of backward() against central differences.

    ``f`` is re-evaluated with each real degree of freedom of each variable
    moved by +-h; the variables' values are restored afterwards.
    """
    for v in variables:
        v.requires_grad = True
        v.zero_grad()
    out = f()
    _real_value(out)
    backward(out)

    worst = 0.0
    for v in variables:
        analytic = (
            np.zeros(v.shape, dtype=np.complex128) if v.grad is None else v.grad.numpy()
        ).reshape(-1)
        original = v.value
        base = original.numpy().astype(np.complex128)
        try:
            with no_grad():
                for i in range(base.size):
                    parts = []
                    for step in (h, 1j * h):
                        v.value = _perturbed(base, i, step, original.dtype)
                        f_plus = _real_value(f())
                        v.value = _perturbed(base, i, -step, original.dtype)
                        f_minus = _real_value(f())
                        parts.append((f_plus - f_minus) / (2 * h))
                    central = complex(parts[0], parts[1])
                    error = abs(analytic[i] - central) / max(1.0, abs(central))
                    worst = max(worst, error)
        finally:
            v.value = original
    return worst


def finite_diff_check(f: ScalarFn, z0: CTensor, h: float = 1e-6) -> float:
    """max |analytic - central| / max(1, |central|) over the elements of z0."""
    z = Variable(z0, requires_grad=True)
    return check_gradients(lambda: f(z), [z], h)
