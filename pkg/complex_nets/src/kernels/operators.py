"""Real linear operators and the two complex composition paths.

A complex linear map L = L_R + j L_I is applied to z = x + jy either the
common way (four operator applications) or with Gauss's trick (three).
"""
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.errors import ShapeError
from src.tensor.ctensor import CTensor

# Planes are promoted to f64 for every operator application and rounded
# back to the input dtype once at the end.
WORK_DTYPE = np.float64


@dataclass
class MulCounter:
    """Per-call tally of operator applications and real scalar multiplies."""

    applications: int = 0
    multiplications: int = 0

    def record(self, operator: "RealOperator", x: np.ndarray) -> None:
        self.applications += 1
        self.multiplications += operator.multiplications(x.shape)


class RealOperator(ABC):
    """A real linear map that can be applied to one real plane."""

    @abstractmethod
    def apply(self, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def plus(self, other: "RealOperator") -> "RealOperator":
        """Operator whose weights are the sum of both operators' weights."""

    @abstractmethod
    def multiplications(self, x_shape: Tuple[int, ...]) -> int:
        ...

    def __call__(self, x: np.ndarray, counter: Optional[MulCounter] = None) -> np.ndarray:
        if counter is not None:
            counter.record(self, x)
        return self.apply(x)

    def _check_same_kind(self, other: "RealOperator") -> None:
        if type(other) is not type(self):
            raise ShapeError(
                f"Cannot sum a {type(self).__name__} with a {type(other).__name__}"
            )


class ScalarOperator(RealOperator):
    """Multiplication by a real scalar."""

    def __init__(self, value: float) -> None:
        self.value = float(value)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.value * x

    def plus(self, other: "RealOperator") -> "RealOperator":
        self._check_same_kind(other)
        return ScalarOperator(self.value + other.value)

    def multiplications(self, x_shape: Tuple[int, ...]) -> int:
        return int(np.prod(x_shape, dtype=np.int64))


class MatrixOperator(RealOperator):
    """Left multiplication ``A @ x`` with numpy batch broadcasting."""

    def __init__(self, matrix: np.ndarray) -> None:
        self.matrix = np.asarray(matrix, dtype=WORK_DTYPE)
        if self.matrix.ndim < 2:
            raise ShapeError("MatrixOperator needs at least a 2-D matrix")

    def apply(self, x: np.ndarray) -> np.ndarray:
        if x.ndim < 2 or x.shape[-2] != self.matrix.shape[-1]:
            raise ShapeError(
                f"Cannot multiply {self.matrix.shape} by {x.shape}"
            )
        try:
            return np.matmul(self.matrix, x)
        except ValueError as e:
            raise ShapeError(str(e)) from e

    def plus(self, other: "RealOperator") -> "RealOperator":
        self._check_same_kind(other)
        return MatrixOperator(self.matrix + other.matrix)

    def multiplications(self, x_shape: Tuple[int, ...]) -> int:
        out_shape = np.broadcast_shapes(self.matrix.shape[:-2], tuple(x_shape[:-2]))
        batch = int(np.prod(out_shape, dtype=np.int64))
        m, k = self.matrix.shape[-2:]
        return batch * m * k * int(x_shape[-1])


class DenseOperator(RealOperator):
    """The weight map of a linear layer: ``x @ W.T`` over the last axis."""

    def __init__(self, weight: np.ndarray) -> None:
        self.weight = np.asarray(weight, dtype=WORK_DTYPE)
        if self.weight.ndim != 2:
            raise ShapeError(f"Dense weight must be 2-D, got {self.weight.shape}")

    def apply(self, x: np.ndarray) -> np.ndarray:
        if x.shape[-1] != self.weight.shape[1]:
            raise ShapeError(
                f"Input features {x.shape[-1]} != weight in_features {self.weight.shape[1]}"
            )
        return x @ self.weight.T

    def plus(self, other: "RealOperator") -> "RealOperator":
        self._check_same_kind(other)
        return DenseOperator(self.weight + other.weight)

    def multiplications(self, x_shape: Tuple[int, ...]) -> int:
        rows = int(np.prod(x_shape[:-1], dtype=np.int64))
        return rows * self.weight.shape[0] * self.weight.shape[1]


def _planes(z: CTensor) -> Tuple[np.ndarray, np.ndarray]:
    return z.re.astype(WORK_DTYPE), z.im.astype(WORK_DTYPE)


def naive_apply(
    l_re: RealOperator,
    l_im: RealOperator,
    z: CTensor,
    counter: Optional[MulCounter] = None,
) -> CTensor:
    """L(z) = L_R(x) - L_I(y) + j(L_R(y) + L_I(x))."""
    x, y = _planes(z)
    re = l_re(x, counter) - l_im(y, counter)
    im = l_re(y, counter) + l_im(x, counter)
    return CTensor._wrap(re, im, z.dtype)


def gauss_apply(
    l_re: RealOperator,
    l_im: RealOperator,
    z: CTensor,
    counter: Optional[MulCounter] = None,
) -> CTensor:
    """L(z) = t1 - t2 + j(t3 - t2 - t1) with t3 = (L_R + L_I)(x + y)."""
    x, y = _planes(z)
    t1 = l_re(x, counter)
    t2 = l_im(y, counter)
    t3 = l_re.plus(l_im)(x + y, counter)
    return CTensor._wrap(t1 - t2, t3 - t2 - t1, z.dtype)


def complex_apply(
    l_re: RealOperator,
    l_im: RealOperator,
    z: CTensor,
    path: str = "gauss",
    counter: Optional[MulCounter] = None,
) -> CTensor:
    if path == "gauss":
        return gauss_apply(l_re, l_im, z, counter)
    if path == "naive":
        return naive_apply(l_re, l_im, z, counter)
    raise ValueError(f"Unknown kernel path {path!r}; expected 'gauss' or 'naive'")
