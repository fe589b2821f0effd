"""Split-plane complex tensor: z = x + jy stored as two real numpy buffers."""
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np

from src import config
from src.errors import DTypeError, ShapeError

DTYPES = {"f32": np.float32, "f64": np.float64}
COMPLEX_DTYPES = {"f32": np.complex64, "f64": np.complex128}

Scalar = Union[int, float, complex]
Axes = Optional[Union[int, Sequence[int]]]

ELEMENTWISE_OPS = ("add", "sub", "mul", "div", "conj", "abs", "angle", "exp", "scale_by_real")
REDUCE_OPS = ("sum", "mean", "max_magnitude", "min_magnitude")


def _dtype_name(arr: np.ndarray, fallback: Optional[str] = None) -> str:
    if arr.dtype in (np.float32, np.complex64):
        return "f32"
    if arr.dtype in (np.float64, np.complex128):
        return "f64"
    return fallback or config.DEFAULT_DTYPE


def _check_dtype(dtype: str) -> str:
    if dtype not in DTYPES:
        raise DTypeError(f"Unknown dtype {dtype!r}; expected one of {sorted(DTYPES)}")
    return dtype


class CTensor:
    """Immutable N-D complex tensor with separate real and imaginary planes."""

    __slots__ = ("_re", "_im", "_dtype")

    def __init__(
        self,
        re: Union[np.ndarray, Sequence, Scalar],
        im: Optional[Union[np.ndarray, Sequence, Scalar]] = None,
        dtype: Optional[str] = None,
    ) -> None:
        re_arr = np.asarray(re)
        if np.iscomplexobj(re_arr):
            raise DTypeError("CTensor planes must be real; use CTensor.from_complex")
        dtype = _check_dtype(dtype or _dtype_name(re_arr))
        re_arr = np.array(re_arr, dtype=DTYPES[dtype], order="C", copy=True)
        if im is None:
            im_arr = np.zeros_like(re_arr)
        else:
            im_arr = np.array(im, dtype=DTYPES[dtype], order="C", copy=True)
            if im_arr.shape != re_arr.shape:
                raise ShapeError(
                    f"Real plane {re_arr.shape} and imaginary plane "
                    f"{im_arr.shape} differ in shape"
                )
        self._init_planes(re_arr, im_arr, dtype)

    def _init_planes(self, re: np.ndarray, im: np.ndarray, dtype: str) -> None:
        re.flags.writeable = False
        im.flags.writeable = False
        self._re = re
        self._im = im
        self._dtype = dtype

    @classmethod
    def _wrap(cls, re: np.ndarray, im: np.ndarray, dtype: str) -> "CTensor":
        """Adopt freshly computed planes without copying."""
        obj = cls.__new__(cls)
        target = DTYPES[dtype]
        re = np.asarray(re, dtype=target, order="C")
        im = np.asarray(im, dtype=target, order="C")
        if re is im:
            im = re.copy()
        obj._init_planes(re, im, dtype)
        return obj

    @classmethod
    def from_complex(
        cls, values: Union[np.ndarray, Sequence, Scalar], dtype: Optional[str] = None
    ) -> "CTensor":
        arr = np.asarray(values)
        dtype = _check_dtype(dtype or _dtype_name(arr))
        return cls._wrap(np.real(arr).copy(), np.imag(arr).copy(), dtype)

    # Basic properties

    @property
    def re(self) -> np.ndarray:
        return self._re

    @property
    def im(self) -> np.ndarray:
        return self._im

    @property
    def dtype(self) -> str:
        return self._dtype

    @property
    def shape(self) -> Tuple[int, ...]:
        return self._re.shape

    @property
    def ndim(self) -> int:
        return self._re.ndim

    @property
    def size(self) -> int:
        return self._re.size

    @property
    def strides(self) -> Tuple[int, ...]:
        """Element (not byte) offsets per axis, shared by both planes."""
        itemsize = self._re.itemsize
        return tuple(s // itemsize for s in self._re.strides)

    def numpy(self) -> np.ndarray:
        """Complex numpy copy of the tensor."""
        out = np.empty(self.shape, dtype=COMPLEX_DTYPES[self._dtype])
        out.real = self._re
        out.imag = self._im
        return out

    def item(self) -> complex:
        if self.size != 1:
            raise ShapeError(f"item() needs a single element, tensor has {self.size}")
        return complex(self._re.reshape(-1)[0], self._im.reshape(-1)[0])

    def astype(self, dtype: str) -> "CTensor":
        _check_dtype(dtype)
        if dtype == self._dtype:
            return self
        return CTensor._wrap(self._re, self._im, dtype)

    # Shape manipulation

    def reshape(self, *shape) -> "CTensor":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        try:
            return CTensor._wrap(
                self._re.reshape(shape), self._im.reshape(shape), self._dtype
            )
        except ValueError as e:
            raise ShapeError(f"Cannot reshape {self.shape} to {shape}") from e

    def transpose(self, axes: Optional[Sequence[int]] = None) -> "CTensor":
        return CTensor._wrap(
            self._re.transpose(axes), self._im.transpose(axes), self._dtype
        )

    def __getitem__(self, index) -> "CTensor":
        return CTensor._wrap(self._re[index], self._im[index], self._dtype)

    # Arithmetic

    def __add__(self, other) -> "CTensor":
        return elementwise("add", self, other)

    def __radd__(self, other) -> "CTensor":
        return elementwise("add", self, other)

    def __sub__(self, other) -> "CTensor":
        return elementwise("sub", self, other)

    def __rsub__(self, other) -> "CTensor":
        return elementwise("sub", _lift(other, self._dtype), self)

    def __mul__(self, other) -> "CTensor":
        return elementwise("mul", self, other)

    def __rmul__(self, other) -> "CTensor":
        return elementwise("mul", self, other)

    def __truediv__(self, other) -> "CTensor":
        return elementwise("div", self, other)

    def __neg__(self) -> "CTensor":
        return CTensor._wrap(-self._re, -self._im, self._dtype)

    def conj(self) -> "CTensor":
        return elementwise("conj", self)

    def abs(self) -> "CTensor":
        return elementwise("abs", self)

    def angle(self) -> "CTensor":
        return elementwise("angle", self)

    def exp(self) -> "CTensor":
        return elementwise("exp", self)

    def sum(self, axes: Axes = None, keepdims: bool = False) -> "CTensor":
        return reduce("sum", self, axes, keepdims)

    def mean(self, axes: Axes = None, keepdims: bool = False) -> "CTensor":
        return reduce("mean", self, axes, keepdims)

    # Optimizer-only mutation

    def sub_(self, delta: "CTensor") -> "CTensor":
        """In-place ``self -= delta``; the only sanctioned mutation."""
        if delta.shape != self.shape:
            raise ShapeError(f"In-place update shape {delta.shape} != {self.shape}")
        target = DTYPES[self._dtype]
        self._init_planes(
            (self._re - delta.re).astype(target),
            (self._im - delta.im).astype(target),
            self._dtype,
        )
        return self

    def __repr__(self) -> str:
        return f"CTensor(shape={self.shape}, dtype={self._dtype})"


def _lift(value, dtype: str) -> CTensor:
    if isinstance(value, CTensor):
        return value
    arr = np.asarray(value)
    if arr.dtype == object:
        raise DTypeError(f"Cannot convert {type(value).__name__} to CTensor")
    return CTensor.from_complex(arr, dtype)


def _broadcast_shape(a: CTensor, b: CTensor) -> Tuple[int, ...]:
    try:
        return np.broadcast_shapes(a.shape, b.shape)
    except ValueError as e:
        raise ShapeError(f"Shapes {a.shape} and {b.shape} do not broadcast") from e


def unit_phase_planes(re: np.ndarray, im: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """z/|z| with the convention 0/|0| := 0."""
    mag = np.hypot(re, im)
    safe = np.where(mag > 0, mag, 1.0)
    return np.where(mag > 0, re / safe, 0.0), np.where(mag > 0, im / safe, 0.0)


def principal_angle(re: np.ndarray, im: np.ndarray) -> np.ndarray:
    """atan2 folded into (-pi, pi], with angle(0) = 0."""
    theta = np.arctan2(im, re)
    return np.where(theta <= -np.pi, np.pi, theta) + 0.0


def elementwise(op: str, a: CTensor, b: Optional[Union[CTensor, Scalar]] = None) -> CTensor:
    """Apply one of ELEMENTWISE_OPS; binary ops broadcast numpy-style."""
    if op not in ELEMENTWISE_OPS:
        raise ValueError(f"Unknown elementwise op {op!r}")
    a = _lift(a, config.DEFAULT_DTYPE)
    dtype = a.dtype

    if op == "conj":
        return CTensor._wrap(a.re, -a.im, dtype)
    if op == "abs":
        mag = np.hypot(a.re, a.im)
        return CTensor._wrap(mag, np.zeros_like(mag), dtype)
    if op == "angle":
        theta = principal_angle(a.re, a.im)
        return CTensor._wrap(theta, np.zeros_like(theta), dtype)
    if op == "exp":
        scale = np.exp(a.re)
        return CTensor._wrap(scale * np.cos(a.im), scale * np.sin(a.im), dtype)

    if b is None:
        raise ValueError(f"Elementwise op {op!r} needs a second operand")
    if isinstance(b, CTensor) and b.dtype != dtype:
        raise DTypeError(f"dtype mismatch: {dtype} vs {b.dtype}")
    b = _lift(b, dtype)
    _broadcast_shape(a, b)

    if op == "add":
        return CTensor._wrap(a.re + b.re, a.im + b.im, dtype)
    if op == "sub":
        return CTensor._wrap(a.re - b.re, a.im - b.im, dtype)
    if op == "mul":
        return CTensor._wrap(
            a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re, dtype
        )
    if op == "div":
        quotient = a.numpy() / b.numpy()
        return CTensor._wrap(quotient.real, quotient.imag, dtype)
    # scale_by_real: only the real plane of b is used
    return CTensor._wrap(a.re * b.re, a.im * b.re, dtype)


def normalize_axes(ndim: int, axes: Axes) -> Tuple[int, ...]:
    if axes is None:
        return tuple(range(ndim))
    if isinstance(axes, (int, np.integer)):
        axes = (int(axes),)
    normalized = []
    for ax in axes:
        if not -ndim <= ax < ndim:
            raise ShapeError(f"axis {ax} out of range for a {ndim}-d tensor")
        normalized.append(ax % ndim)
    if len(set(normalized)) != len(normalized):
        raise ShapeError(f"Repeated axis in {tuple(axes)}")
    return tuple(normalized)


def reduce(op: str, a: CTensor, axes: Axes = None, keepdims: bool = False) -> CTensor:
    """Reduce over ``axes``; magnitude extrema return a real-valued tensor."""
    if op not in REDUCE_OPS:
        raise ValueError(f"Unknown reduction {op!r}")
    axes = normalize_axes(a.ndim, axes)
    if a.size == 0 or any(a.shape[ax] == 0 for ax in axes):
        raise ShapeError("empty reduction")

    if op == "sum":
        return CTensor._wrap(
            a.re.sum(axis=axes, keepdims=keepdims),
            a.im.sum(axis=axes, keepdims=keepdims),
            a.dtype,
        )
    if op == "mean":
        return CTensor._wrap(
            a.re.mean(axis=axes, keepdims=keepdims),
            a.im.mean(axis=axes, keepdims=keepdims),
            a.dtype,
        )
    mag = np.hypot(a.re, a.im)
    pick = np.max if op == "max_magnitude" else np.min
    extremum = pick(mag, axis=axes, keepdims=keepdims)
    return CTensor._wrap(extremum, np.zeros_like(extremum), a.dtype)


# Factories

def zeros(shape: Iterable[int], dtype: Optional[str] = None) -> CTensor:
    dtype = _check_dtype(dtype or config.DEFAULT_DTYPE)
    shape = tuple(shape)
    return CTensor._wrap(np.zeros(shape), np.zeros(shape), dtype)


def full(shape: Iterable[int], value: Scalar, dtype: Optional[str] = None) -> CTensor:
    dtype = _check_dtype(dtype or config.DEFAULT_DTYPE)
    shape = tuple(shape)
    value = complex(value)
    return CTensor._wrap(np.full(shape, value.real), np.full(shape, value.imag), dtype)


def circular_normal(
    rng: np.random.Generator,
    shape: Iterable[int],
    scale: float = 1.0,
    dtype: Optional[str] = None,
) -> CTensor:
    """Circular complex Gaussian with E|z|^2 = scale^2."""
    dtype = _check_dtype(dtype or config.DEFAULT_DTYPE)
    shape = tuple(shape)
    std = scale / np.sqrt(2.0)
    return CTensor._wrap(
        rng.normal(0.0, std, size=shape), rng.normal(0.0, std, size=shape), dtype
    )
