"""Differentiable operations on Variables.

Every op computes its forward value in complex128, wraps it back to the
input dtype and, when any input requires a gradient, records a Node whose
backward function maps the output gradient to one gradient per input.
"Real" ops (``abs``, ``angle``, ``softmax``, the ``rfn`` table) return a
zero imaginary plane and read only the real plane of their real inputs.
"""
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit, softmax as real_softmax

from src import config
from src.autodiff.variable import Node, Variable, is_grad_enabled, next_sequence
from src.errors import CVNNError, DTypeError, ShapeError
from src.kernels.conv import ConvSpec, conv_nd, conv_transpose_nd, conv_weight_grad, convnd
from src.kernels.operators import DenseOperator, MatrixOperator, complex_apply
from src.tensor.ctensor import CTensor, normalize_axes, principal_angle

Operand = Union[Variable, CTensor, complex, float, int, np.ndarray]
Axes = Optional[Union[int, Sequence[int]]]


# Plumbing

def _dtype_of(*operands: Operand) -> str:
    dtypes = {
        op.dtype for op in operands if isinstance(op, (Variable, CTensor))
    }
    if len(dtypes) > 1:
        raise DTypeError(f"dtype mismatch between operands: {sorted(dtypes)}")
    return dtypes.pop() if dtypes else config.DEFAULT_DTYPE


def as_variable(value: Operand, dtype: Optional[str] = None) -> Variable:
    """Wrap constants as non-differentiable Variables."""
    if isinstance(value, Variable):
        return value
    if isinstance(value, CTensor):
        return Variable(value)
    return Variable(CTensor.from_complex(np.asarray(value, dtype=np.complex128), dtype))


def _lift(*operands: Operand) -> Tuple[str, Tuple[Variable, ...]]:
    dtype = _dtype_of(*operands)
    return dtype, tuple(as_variable(op, dtype) for op in operands)


def _arr(v: Variable) -> np.ndarray:
    return v.value.numpy().astype(np.complex128, copy=False)


def _record(
    op: str,
    out: np.ndarray,
    inputs: Sequence[Variable],
    backward_fn: Callable,
    dtype: str,
) -> Variable:
    result = Variable(CTensor.from_complex(out, dtype))
    if is_grad_enabled() and any(v.requires_grad for v in inputs):
        result.requires_grad = True
        result.node = Node(op, tuple(inputs), backward_fn, next_sequence())
    return result


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sum a broadcast gradient back down to ``shape``."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, extent in enumerate(shape):
        if extent == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _real(g: np.ndarray) -> np.ndarray:
    return g.real.astype(np.complex128)


def _safe_mag(z: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    mag = np.abs(z)
    return mag, np.where(mag > 0, mag, 1.0)


def _broadcast(*arrays: np.ndarray) -> None:
    try:
        np.broadcast_shapes(*(a.shape for a in arrays))
    except ValueError as e:
        raise ShapeError(str(e)) from e


# Arithmetic

def add(a: Operand, b: Operand) -> Variable:
    dtype, (a, b) = _lift(a, b)
    za, zb = _arr(a), _arr(b)
    _broadcast(za, zb)

    def backward_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _record("add", za + zb, (a, b), backward_fn, dtype)


def sub(a: Operand, b: Operand) -> Variable:
    dtype, (a, b) = _lift(a, b)
    za, zb = _arr(a), _arr(b)
    _broadcast(za, zb)

    def backward_fn(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _record("sub", za - zb, (a, b), backward_fn, dtype)


def mul(a: Operand, b: Operand) -> Variable:
    dtype, (a, b) = _lift(a, b)
    za, zb = _arr(a), _arr(b)
    _broadcast(za, zb)

    def backward_fn(g):
        return (
            _unbroadcast(np.conj(zb) * g, a.shape),
            _unbroadcast(np.conj(za) * g, b.shape),
        )

    return _record("mul", za * zb, (a, b), backward_fn, dtype)


def div(a: Operand, b: Operand) -> Variable:
    dtype, (a, b) = _lift(a, b)
    za, zb = _arr(a), _arr(b)
    _broadcast(za, zb)
    out = za / zb

    def backward_fn(g):
        return (
            _unbroadcast(np.conj(1.0 / zb) * g, a.shape),
            _unbroadcast(-np.conj(out / zb) * g, b.shape),
        )

    return _record("div", out, (a, b), backward_fn, dtype)


def neg(z: Operand) -> Variable:
    dtype, (z,) = _lift(z)
    return _record("neg", -_arr(z), (z,), lambda g: (-g,), dtype)


def conj(z: Operand) -> Variable:
    dtype, (z,) = _lift(z)
    return _record("conj", np.conj(_arr(z)), (z,), lambda g: (np.conj(g),), dtype)


# Planes

def real(z: Operand) -> Variable:
    """Re(z) as a real-valued Variable."""
    dtype, (z,) = _lift(z)
    out = _arr(z).real.astype(np.complex128)
    return _record("real", out, (z,), lambda g: (_real(g),), dtype)


def imag(z: Operand) -> Variable:
    """Im(z) as a real-valued Variable."""
    dtype, (z,) = _lift(z)
    out = _arr(z).imag.astype(np.complex128)
    return _record("imag", out, (z,), lambda g: (1j * g.real,), dtype)


def make_complex(re: Operand, im: Operand) -> Variable:
    """Re(re) + j Re(im)."""
    dtype, (re, im) = _lift(re, im)
    xr, xi = _arr(re).real, _arr(im).real
    _broadcast(xr, xi)

    def backward_fn(g):
        return (
            _unbroadcast(_real(g), re.shape),
            _unbroadcast(g.imag.astype(np.complex128), im.shape),
        )

    return _record("make_complex", xr + 1j * xi, (re, im), backward_fn, dtype)


# Complex elementwise functions

def abs(z: Operand) -> Variable:  # noqa: A001
    dtype, (z,) = _lift(z)
    arr = _arr(z)
    mag, safe = _safe_mag(arr)

    def backward_fn(g):
        return (np.where(mag > 0, arr / safe, 0.0) * g.real,)

    return _record("abs", mag.astype(np.complex128), (z,), backward_fn, dtype)


def abs2(z: Operand) -> Variable:
    """|z|^2 (smooth everywhere)."""
    dtype, (z,) = _lift(z)
    arr = _arr(z)
    out = (arr.real ** 2 + arr.imag ** 2).astype(np.complex128)
    return _record("abs2", out, (z,), lambda g: (2.0 * arr * g.real,), dtype)


def angle(z: Operand) -> Variable:
    """Principal phase in (-pi, pi], angle(0) = 0."""
    dtype, (z,) = _lift(z)
    arr = _arr(z)
    theta = principal_angle(arr.real, arr.imag)
    _, safe = _safe_mag(arr)

    def backward_fn(g):
        # d(theta)/dx = -y/r^2, d(theta)/dy = x/r^2
        return (np.where(np.abs(arr) > 0, 1j * arr / safe ** 2, 0.0) * g.real,)

    return _record("angle", theta.astype(np.complex128), (z,), backward_fn, dtype)


def exp(z: Operand) -> Variable:
    dtype, (z,) = _lift(z)
    out = np.exp(_arr(z))
    return _record("exp", out, (z,), lambda g: (np.conj(out) * g,), dtype)


def log(z: Operand) -> Variable:
    """Principal-branch complex logarithm."""
    dtype, (z,) = _lift(z)
    arr = _arr(z)
    if np.any(arr == 0):
        raise CVNNError("log of a zero element")
    out = np.log(np.abs(arr)) + 1j * principal_angle(arr.real, arr.imag)
    return _record("log", out, (z,), lambda g: (np.conj(1.0 / arr) * g,), dtype)


def unit_phase(z: Operand, at_zero: float = 0.0) -> Variable:
    """z/|z|, with ``at_zero`` at z = 0."""
    dtype, (z,) = _lift(z)
    arr = _arr(z)
    mag, safe = _safe_mag(arr)
    nonzero = mag > 0
    out = np.where(nonzero, arr / safe, at_zero)

    def backward_fn(g):
        grad = g / (2 * safe) - arr ** 2 * np.conj(g) / (2 * safe ** 3)
        return (np.where(nonzero, grad, 0.0),)

    return _record("unit_phase", out, (z,), backward_fn, dtype)


def phasor(theta: Operand) -> Variable:
    """exp(j * Re(theta))."""
    dtype, (theta,) = _lift(theta)
    t = _arr(theta).real
    out = np.cos(t) + 1j * np.sin(t)

    def backward_fn(g):
        return (np.real(np.conj(g) * 1j * out).astype(np.complex128),)

    return _record("phasor", out, (theta,), backward_fn, dtype)


# Real functions of the real plane

RealFn = Tuple[Callable[[np.ndarray], np.ndarray], Callable[[np.ndarray], np.ndarray]]


def _logcosh(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(x, -x) - np.log(2.0)


REAL_FUNCTIONS: Dict[str, RealFn] = {
    "tanh": (np.tanh, lambda x: 1.0 - np.tanh(x) ** 2),
    "sigmoid": (expit, lambda x: expit(x) * (1.0 - expit(x))),
    # subgradient 0 at the kink
    "relu": (lambda x: np.maximum(x, 0.0), lambda x: (x > 0).astype(np.float64)),
    "abs": (np.abs, np.sign),
    "exp": (np.exp, np.exp),
    "log": (np.log, lambda x: 1.0 / x),
    "log1p": (np.log1p, lambda x: 1.0 / (1.0 + x)),
    "sqrt": (np.sqrt, lambda x: 0.5 / np.sqrt(x)),
    "square": (np.square, lambda x: 2.0 * x),
    "cos": (np.cos, lambda x: -np.sin(x)),
    "sin": (np.sin, np.cos),
    "logcosh": (_logcosh, np.tanh),
    "reciprocal": (lambda x: 1.0 / x, lambda x: -1.0 / x ** 2),
    "identity": (lambda x: x, np.ones_like),
}


def real_map(
    z: Operand,
    fn: Callable[[np.ndarray], np.ndarray],
    dfn: Callable[[np.ndarray], np.ndarray],
    name: str = "real_map",
) -> Variable:
    """Apply a real function and its derivative to the real plane of z."""
    dtype, (z,) = _lift(z)
    x = _arr(z).real
    out = np.asarray(fn(x), dtype=np.float64).astype(np.complex128)

    def backward_fn(g):
        return (np.asarray(dfn(x), dtype=np.float64) * g.real + 0j,)

    return _record(name, out, (z,), backward_fn, dtype)


def rfn(name: str, z: Operand) -> Variable:
    if name not in REAL_FUNCTIONS:
        raise ValueError(f"Unknown real function {name!r}; known: {sorted(REAL_FUNCTIONS)}")
    fn, dfn = REAL_FUNCTIONS[name]
    return real_map(z, fn, dfn, name)


def prelu(x: Operand, slope: Operand) -> Variable:
    """PReLU of the real plane of x with a learnable real slope."""
    dtype, (x, slope) = _lift(x, slope)
    xr = _arr(x).real
    a = _arr(slope).real
    _broadcast(xr, a)
    positive = xr > 0
    out = np.where(positive, xr, a * xr).astype(np.complex128)

    def backward_fn(g):
        gr = g.real
        gx = np.where(positive, 1.0, a) * gr + 0j
        ga = _unbroadcast(np.where(positive, 0.0, xr) * gr + 0j, slope.shape)
        return _unbroadcast(gx, x.shape), ga

    return _record("prelu", out, (x, slope), backward_fn, dtype)


def softmax(x: Operand, axis: int = -1) -> Variable:
    """Real softmax of the real plane along ``axis`` (max-shifted)."""
    dtype, (x,) = _lift(x)
    xr = _arr(x).real
    (axis,) = normalize_axes(xr.ndim, axis)
    s = real_softmax(xr, axis=axis)

    def backward_fn(g):
        gr = g.real
        return (s * (gr - np.sum(gr * s, axis=axis, keepdims=True)) + 0j,)

    return _record("softmax", s.astype(np.complex128), (x,), backward_fn, dtype)


# Reductions

def _expand(g: np.ndarray, axes: Tuple[int, ...], keepdims: bool) -> np.ndarray:
    return g if keepdims else np.expand_dims(g, axes)


def _check_nonempty(shape: Tuple[int, ...], axes: Tuple[int, ...]) -> None:
    if int(np.prod(shape)) == 0 or any(shape[ax] == 0 for ax in axes):
        raise ShapeError("empty reduction")


def sum(z: Operand, axes: Axes = None, keepdims: bool = False) -> Variable:  # noqa: A001
    dtype, (z,) = _lift(z)
    arr = _arr(z)
    axes = normalize_axes(arr.ndim, axes)
    _check_nonempty(arr.shape, axes)

    def backward_fn(g):
        return (np.broadcast_to(_expand(g, axes, keepdims), arr.shape).copy(),)

    return _record("sum", arr.sum(axis=axes, keepdims=keepdims), (z,), backward_fn, dtype)


def mean(z: Operand, axes: Axes = None, keepdims: bool = False) -> Variable:
    dtype, (z,) = _lift(z)
    arr = _arr(z)
    axes = normalize_axes(arr.ndim, axes)
    _check_nonempty(arr.shape, axes)
    count = int(np.prod([arr.shape[ax] for ax in axes]))

    def backward_fn(g):
        return (np.broadcast_to(_expand(g, axes, keepdims) / count, arr.shape).copy(),)

    return _record("mean", arr.mean(axis=axes, keepdims=keepdims), (z,), backward_fn, dtype)


def _magnitude_extremum(op: str, z: Operand, axes: Axes, keepdims: bool) -> Variable:
    dtype, (z,) = _lift(z)
    arr = _arr(z)
    axes = normalize_axes(arr.ndim, axes)
    _check_nonempty(arr.shape, axes)
    keep = [ax for ax in range(arr.ndim) if ax not in axes]
    order = keep + list(axes)
    kept_shape = [arr.shape[ax] for ax in keep]

    mag = np.abs(arr)
    moved = np.transpose(mag, order).reshape(kept_shape + [-1])
    pick = np.argmax if op == "max_magnitude" else np.argmin
    # first occurrence wins on ties
    idx = pick(moved, axis=-1)[..., None]
    flat_mask = np.zeros(moved.shape, dtype=bool)
    np.put_along_axis(flat_mask, idx, True, axis=-1)
    mask = np.transpose(
        flat_mask.reshape(kept_shape + [arr.shape[ax] for ax in axes]),
        np.argsort(order),
    )
    out = np.take_along_axis(moved, idx, axis=-1)[..., 0]
    if keepdims:
        out = np.expand_dims(out, axes)
    _, safe = _safe_mag(arr)
    direction = np.where(mag > 0, arr / safe, 0.0)

    def backward_fn(g):
        return (mask * direction * _expand(g, axes, keepdims).real,)

    return _record(op, out.astype(np.complex128), (z,), backward_fn, dtype)


def max_magnitude(z: Operand, axes: Axes = None, keepdims: bool = False) -> Variable:
    return _magnitude_extremum("max_magnitude", z, axes, keepdims)


def min_magnitude(z: Operand, axes: Axes = None, keepdims: bool = False) -> Variable:
    return _magnitude_extremum("min_magnitude", z, axes, keepdims)


# Shape

def reshape(z: Operand, shape: Sequence[int]) -> Variable:
    dtype, (z,) = _lift(z)
    arr = _arr(z)
    try:
        out = arr.reshape(tuple(shape))
    except ValueError as e:
        raise ShapeError(f"Cannot reshape {arr.shape} to {tuple(shape)}") from e
    return _record("reshape", out, (z,), lambda g: (g.reshape(arr.shape),), dtype)


def transpose(z: Operand, axes: Optional[Sequence[int]] = None) -> Variable:
    dtype, (z,) = _lift(z)
    arr = _arr(z)
    axes = tuple(range(arr.ndim))[::-1] if axes is None else tuple(axes)
    inverse = tuple(np.argsort(axes))
    return _record(
        "transpose", arr.transpose(axes), (z,), lambda g: (g.transpose(inverse),), dtype
    )


def swap_last(z: Operand) -> Variable:
    """Transpose of the two trailing axes."""
    dtype, (z,) = _lift(z)
    axes = list(range(z.ndim))
    axes[-2], axes[-1] = axes[-1], axes[-2]
    return transpose(z, axes)


def getitem(z: Operand, index) -> Variable:
    dtype, (z,) = _lift(z)
    arr = _arr(z)

    def backward_fn(g):
        grad = np.zeros(arr.shape, dtype=np.complex128)
        np.add.at(grad, index, g)
        return (grad,)

    return _record("getitem", arr[index], (z,), backward_fn, dtype)


def broadcast_to(z: Operand, shape: Sequence[int]) -> Variable:
    dtype, (z,) = _lift(z)
    arr = _arr(z)
    try:
        out = np.broadcast_to(arr, tuple(shape)).copy()
    except ValueError as e:
        raise ShapeError(f"Cannot broadcast {arr.shape} to {tuple(shape)}") from e
    return _record(
        "broadcast_to", out, (z,), lambda g: (_unbroadcast(g, arr.shape),), dtype
    )


# Linear maps

def matmul(a: Operand, b: Operand, path: Optional[str] = None) -> Variable:
    """Batched complex matrix product a @ b through the kernel paths."""
    dtype, (a, b) = _lift(a, b)
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError(f"matmul needs matrices, got {a.shape} and {b.shape}")
    za, zb = _arr(a), _arr(b)
    out = complex_apply(
        MatrixOperator(a.value.re), MatrixOperator(a.value.im), b.value,
        path or config.DEFAULT_KERNEL_PATH,
    ).numpy().astype(np.complex128)

    def backward_fn(g):
        ga = g @ np.conj(np.swapaxes(zb, -1, -2))
        gb = np.conj(np.swapaxes(za, -1, -2)) @ g
        return _unbroadcast(ga, a.shape), _unbroadcast(gb, b.shape)

    return _record("matmul", out, (a, b), backward_fn, dtype)


def linear(
    z: Operand, weight: Operand, bias: Optional[Operand] = None, path: Optional[str] = None
) -> Variable:
    """z @ W^T + b over the last axis; W is (out_features, in_features)."""
    operands = (z, weight) if bias is None else (z, weight, bias)
    dtype, lifted = _lift(*operands)
    z, weight = lifted[0], lifted[1]
    if weight.ndim != 2 or z.ndim < 1 or z.shape[-1] != weight.shape[1]:
        raise ShapeError(
            f"Linear layer expects (..., {weight.shape[-1]}) input, got {z.shape}"
        )
    arr, w = _arr(z), _arr(weight)
    out = complex_apply(
        DenseOperator(weight.value.re), DenseOperator(weight.value.im), z.value,
        path or config.DEFAULT_KERNEL_PATH,
    ).numpy().astype(np.complex128)
    if bias is not None:
        bias = lifted[2]
        if bias.shape != (weight.shape[0],):
            raise ShapeError(f"bias shape {bias.shape} != ({weight.shape[0]},)")
        out = out + _arr(bias)

    def backward_fn(g):
        g2 = g.reshape(-1, w.shape[0])
        z2 = arr.reshape(-1, w.shape[1])
        grads = [g @ np.conj(w), g2.T @ np.conj(z2)]
        if bias is not None:
            grads.append(g2.sum(axis=0))
        return grads

    return _record("linear", out, lifted, backward_fn, dtype)


def _bias_view(bias: np.ndarray, n: int) -> np.ndarray:
    return bias.reshape((1, -1) + (1,) * n)


def _bias_grad(g: np.ndarray) -> np.ndarray:
    return g.sum(axis=(0,) + tuple(range(2, g.ndim)))


def conv(
    z: Operand,
    weight: Operand,
    bias: Optional[Operand],
    spec: ConvSpec,
    path: Optional[str] = None,
) -> Variable:
    """Complex N-D cross-correlation; weight is (out_ch, in_ch, *k)."""
    operands = (z, weight) if bias is None else (z, weight, bias)
    dtype, lifted = _lift(*operands)
    z, weight = lifted[0], lifted[1]
    n = spec.n
    out = convnd(
        "forward", n, weight.value, None, z.value, spec, path or config.DEFAULT_KERNEL_PATH
    ).numpy().astype(np.complex128)
    if bias is not None:
        bias = lifted[2]
        if bias.shape != (weight.shape[0],):
            raise ShapeError(f"bias shape {bias.shape} != ({weight.shape[0]},)")
        out = out + _bias_view(_arr(bias), n)
    arr, w = _arr(z), _arr(weight)

    def backward_fn(g):
        grads = [
            conv_transpose_nd(g, np.conj(w), spec, out_size=arr.shape[2:]),
            conv_weight_grad(np.conj(arr), g, spec, w.shape[2:]),
        ]
        if bias is not None:
            grads.append(_bias_grad(g))
        return grads

    return _record(f"conv{n}d", out, lifted, backward_fn, dtype)


def conv_transpose(
    z: Operand,
    weight: Operand,
    bias: Optional[Operand],
    spec: ConvSpec,
    path: Optional[str] = None,
) -> Variable:
    """Complex N-D transposed convolution; weight is (in_ch, out_ch, *k)."""
    operands = (z, weight) if bias is None else (z, weight, bias)
    dtype, lifted = _lift(*operands)
    z, weight = lifted[0], lifted[1]
    n = spec.n
    out = convnd(
        "transposed", n, weight.value, None, z.value, spec,
        path or config.DEFAULT_KERNEL_PATH,
    ).numpy().astype(np.complex128)
    if bias is not None:
        bias = lifted[2]
        if bias.shape != (weight.shape[1],):
            raise ShapeError(f"bias shape {bias.shape} != ({weight.shape[1]},)")
        out = out + _bias_view(_arr(bias), n)
    arr, w = _arr(z), _arr(weight)
    trim = (slice(None), slice(None)) + tuple(slice(0, s) for s in arr.shape[2:])

    def backward_fn(g):
        grads = [
            conv_nd(g, np.conj(w), spec)[trim],
            conv_weight_grad(g, np.conj(arr), spec, w.shape[2:]),
        ]
        if bias is not None:
            grads.append(_bias_grad(g))
        return grads

    return _record(f"conv_transpose{n}d", out, lifted, backward_fn, dtype)


def real_weight_conv(z: Operand, weight: Operand, spec: ConvSpec) -> Variable:
    """Cross-correlation with the real plane of ``weight``; two real products per tap."""
    dtype, (z, weight) = _lift(z, weight)
    arr = _arr(z)
    w = _arr(weight).real
    out = conv_nd(arr, w, spec)

    def backward_fn(g):
        gz = conv_transpose_nd(g, w, spec, out_size=arr.shape[2:])
        gw = conv_weight_grad(np.conj(arr), g, spec, w.shape[2:]).real + 0j
        return gz, gw

    return _record(f"real_weight_conv{spec.n}d", out, (z, weight), backward_fn, dtype)


def axis_matmul(z: Operand, matrix: np.ndarray, axis: int) -> Variable:
    """Apply a constant real matrix (out, in) along one axis."""
    dtype, (z,) = _lift(z)
    arr = _arr(z)
    (axis,) = normalize_axes(arr.ndim, axis)
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[1] != arr.shape[axis]:
        raise ShapeError(f"matrix {matrix.shape} does not fit axis {axis} of {arr.shape}")
    out = np.moveaxis(np.tensordot(matrix, arr, axes=([1], [axis])), 0, axis)

    def backward_fn(g):
        return (np.moveaxis(np.tensordot(matrix.T, g, axes=([1], [axis])), 0, axis),)

    return _record("axis_matmul", out, (z,), backward_fn, dtype)
