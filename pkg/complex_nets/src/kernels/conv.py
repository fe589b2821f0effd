"""N-D cross-correlation (im2col over sliding windows) and its adjoint."""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.errors import ShapeError
from src.kernels.operators import MulCounter, RealOperator, WORK_DTYPE, complex_apply
from src.tensor.ctensor import CTensor

IntOrTuple = Union[int, Sequence[int]]


def as_tuple(value: IntOrTuple, n: int, name: str) -> Tuple[int, ...]:
    if isinstance(value, (int, np.integer)):
        return (int(value),) * n
    value = tuple(int(v) for v in value)
    if len(value) != n:
        raise ShapeError(f"{name} needs {n} entries, got {len(value)}")
    return value


@dataclass(frozen=True)
class ConvSpec:
    stride: Tuple[int, ...]
    padding: Tuple[int, ...]
    dilation: Tuple[int, ...]
    transposed: bool = False
    output_padding: Tuple[int, ...] = ()

    @classmethod
    def create(
        cls,
        n: int,
        stride: IntOrTuple = 1,
        padding: IntOrTuple = 0,
        dilation: IntOrTuple = 1,
        transposed: bool = False,
        output_padding: IntOrTuple = 0,
    ) -> "ConvSpec":
        if n not in (1, 2, 3):
            raise ShapeError(f"Only 1-, 2- and 3-D convolutions exist, got n={n}")
        spec = cls(
            stride=as_tuple(stride, n, "stride"),
            padding=as_tuple(padding, n, "padding"),
            dilation=as_tuple(dilation, n, "dilation"),
            transposed=transposed,
            output_padding=as_tuple(output_padding, n, "output_padding"),
        )
        if any(s < 1 for s in spec.stride):
            raise ShapeError(f"stride must be positive, got {spec.stride}")
        if any(d < 1 for d in spec.dilation):
            raise ShapeError(f"dilation must be positive, got {spec.dilation}")
        if any(p < 0 for p in spec.padding + spec.output_padding):
            raise ShapeError("padding and output_padding must be non-negative")
        if not transposed and any(spec.output_padding):
            raise ShapeError("output_padding only applies to transposed convolution")
        return spec

    @property
    def n(self) -> int:
        return len(self.stride)

    def output_shape(
        self,
        in_shape: Sequence[int],
        kernel: Sequence[int],
        transposed: Optional[bool] = None,
    ) -> Tuple[int, ...]:
        if transposed is None:
            transposed = self.transposed
        out = []
        for i, (extent, k) in enumerate(zip(in_shape, kernel)):
            s, p, d = self.stride[i], self.padding[i], self.dilation[i]
            if transposed:
                size = (extent - 1) * s - 2 * p + d * (k - 1) + 1 + self.output_padding[i]
            else:
                size = (extent + 2 * p - d * (k - 1) - 1) // s + 1
            if size < 1:
                raise ShapeError(
                    f"invalid spec: axis {i} with input {extent}, kernel {k} "
                    f"gives output extent {size}"
                )
            out.append(size)
        return tuple(out)


def _windows(x: np.ndarray, kernel: Sequence[int], spec: ConvSpec) -> np.ndarray:
    """View of shape (B, C, *out, *kernel) holding every receptive field."""
    n = spec.n
    padded = np.pad(x, [(0, 0), (0, 0)] + [(p, p) for p in spec.padding])
    span = [d * (k - 1) + 1 for d, k in zip(spec.dilation, kernel)]
    win = sliding_window_view(padded, span, axis=tuple(range(2, 2 + n)))
    index = (
        (slice(None), slice(None))
        + tuple(slice(None, None, s) for s in spec.stride)
        + tuple(slice(None, None, d) for d in spec.dilation)
    )
    return win[index]


def conv_nd(x: np.ndarray, w: np.ndarray, spec: ConvSpec) -> np.ndarray:
    """Cross-correlation of x (B, Cin, *S) with w (Cout, Cin, *k)."""
    n = spec.n
    if x.ndim != n + 2 or w.ndim != n + 2:
        raise ShapeError(
            f"{n}-D convolution needs (B, C, *spatial) input and (O, I, *k) kernel, "
            f"got {x.shape} and {w.shape}"
        )
    if x.shape[1] != w.shape[1]:
        raise ShapeError(f"channel mismatch: input has {x.shape[1]}, kernel expects {w.shape[1]}")
    spec.output_shape(x.shape[2:], w.shape[2:], transposed=False)
    win = _windows(x, w.shape[2:], spec)
    axes_win = [1] + list(range(2 + n, 2 + 2 * n))
    axes_w = list(range(1, 2 + n))
    out = np.tensordot(win, w, axes=(axes_win, axes_w))
    return np.moveaxis(out, -1, 1)


def conv_transpose_nd(
    x: np.ndarray,
    w: np.ndarray,
    spec: ConvSpec,
    out_size: Optional[Sequence[int]] = None,
) -> np.ndarray:
    """Adjoint of ``conv_nd``: x (B, Cin, *S), w (Cin, Cout, *k) -> (B, Cout, *O)."""
    n = spec.n
    if x.ndim != n + 2 or w.ndim != n + 2:
        raise ShapeError(
            f"{n}-D transposed convolution needs (B, C, *spatial) input and "
            f"(I, O, *k) kernel, got {x.shape} and {w.shape}"
        )
    if x.shape[1] != w.shape[0]:
        raise ShapeError(f"channel mismatch: input has {x.shape[1]}, kernel expects {w.shape[0]}")
    in_size = x.shape[2:]
    kernel = w.shape[2:]
    full = [
        (in_size[i] - 1) * spec.stride[i] + spec.dilation[i] * (kernel[i] - 1) + 1
        for i in range(n)
    ]
    if out_size is None:
        out_size = [
            full[i] - 2 * spec.padding[i] + (spec.output_padding[i] if spec.output_padding else 0)
            for i in range(n)
        ]
    if any(o < 1 for o in out_size):
        raise ShapeError(f"invalid spec: transposed output extent {tuple(out_size)}")
    buffer = [max(full[i], spec.padding[i] + out_size[i]) for i in range(n)]

    y = np.zeros((x.shape[0], w.shape[1], *buffer), dtype=np.result_type(x, w))
    for kidx in np.ndindex(*kernel):
        contrib = np.tensordot(x, w[(slice(None), slice(None)) + kidx], axes=([1], [0]))
        contrib = np.moveaxis(contrib, -1, 1)
        target = tuple(
            slice(
                kidx[i] * spec.dilation[i],
                kidx[i] * spec.dilation[i] + (in_size[i] - 1) * spec.stride[i] + 1,
                spec.stride[i],
            )
            for i in range(n)
        )
        y[(slice(None), slice(None)) + target] += contrib
    crop = tuple(slice(spec.padding[i], spec.padding[i] + out_size[i]) for i in range(n))
    return y[(slice(None), slice(None)) + crop]


def conv_weight_grad(
    inputs: np.ndarray, out_grad: np.ndarray, spec: ConvSpec, kernel: Sequence[int]
) -> np.ndarray:
    """sum over batch and positions of out_grad[b,o,pos] * window[b,c,pos,k]."""
    n = spec.n
    win = _windows(inputs, kernel, spec)
    win = win[(slice(None), slice(None)) + tuple(slice(0, o) for o in out_grad.shape[2:])]
    axes = [0] + list(range(2, 2 + n))
    return np.tensordot(out_grad, win, axes=(axes, axes))


class ConvOperator(RealOperator):
    def __init__(self, weight: np.ndarray, spec: ConvSpec) -> None:
        self.weight = np.asarray(weight, dtype=WORK_DTYPE)
        self.spec = spec

    def apply(self, x: np.ndarray) -> np.ndarray:
        return conv_nd(x, self.weight, self.spec)

    def plus(self, other: RealOperator) -> RealOperator:
        self._check_same_kind(other)
        return ConvOperator(self.weight + other.weight, self.spec)

    def multiplications(self, x_shape: Tuple[int, ...]) -> int:
        out = self.spec.output_shape(x_shape[2:], self.weight.shape[2:], transposed=False)
        per_output = int(np.prod(self.weight.shape[1:], dtype=np.int64))
        positions = int(np.prod(out, dtype=np.int64))
        return x_shape[0] * self.weight.shape[0] * positions * per_output


class ConvTransposeOperator(RealOperator):
    def __init__(
        self,
        weight: np.ndarray,
        spec: ConvSpec,
        out_size: Optional[Sequence[int]] = None,
    ) -> None:
        self.weight = np.asarray(weight, dtype=WORK_DTYPE)
        self.spec = spec
        self.out_size = out_size

    def apply(self, x: np.ndarray) -> np.ndarray:
        return conv_transpose_nd(x, self.weight, self.spec, self.out_size)

    def plus(self, other: RealOperator) -> RealOperator:
        self._check_same_kind(other)
        return ConvTransposeOperator(self.weight + other.weight, self.spec, self.out_size)

    def multiplications(self, x_shape: Tuple[int, ...]) -> int:
        positions = int(np.prod(x_shape[2:], dtype=np.int64))
        return x_shape[0] * positions * int(np.prod(self.weight.shape, dtype=np.int64))


def convnd(
    kind: str,
    n: int,
    weights: CTensor,
    bias: Optional[CTensor],
    z: CTensor,
    spec: ConvSpec,
    path: str = "gauss",
    counter: Optional[MulCounter] = None,
) -> CTensor:
    """Complex convolution ("forward") or transposed convolution ("transposed")."""
    if kind not in ("forward", "transposed"):
        raise ValueError(f"Unknown convolution kind {kind!r}")
    if spec.n != n or weights.ndim != n + 2 or z.ndim != n + 2:
        raise ShapeError(
            f"{n}-D convolution got spec for {spec.n}-D, kernel {weights.shape}, input {z.shape}"
        )
    if kind == "forward":
        l_re = ConvOperator(weights.re, spec)
        l_im = ConvOperator(weights.im, spec)
        out_channels = weights.shape[0]
    else:
        l_re = ConvTransposeOperator(weights.re, spec)
        l_im = ConvTransposeOperator(weights.im, spec)
        out_channels = weights.shape[1]
    out = complex_apply(l_re, l_im, z, path, counter)
    if bias is None:
        return out
    if bias.shape != (out_channels,):
        raise ShapeError(f"bias shape {bias.shape} != ({out_channels},)")
    return out + bias.reshape((1, out_channels) + (1,) * n)
