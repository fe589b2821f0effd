"""Parametric complex layers: linear, N-D (transposed) convolution, pooling, dropout."""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from src.autodiff import functional as F
from src.autodiff.variable import Variable
from src.errors import CVNNError, ShapeError
from src.kernels.conv import ConvSpec, IntOrTuple, as_tuple
from src.nn.module import Module, Parameter, init_complex_weight, init_zero

DROPOUT_MASK_MODES = ("independent", "shared")


@dataclass
class CVLinearParams:
    weight: Parameter  # (out_features, in_features)
    bias: Optional[Parameter] = None


@dataclass
class CVConvParams:
    weight: Parameter  # (out_ch, in_ch, *k); (in_ch, out_ch, *k) when transposed
    bias: Optional[Parameter]
    spec: ConvSpec


def cv_linear_forward(params: CVLinearParams, z, path: Optional[str] = None) -> Variable:
    return F.linear(z, params.weight, params.bias, path)


def cv_conv_forward(params: CVConvParams, z, path: Optional[str] = None) -> Variable:
    return F.conv(z, params.weight, params.bias, params.spec, path)


def cv_conv_transpose_forward(params: CVConvParams, z, path: Optional[str] = None) -> Variable:
    return F.conv_transpose(z, params.weight, params.bias, params.spec, path)


def adaptive_bins(in_size: int, out_size: int) -> np.ndarray:
    """(out, in) averaging matrix; bin i spans [floor(i*in/out), ceil((i+1)*in/out))."""
    if not 1 <= out_size <= in_size:
        raise ShapeError(f"adaptive pool output {out_size} must lie in [1, {in_size}]")
    matrix = np.zeros((out_size, in_size))
    for i in range(out_size):
        start = (i * in_size) // out_size
        stop = -((-(i + 1) * in_size) // out_size)
        matrix[i, start:stop] = 1.0 / (stop - start)
    return matrix


def cv_adaptive_avg_pool(n: int, z, out_size: Union[int, Sequence[int]]) -> Variable:
    """Pool the trailing n axes; real and imaginary planes are averaged alike."""
    z = F.as_variable(z)
    if z.ndim < n:
        raise ShapeError(f"{n}-D pooling needs at least {n} axes, got {z.shape}")
    out_size = as_tuple(out_size, n, "out_size")
    for i, target in enumerate(out_size):
        axis = z.ndim - n + i
        if target != z.shape[axis]:
            z = F.axis_matmul(z, adaptive_bins(z.shape[axis], target), axis)
    return z


def cv_dropout(
    z,
    p: float,
    training: bool,
    mask_mode: str = "independent",
    rng: Optional[np.random.Generator] = None,
) -> Variable:
    """Inverted dropout; independent mode masks the two planes separately."""
    if not 0.0 <= p < 1.0:
        raise CVNNError(f"dropout probability must lie in [0, 1), got {p}")
    if mask_mode not in DROPOUT_MASK_MODES:
        raise CVNNError(f"Unknown dropout mask mode {mask_mode!r}")
    z = F.as_variable(z)
    if not training or p == 0.0:
        return z
    rng = rng if rng is not None else np.random.default_rng()
    scale = 1.0 / (1.0 - p)
    if mask_mode == "shared":
        keep = (rng.random(z.shape) >= p) * scale
        return F.mul(z, keep)
    keep_re = (rng.random(z.shape) >= p) * scale
    keep_im = (rng.random(z.shape) >= p) * scale
    return F.make_complex(F.mul(F.real(z), keep_re), F.mul(F.imag(z), keep_im))


# Modules

def _rng(rng: Optional[np.random.Generator]) -> np.random.Generator:
    return rng if rng is not None else np.random.default_rng()


class CVLinear(Module):
    def __init__(
        self,
        in_features: int,
        out_features: int,
        bias: bool = True,
        path: Optional[str] = None,
        rng: Optional[np.random.Generator] = None,
        dtype: Optional[str] = None,
    ) -> None:
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.path = path
        self.weight = init_complex_weight(_rng(rng), (out_features, in_features), in_features, dtype)
        self.bias = init_zero((out_features,), dtype) if bias else None

    @property
    def params(self) -> CVLinearParams:
        return CVLinearParams(self.weight, self.bias)

    def forward(self, z) -> Variable:
        return cv_linear_forward(self.params, z, self.path)

    def extra_repr(self) -> str:
        return f"{self.in_features}, {self.out_features}, bias={self.bias is not None}"


class _CVConvNd(Module):
    n = 0
    transposed = False

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: IntOrTuple,
        stride: IntOrTuple = 1,
        padding: IntOrTuple = 0,
        dilation: IntOrTuple = 1,
        output_padding: IntOrTuple = 0,
        bias: bool = True,
        path: Optional[str] = None,
        rng: Optional[np.random.Generator] = None,
        dtype: Optional[str] = None,
    ) -> None:
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = as_tuple(kernel_size, self.n, "kernel_size")
        self.spec = ConvSpec.create(
            self.n, stride, padding, dilation, self.transposed, output_padding
        )
        self.path = path
        channels = (in_channels, out_channels) if self.transposed else (out_channels, in_channels)
        fan_in = in_channels * int(np.prod(self.kernel_size))
        self.weight = init_complex_weight(
            _rng(rng), channels + self.kernel_size, fan_in, dtype
        )
        self.bias = init_zero((out_channels,), dtype) if bias else None

    @property
    def params(self) -> CVConvParams:
        return CVConvParams(self.weight, self.bias, self.spec)

    def output_shape(self, spatial: Sequence[int]) -> Tuple[int, ...]:
        return self.spec.output_shape(spatial, self.kernel_size)

    def forward(self, z) -> Variable:
        if self.transposed:
            return cv_conv_transpose_forward(self.params, z, self.path)
        return cv_conv_forward(self.params, z, self.path)

    def extra_repr(self) -> str:
        return (
            f"{self.in_channels}, {self.out_channels}, kernel_size={self.kernel_size}, "
            f"stride={self.spec.stride}, padding={self.spec.padding}"
        )


class CVConv1d(_CVConvNd):
    n = 1


class CVConv2d(_CVConvNd):
    n = 2


class CVConv3d(_CVConvNd):
    n = 3


class CVConvTranspose1d(_CVConvNd):
    n = 1
    transposed = True


class CVConvTranspose2d(_CVConvNd):
    n = 2
    transposed = True


class CVConvTranspose3d(_CVConvNd):
    n = 3
    transposed = True


class _CVAdaptiveAvgPoolNd(Module):
    n = 0

    def __init__(self, output_size: IntOrTuple) -> None:
        super().__init__()
        self.output_size = as_tuple(output_size, self.n, "output_size")

    def forward(self, z) -> Variable:
        return cv_adaptive_avg_pool(self.n, z, self.output_size)

    def extra_repr(self) -> str:
        return f"output_size={self.output_size}"


class CVAdaptiveAvgPool1d(_CVAdaptiveAvgPoolNd):
    n = 1


class CVAdaptiveAvgPool2d(_CVAdaptiveAvgPoolNd):
    n = 2


class CVAdaptiveAvgPool3d(_CVAdaptiveAvgPoolNd):
    n = 3


class CVDropout(Module):
    def __init__(
        self,
        p: float = 0.5,
        mask_mode: str = "independent",
        rng: Optional[np.random.Generator] = None,
    ) -> None:
        super().__init__()
        if not 0.0 <= p < 1.0:
            raise CVNNError(f"dropout probability must lie in [0, 1), got {p}")
        self.p = p
        self.mask_mode = mask_mode
        self.rng = _rng(rng)

    def forward(self, z) -> Variable:
        return cv_dropout(z, self.p, self.training, self.mask_mode, self.rng)

    def extra_repr(self) -> str:
        return f"p={self.p}, mask_mode={self.mask_mode}"


class Flatten(Module):
    """Collapse every axis after the batch axis."""

    def forward(self, z) -> Variable:
        z = F.as_variable(z)
        return F.reshape(z, (z.shape[0], -1))
