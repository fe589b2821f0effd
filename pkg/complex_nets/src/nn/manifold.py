"""Weighted-Frechet-mean convolution on the Euclidean reduction.

The output at each position is a convex combination of the inputs in its
receptive field, so the layer commutes with any complex scalar (phase
shift and amplitude scaling) and never exceeds the largest input magnitude.
"""
from typing import Optional

import numpy as np

from src import config
from src.autodiff import functional as F
from src.autodiff.variable import Variable
from src.errors import ConfigError, ShapeError
from src.kernels.conv import ConvSpec, IntOrTuple, as_tuple
from src.nn.module import Module, init_real

CONVEX_SCOPES = ("per_output", "per_kernel")
RAW_INIT_STD = 0.1


def convex_reparam(raw, scope: str = "per_output") -> Variable:
    """Softmax of raw weights (out, in, *k) into non-negative weights summing to 1.

    ``per_output`` normalizes over (in, *k) for each output channel;
    ``per_kernel`` normalizes each (out, in) kernel and divides by in_ch so
    every output channel still sums to 1.
    """
    if scope not in CONVEX_SCOPES:
        raise ConfigError(f"Unknown convexity scope {scope!r}; expected {CONVEX_SCOPES}")
    raw = F.as_variable(raw)
    if raw.ndim < 2:
        raise ShapeError(f"wFM weights must be (out, in, *k), got {raw.shape}")
    out_ch, in_ch = raw.shape[:2]
    if scope == "per_output":
        flat = F.softmax(F.reshape(raw, (out_ch, -1)), -1)
        return F.reshape(flat, raw.shape)
    flat = F.softmax(F.reshape(raw, (out_ch, in_ch, -1)), -1)
    return F.reshape(F.mul(flat, 1.0 / in_ch), raw.shape)


def wfm_conv(
    n: int,
    raw,
    z,
    spec: ConvSpec,
    bias=None,
    scope: str = "per_output",
) -> Variable:
    """Cross-correlation of z with convex_reparam(raw); bias is not allowed."""
    if bias is not None:
        raise ConfigError("wFM convolution takes no bias")
    if n not in (1, 2) or spec.n != n:
        raise ShapeError(f"wFM convolution exists in 1-D and 2-D, got n={n}, spec for {spec.n}-D")
    return F.real_weight_conv(z, convex_reparam(raw, scope), spec)


class _WFMConvNd(Module):
    n = 0

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: IntOrTuple,
        stride: IntOrTuple = 1,
        padding: IntOrTuple = 0,
        dilation: IntOrTuple = 1,
        scope: str = "per_output",
        rng: Optional[np.random.Generator] = None,
        dtype: Optional[str] = None,
    ) -> None:
        super().__init__()
        if scope not in CONVEX_SCOPES:
            raise ConfigError(f"Unknown convexity scope {scope!r}; expected {CONVEX_SCOPES}")
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = as_tuple(kernel_size, self.n, "kernel_size")
        self.spec = ConvSpec.create(self.n, stride, padding, dilation)
        self.scope = scope
        rng = rng if rng is not None else np.random.default_rng()
        shape = (out_channels, in_channels) + self.kernel_size
        self.raw = init_real(rng.normal(0.0, RAW_INIT_STD, size=shape), dtype or config.DEFAULT_DTYPE)

    @property
    def weights(self) -> Variable:
        return convex_reparam(self.raw, self.scope)

    def forward(self, z) -> Variable:
        return wfm_conv(self.n, self.raw, z, self.spec, scope=self.scope)

    def extra_repr(self) -> str:
        return (
            f"{self.in_channels}, {self.out_channels}, kernel_size={self.kernel_size}, "
            f"scope={self.scope}"
        )


class wFMConv1d(_WFMConvNd):  # noqa: N801
    n = 1


class wFMConv2d(_WFMConvNd):  # noqa: N801
    n = 2
