"""Complex attention: scaled dot-product, multi-head, channel attention (ECA, MCA)."""
from typing import Callable, Dict, Optional, Union

import numpy as np

from src.autodiff import functional as F
from src.autodiff.variable import Variable
from src.errors import ShapeError
from src.kernels.conv import ConvSpec
from src.models.specs import ActivationSpec, AttentionConfig, ECAConfig, MCAConfig
from src.nn.activations import build_activation
from src.nn.layers import CVConvParams, CVLinear, CVLinearParams, cv_adaptive_avg_pool, cv_conv_forward
from src.nn.layers import CVConv1d, CVConv2d, CVConv3d
from src.nn.masks import get_mask
from src.nn.module import Module, init_complex_weight

Activation = Optional[Callable[[Variable], Variable]]


def attention_scores(q, k, cfg: AttentionConfig, path: Optional[str] = None) -> Variable:
    """S(Q K^T / t) along the key axis."""
    q, k = F.as_variable(q), F.as_variable(k)
    if q.ndim < 2 or k.ndim < 2 or q.shape[-1] != k.shape[-1]:
        raise ShapeError(f"query {q.shape} and key {k.shape} dimensions differ")
    t = cfg.t if cfg.t is not None else float(np.sqrt(q.shape[-1]))
    keys = F.swap_last(k)
    if cfg.transpose_mode == "hermitian":
        keys = F.conj(keys)
    scores = F.mul(F.matmul(q, keys, path), 1.0 / t)
    return get_mask(cfg.mask_fn)(scores, -1)


def cv_sdpa(q, k, v, cfg: Optional[AttentionConfig] = None, path: Optional[str] = None) -> Variable:
    """Attention(Q, K, V) = S(Q K^T / t) V."""
    q, k, v = F.as_variable(q), F.as_variable(k), F.as_variable(v)
    if cfg is None:
        cfg = AttentionConfig(d_model=q.shape[-1])
    if v.ndim < 2 or k.shape[-2] != v.shape[-2]:
        raise ShapeError(f"key {k.shape} and value {v.shape} sequence lengths differ")
    return F.matmul(attention_scores(q, k, cfg, path), v, path)


def _split_heads(z: Variable, heads: int) -> Variable:
    b, s, d = z.shape
    return F.transpose(F.reshape(z, (b, s, heads, d // heads)), (0, 2, 1, 3))


def _merge_heads(z: Variable) -> Variable:
    b, h, s, dh = z.shape
    return F.reshape(F.transpose(z, (0, 2, 1, 3)), (b, s, h * dh))


def cv_multihead(
    q,
    k,
    v,
    cfg: AttentionConfig,
    projections: Dict[str, CVLinearParams],
    path: Optional[str] = None,
) -> Variable:
    """Project, attend per head with t = sqrt(d_model / heads), merge, project out."""
    q, k, v = F.as_variable(q), F.as_variable(k), F.as_variable(v)
    for name, z in (("query", q), ("key", k), ("value", v)):
        if z.ndim != 3 or z.shape[-1] != cfg.d_model:
            raise ShapeError(f"{name} must be (batch, seq, {cfg.d_model}), got {z.shape}")
    if cfg.d_model % cfg.heads:
        raise ShapeError(f"d_model {cfg.d_model} is not divisible by heads {cfg.heads}")
    d_head = cfg.d_model // cfg.heads
    head_cfg = cfg.model_copy(
        update={"d_model": d_head, "heads": 1, "t": cfg.t or float(np.sqrt(d_head))}
    )
    heads = [
        _split_heads(F.linear(z, projections[key].weight, projections[key].bias, path), cfg.heads)
        for key, z in (("q", q), ("k", k), ("v", v))
    ]
    attended = cv_sdpa(*heads, head_cfg, path)
    out = projections["out"]
    return F.linear(_merge_heads(attended), out.weight, out.bias, path)


def _channel_mask(mask_fn: str, gate: Variable) -> Variable:
    """Masking function applied across the channel axis (axis 1)."""
    moved = F.transpose(gate, tuple(range(2, gate.ndim)) + (0, 1))
    masked = get_mask(mask_fn)(moved, -1)
    order = np.argsort(tuple(range(2, gate.ndim)) + (0, 1))
    return F.transpose(masked, tuple(int(i) for i in order))


def cv_eca(z, cfg: ECAConfig, conv_weight, path: Optional[str] = None) -> Variable:
    """M(conv1d(pool(z))) * z with the conv running along the channel axis."""
    z = F.as_variable(z)
    n = z.ndim - 2
    if n not in (1, 2, 3):
        raise ShapeError(f"ECA needs (batch, channels, 1-3 spatial axes), got {z.shape}")
    k = cfg.kernel_size
    if k % 2 == 0:
        raise ShapeError(f"ECA kernel size must be odd, got {k}")
    if tuple(conv_weight.shape) != (1, 1, k):
        raise ShapeError(f"ECA kernel must be (1, 1, {k}), got {conv_weight.shape}")
    batch, channels = z.shape[:2]
    pooled = cv_adaptive_avg_pool(n, z, (1,) * n)
    sequence = F.reshape(pooled, (batch, 1, channels))
    spec = ConvSpec.create(1, padding=(k - 1) // 2)
    gate = F.conv(sequence, conv_weight, None, spec, path)
    gate = F.reshape(gate, (batch, channels) + (1,) * n)
    return F.mul(_channel_mask(cfg.mask_fn, gate), z)


def cv_mca(
    z,
    cfg: MCAConfig,
    down: CVConvParams,
    up: CVConvParams,
    activation: Activation = None,
    path: Optional[str] = None,
) -> Variable:
    """M(up(A(down(z)))) * z with kernel-1 convolutions; A defaults to identity."""
    z = F.as_variable(z)
    channels = z.shape[1]
    r = cfg.reduction
    if channels % r:
        raise ShapeError(f"{channels} channels are not divisible by reduction {r}")
    for name, params, expected in (("down", down, channels // r), ("up", up, channels)):
        if any(k != 1 for k in params.weight.shape[2:]):
            raise ShapeError(f"{name} convolution must have kernel size 1")
        if params.weight.shape[0] != expected:
            raise ShapeError(f"{name} convolution must output {expected} channels")
    hidden = cv_conv_forward(down, z, path)
    if activation is not None:
        hidden = activation(hidden)
    gate = cv_conv_forward(up, hidden, path)
    return F.mul(_channel_mask(cfg.mask_fn, gate), z)


# Modules

class CVSDPA(Module):
    def __init__(
        self,
        t: Optional[float] = None,
        mask_fn: str = "MagSoftMax",
        transpose_mode: str = "plain",
        path: Optional[str] = None,
    ) -> None:
        super().__init__()
        self.t = t
        self.mask_fn = mask_fn
        self.transpose_mode = transpose_mode
        self.path = path

    def forward(self, q, k=None, v=None) -> Variable:
        # self-attention when only one input is given
        k = q if k is None else k
        v = k if v is None else v
        cfg = AttentionConfig(
            d_model=q.shape[-1], t=self.t, mask_fn=self.mask_fn,
            transpose_mode=self.transpose_mode,
        )
        return cv_sdpa(q, k, v, cfg, self.path)


class CVMultiHead(Module):
    def __init__(
        self,
        d_model: int,
        heads: int = 1,
        t: Optional[float] = None,
        mask_fn: str = "MagSoftMax",
        transpose_mode: str = "plain",
        bias: bool = True,
        path: Optional[str] = None,
        rng: Optional[np.random.Generator] = None,
        dtype: Optional[str] = None,
    ) -> None:
        super().__init__()
        self.cfg = AttentionConfig(
            d_model=d_model, heads=heads, t=t, mask_fn=mask_fn, transpose_mode=transpose_mode
        )
        self.path = path
        rng = rng if rng is not None else np.random.default_rng()
        self.q_proj = CVLinear(d_model, d_model, bias, path, rng, dtype)
        self.k_proj = CVLinear(d_model, d_model, bias, path, rng, dtype)
        self.v_proj = CVLinear(d_model, d_model, bias, path, rng, dtype)
        self.out_proj = CVLinear(d_model, d_model, bias, path, rng, dtype)

    @property
    def projections(self) -> Dict[str, CVLinearParams]:
        return {
            "q": self.q_proj.params,
            "k": self.k_proj.params,
            "v": self.v_proj.params,
            "out": self.out_proj.params,
        }

    def forward(self, q, k=None, v=None) -> Variable:
        k = q if k is None else k
        v = k if v is None else v
        return cv_multihead(q, k, v, self.cfg, self.projections, self.path)

    def extra_repr(self) -> str:
        return f"d_model={self.cfg.d_model}, heads={self.cfg.heads}"


class CVECA(Module):
    def __init__(
        self,
        kernel_size: int = 3,
        mask_fn: str = "ComplexRatioMask",
        path: Optional[str] = None,
        rng: Optional[np.random.Generator] = None,
        dtype: Optional[str] = None,
    ) -> None:
        super().__init__()
        self.cfg = ECAConfig(kernel_size=kernel_size, mask_fn=mask_fn)
        self.path = path
        rng = rng if rng is not None else np.random.default_rng()
        self.weight = init_complex_weight(rng, (1, 1, kernel_size), kernel_size, dtype)

    def forward(self, z) -> Variable:
        return cv_eca(z, self.cfg, self.weight, self.path)

    def extra_repr(self) -> str:
        return f"kernel_size={self.cfg.kernel_size}, mask_fn={self.cfg.mask_fn}"


_KERNEL_1_CONVS = {1: CVConv1d, 2: CVConv2d, 3: CVConv3d}


class CVMCA(Module):
    def __init__(
        self,
        channels: int,
        n: int = 1,
        reduction: int = 2,
        activation: Union[ActivationSpec, str, None] = "CReLU",
        mask_fn: str = "ComplexRatioMask",
        path: Optional[str] = None,
        rng: Optional[np.random.Generator] = None,
        dtype: Optional[str] = None,
    ) -> None:
        super().__init__()
        if n not in _KERNEL_1_CONVS:
            raise ShapeError(f"MCA supports 1-3 spatial axes, got n={n}")
        if channels % reduction:
            raise ShapeError(f"{channels} channels are not divisible by reduction {reduction}")
        if activation is None or isinstance(activation, ActivationSpec):
            spec = activation
        else:
            spec = ActivationSpec(name=activation)
        self.cfg = MCAConfig(reduction=reduction, activation=spec, mask_fn=mask_fn)
        self.path = path
        rng = rng if rng is not None else np.random.default_rng()
        conv = _KERNEL_1_CONVS[n]
        self.down = conv(channels, channels // reduction, 1, path=path, rng=rng, dtype=dtype)
        self.up = conv(channels // reduction, channels, 1, path=path, rng=rng, dtype=dtype)
        self.activation = build_activation(spec, dtype) if spec is not None else None

    def forward(self, z) -> Variable:
        return cv_mca(z, self.cfg, self.down.params, self.up.params, self.activation, self.path)

    def extra_repr(self) -> str:
        return f"reduction={self.cfg.reduction}, mask_fn={self.cfg.mask_fn}"
