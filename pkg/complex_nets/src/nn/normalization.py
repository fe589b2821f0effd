"""Complex batch and layer normalization by 2x2 covariance whitening.

Each feature's (x, y) pair is centred, multiplied by the inverse square
root of its regularized 2x2 covariance, then passed through a symmetric
real affine map Gamma plus a complex shift beta.
"""
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from src import config
from src.autodiff import functional as F
from src.autodiff.variable import Variable
from src.errors import CVNNError, ShapeError
from src.nn.module import Module, Parameter, init_real, init_zero
from src.tensor.ctensor import CTensor, zeros

DEFAULT_EPS = 1e-5
DEFAULT_MOMENTUM = 0.1
GAMMA_INIT = 1.0 / np.sqrt(2.0)


@dataclass
class WhitenStats:
    mu: np.ndarray   # complex mean per feature
    vrr: np.ndarray
    vii: np.ndarray
    vri: np.ndarray
    eps: float = DEFAULT_EPS


@dataclass
class AffineParams:
    gamma_rr: Variable
    gamma_ii: Variable
    gamma_ri: Variable
    beta: Variable


@dataclass
class RunningStats:
    stats: WhitenStats
    momentum: float = DEFAULT_MOMENTUM
    num_batches_tracked: int = 0

    @classmethod
    def initial(cls, features: int, eps: float = DEFAULT_EPS, momentum: float = DEFAULT_MOMENTUM):
        """mu = 0 and V = I/2, matching the default affine scale."""
        return cls(
            WhitenStats(
                mu=np.zeros(features, dtype=np.complex128),
                vrr=np.full(features, 0.5),
                vii=np.full(features, 0.5),
                vri=np.zeros(features),
                eps=eps,
            ),
            momentum=momentum,
        )

    def update(self, batch: WhitenStats) -> None:
        m = self.momentum
        s = self.stats
        s.mu = (1 - m) * s.mu + m * batch.mu
        s.vrr = (1 - m) * s.vrr + m * batch.vrr
        s.vii = (1 - m) * s.vii + m * batch.vii
        s.vri = (1 - m) * s.vri + m * batch.vri
        self.num_batches_tracked += 1


def inv_sqrt_2x2(vrr, vii, vri, eps: float = 0.0) -> Tuple[Variable, Variable, Variable]:
    """Symmetric W with W V W = I for V = [[vrr + eps, vri], [vri, vii + eps]]."""
    a = F.add(vrr, eps)
    b = F.add(vii, eps)
    c = F.as_variable(vri)
    det = F.sub(F.mul(a, b), F.mul(c, c))
    if (a.numpy().real <= 0).any() or (det.numpy().real <= 0).any():
        raise CVNNError("covariance is not positive definite")
    s = F.rfn("sqrt", det)
    t = F.rfn("sqrt", F.add(F.add(a, b), F.mul(s, 2.0)))
    inv_st = F.div(1.0, F.mul(s, t))
    return F.mul(F.add(b, s), inv_st), F.mul(F.add(a, s), inv_st), F.neg(F.mul(c, inv_st))


def _whiten(z: Variable, axes: Tuple[int, ...], eps: float, stats: Optional[WhitenStats] = None):
    """Whitened real planes plus the batch statistics (None when ``stats`` is given)."""
    x, y = F.real(z), F.imag(z)
    if stats is None:
        mu_x = F.mean(x, axes, keepdims=True)
        mu_y = F.mean(y, axes, keepdims=True)
        xc, yc = F.sub(x, mu_x), F.sub(y, mu_y)
        vrr = F.mean(F.mul(xc, xc), axes, keepdims=True)
        vii = F.mean(F.mul(yc, yc), axes, keepdims=True)
        vri = F.mean(F.mul(xc, yc), axes, keepdims=True)
        batch = WhitenStats(
            mu=(mu_x.numpy().real + 1j * mu_y.numpy().real),
            vrr=vrr.numpy().real,
            vii=vii.numpy().real,
            vri=vri.numpy().real,
            eps=eps,
        )
    else:
        xc = F.sub(x, stats.mu.real)
        yc = F.sub(y, stats.mu.imag)
        vrr, vii, vri = stats.vrr, stats.vii, stats.vri
        batch = None
    wrr, wii, wri = inv_sqrt_2x2(vrr, vii, vri, eps)
    x_white = F.add(F.mul(wrr, xc), F.mul(wri, yc))
    y_white = F.add(F.mul(wri, xc), F.mul(wii, yc))
    return x_white, y_white, batch


def _affine(x_white: Variable, y_white: Variable, affine: Optional[AffineParams], view) -> Variable:
    if affine is None:
        return F.make_complex(x_white, y_white)
    grr, gii, gri = (F.real(view(g)) for g in (affine.gamma_rr, affine.gamma_ii, affine.gamma_ri))
    out_re = F.add(F.mul(grr, x_white), F.mul(gri, y_white))
    out_im = F.add(F.mul(gri, x_white), F.mul(gii, y_white))
    return F.add(F.make_complex(out_re, out_im), view(affine.beta))


def _feature_view(ndim: int):
    def view(v: Variable) -> Variable:
        return F.reshape(v, (1, -1) + (1,) * (ndim - 2))
    return view


def cv_batchnorm(
    z,
    state: RunningStats,
    affine: Optional[AffineParams],
    training: bool,
) -> Variable:
    """Whitening over batch and spatial axes, per channel (axis 1)."""
    z = F.as_variable(z)
    if z.ndim < 2:
        raise ShapeError(f"batch norm needs (batch, features, ...) input, got {z.shape}")
    axes = (0,) + tuple(range(2, z.ndim))
    view = _feature_view(z.ndim)
    eps = state.stats.eps
    if training:
        count = int(np.prod([z.shape[ax] for ax in axes]))
        if count < 2:
            raise ShapeError("train-mode batch norm needs at least 2 values per feature")
        x_white, y_white, batch = _whiten(z, axes, eps)
        state.update(
            WhitenStats(
                mu=batch.mu.reshape(-1),
                vrr=batch.vrr.reshape(-1),
                vii=batch.vii.reshape(-1),
                vri=batch.vri.reshape(-1),
                eps=eps,
            )
        )
    else:
        shape = (1, -1) + (1,) * (z.ndim - 2)
        s = state.stats
        frozen = WhitenStats(
            s.mu.reshape(shape), s.vrr.reshape(shape), s.vii.reshape(shape),
            s.vri.reshape(shape), eps,
        )
        x_white, y_white, _ = _whiten(z, axes, eps, frozen)
    return _affine(x_white, y_white, affine, view)


def cv_layernorm(
    z,
    normalized_axes: Sequence[int],
    affine: Optional[AffineParams] = None,
    eps: float = DEFAULT_EPS,
) -> Variable:
    """Per-sample whitening over ``normalized_axes``; affine params span those axes."""
    z = F.as_variable(z)
    axes = tuple(sorted(ax % z.ndim for ax in normalized_axes))
    count = int(np.prod([z.shape[ax] for ax in axes]))
    if count < 2:
        raise ShapeError("layer norm needs at least 2 normalized values per sample")
    x_white, y_white, _ = _whiten(z, axes, eps)
    trailing = tuple(z.shape[ax] for ax in axes)

    def view(v: Variable) -> Variable:
        if v.shape != trailing:
            raise ShapeError(f"affine shape {v.shape} != normalized shape {trailing}")
        return v

    return _affine(x_white, y_white, affine, view)


def init_affine(shape: Tuple[int, ...], dtype: Optional[str] = None) -> Tuple[Parameter, ...]:
    return (
        init_real(np.full(shape, GAMMA_INIT), dtype),
        init_real(np.full(shape, GAMMA_INIT), dtype),
        init_real(np.zeros(shape), dtype),
        init_zero(shape, dtype),
    )


class _AffineMixin:
    def _make_affine(self, shape: Tuple[int, ...], dtype: Optional[str]) -> None:
        self.gamma_rr, self.gamma_ii, self.gamma_ri, self.beta = init_affine(shape, dtype)

    @property
    def affine_params(self) -> Optional[AffineParams]:
        if not self.affine:
            return None
        return AffineParams(self.gamma_rr, self.gamma_ii, self.gamma_ri, self.beta)


class CVBatchNorm(_AffineMixin, Module):
    def __init__(
        self,
        num_features: int,
        eps: float = DEFAULT_EPS,
        momentum: float = DEFAULT_MOMENTUM,
        affine: bool = True,
        dtype: Optional[str] = None,
    ) -> None:
        super().__init__()
        if not 0 < momentum <= 1:
            raise CVNNError(f"momentum must lie in (0, 1], got {momentum}")
        dtype = dtype or config.DEFAULT_DTYPE
        self.num_features = num_features
        self.eps = eps
        self.momentum = momentum
        self.affine = affine
        if affine:
            self._make_affine((num_features,), dtype)
        initial = RunningStats.initial(num_features, eps, momentum)
        self.register_buffer("running_mean", CTensor.from_complex(initial.stats.mu, dtype))
        self.register_buffer(
            "running_var",
            CTensor(np.stack([initial.stats.vrr, initial.stats.vii, initial.stats.vri]), dtype=dtype),
        )
        self.register_buffer("num_batches_tracked", zeros((), dtype))

    def running_stats(self) -> RunningStats:
        var = self.running_var.re.astype(np.float64)
        return RunningStats(
            WhitenStats(
                mu=self.running_mean.numpy().astype(np.complex128),
                vrr=var[0], vii=var[1], vri=var[2], eps=self.eps,
            ),
            momentum=self.momentum,
            num_batches_tracked=int(self.num_batches_tracked.re),
        )

    def forward(self, z) -> Variable:
        state = self.running_stats()
        out = cv_batchnorm(z, state, self.affine_params, self.training)
        if self.training:
            dtype = self.running_mean.dtype
            s = state.stats
            self.set_buffer("running_mean", CTensor.from_complex(s.mu, dtype))
            self.set_buffer("running_var", CTensor(np.stack([s.vrr, s.vii, s.vri]), dtype=dtype))
            self.set_buffer(
                "num_batches_tracked", CTensor(float(state.num_batches_tracked), dtype=dtype)
            )
        return out

    def extra_repr(self) -> str:
        return f"{self.num_features}, eps={self.eps}, momentum={self.momentum}"


class CVLayerNorm(_AffineMixin, Module):
    def __init__(
        self,
        normalized_shape,
        eps: float = DEFAULT_EPS,
        affine: bool = True,
        dtype: Optional[str] = None,
    ) -> None:
        super().__init__()
        if isinstance(normalized_shape, int):
            normalized_shape = (normalized_shape,)
        self.normalized_shape = tuple(normalized_shape)
        self.eps = eps
        self.affine = affine
        if affine:
            self._make_affine(self.normalized_shape, dtype)

    def forward(self, z) -> Variable:
        z = F.as_variable(z)
        n = len(self.normalized_shape)
        if z.shape[-n:] != self.normalized_shape:
            raise ShapeError(f"expected trailing shape {self.normalized_shape}, got {z.shape}")
        axes = tuple(range(z.ndim - n, z.ndim))
        return cv_layernorm(z, axes, self.affine_params, self.eps)

    def extra_repr(self) -> str:
        return f"{self.normalized_shape}, eps={self.eps}"
