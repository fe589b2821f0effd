"""Split, polar and pointwise complex losses; each returns a real scalar Variable.

Reduction: the L1/MSE bases of split and polar losses are mean-reduced,
the pointwise error catalog sums as written (with its 1/2 factors).
"""
from functools import partial
from typing import Callable, Dict, Optional, Union

import numpy as np
from scipy.signal.windows import gaussian

from src.autodiff import functional as F
from src.autodiff.variable import Variable
from src.errors import ConfigError, CVNNError, ShapeError
from src.kernels.conv import ConvSpec
from src.models.specs import PolarLossWeights

RealLoss = Callable[[Variable, Variable], Variable]

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def _check_shapes(x: Variable, y: Variable) -> None:
    if x.shape != y.shape:
        raise ShapeError(f"estimate shape {x.shape} != target shape {y.shape}")


def l1_loss(a, b) -> Variable:
    return F.mean(F.rfn("abs", F.sub(a, b)))


def mse_loss(a, b) -> Variable:
    return F.mean(F.rfn("square", F.sub(a, b)))


def _ssim_window() -> np.ndarray:
    g = gaussian(SSIM_WINDOW, SSIM_SIGMA)
    window = np.outer(g, g)
    return (window / window.sum()).reshape(1, 1, SSIM_WINDOW, SSIM_WINDOW)


def ssim_2d(a, b) -> Variable:
    """Mean local SSIM of real images (…, H, W); b is the reference.

    The dynamic range is max(b) - min(b), or 1 when b is constant.
    """
    a, b = F.as_variable(a), F.as_variable(b)
    _check_shapes(a, b)
    if a.ndim < 2:
        raise ShapeError(f"SSIM needs images (..., H, W), got {a.shape}")
    h, w = a.shape[-2:]
    if h < SSIM_WINDOW or w < SSIM_WINDOW:
        raise ShapeError(f"SSIM window {SSIM_WINDOW} is larger than the {h}x{w} image")
    a = F.reshape(F.real(a), (-1, 1, h, w))
    b = F.reshape(F.real(b), (-1, 1, h, w))

    target = b.numpy().real
    dynamic_range = float(target.max() - target.min())
    if dynamic_range <= 0:
        dynamic_range = 1.0
    c1 = (SSIM_K1 * dynamic_range) ** 2
    c2 = (SSIM_K2 * dynamic_range) ** 2

    window = _ssim_window()
    spec = ConvSpec.create(2)

    def blur(v: Variable) -> Variable:
        return F.real_weight_conv(v, window, spec)

    mu_a, mu_b = blur(a), blur(b)
    mu_aa, mu_bb, mu_ab = F.mul(mu_a, mu_a), F.mul(mu_b, mu_b), F.mul(mu_a, mu_b)
    var_a = F.sub(blur(F.mul(a, a)), mu_aa)
    var_b = F.sub(blur(F.mul(b, b)), mu_bb)
    cov = F.sub(blur(F.mul(a, b)), mu_ab)
    numerator = F.mul(F.add(F.mul(mu_ab, 2.0), c1), F.add(F.mul(cov, 2.0), c2))
    denominator = F.mul(F.add(F.add(mu_aa, mu_bb), c1), F.add(F.add(var_a, var_b), c2))
    return F.real(F.mean(F.div(numerator, denominator)))


def ssim_loss(a, b) -> Variable:
    return F.sub(1.0, ssim_2d(a, b))


SPLIT_BASES: Dict[str, RealLoss] = {"L1": l1_loss, "MSE": mse_loss, "SSIM": ssim_loss}


def _base(name: Union[str, RealLoss]) -> RealLoss:
    if callable(name):
        return name
    if name not in SPLIT_BASES:
        raise ConfigError(f"Unknown loss base {name!r}; known: {sorted(SPLIT_BASES)}")
    return SPLIT_BASES[name]


def split_loss(
    base: Union[str, RealLoss], x, y, base_im: Optional[Union[str, RealLoss]] = None
) -> Variable:
    """L_R(Re x, Re y) + L_I(Im x, Im y); L_I defaults to L_R."""
    x, y = F.as_variable(x), F.as_variable(y)
    _check_shapes(x, y)
    loss_re = _base(base)
    loss_im = loss_re if base_im is None else _base(base_im)
    return F.add(loss_re(F.real(x), F.real(y)), loss_im(F.imag(x), F.imag(y)))


def wrap_phase(d: Variable) -> Variable:
    """Shift a phase difference into (-pi, pi] by a constant multiple of 2 pi."""
    diff = d.numpy().real
    shift = 2 * np.pi * np.ceil((diff - np.pi) / (2 * np.pi))
    return F.sub(d, shift)


def polar_loss(
    base_mag: Union[str, RealLoss],
    base_phase: Union[str, RealLoss],
    weights: PolarLossWeights,
    x,
    y,
) -> Variable:
    """w_mag G_mag(|x|, |y|) + w_phase G_phase(wrap(angle x - angle y), 0)."""
    x, y = F.as_variable(x), F.as_variable(y)
    _check_shapes(x, y)
    magnitude = _base(base_mag)(F.abs(x), F.abs(y))
    residual = wrap_phase(F.sub(F.angle(x), F.angle(y)))
    phase = _base(base_phase)(residual, np.zeros(residual.shape))
    return F.add(F.mul(magnitude, weights.w_mag), F.mul(phase, weights.w_phase))


# Pointwise catalog

def _residual_power(x, y) -> Variable:
    x, y = F.as_variable(x), F.as_variable(y)
    _check_shapes(x, y)
    return F.abs2(F.sub(x, y))


def cv_quad_error(x, y) -> Variable:
    """1/2 sum |x - y|^2."""
    return F.mul(F.sum(_residual_power(x, y)), 0.5)


def cv_fourth_pow_error(x, y) -> Variable:
    """1/2 sum |x - y|^4."""
    p = _residual_power(x, y)
    return F.mul(F.sum(F.mul(p, p)), 0.5)


def cv_cauchy_error(x, y, c: float = 1.0) -> Variable:
    """1/2 sum c^2/2 ln(1 + |x - y|^2 / c^2)."""
    if c <= 0:
        raise ConfigError(f"Cauchy scale c must be positive, got {c}")
    p = _residual_power(x, y)
    terms = F.mul(F.rfn("log1p", F.mul(p, 1.0 / c ** 2)), c ** 2 / 2)
    return F.mul(F.sum(terms), 0.5)


def cv_log_cosh_error(x, y) -> Variable:
    """sum ln(cosh(|x - y|^2))."""
    return F.sum(F.rfn("logcosh", _residual_power(x, y)))


def cv_log_error(x, y) -> Variable:
    """sum |ln x - ln y|^2 on the principal branch."""
    x, y = F.as_variable(x), F.as_variable(y)
    _check_shapes(x, y)
    if np.any(x.numpy() == 0) or np.any(y.numpy() == 0):
        raise CVNNError("CVLogError needs inputs without zero elements")
    return F.sum(F.abs2(F.sub(F.log(x), F.log(y))))


POINTWISE_LOSSES: Dict[str, Callable[..., Variable]] = {
    "CVQuadError": cv_quad_error,
    "CVFourthPowError": cv_fourth_pow_error,
    "CVCauchyError": cv_cauchy_error,
    "CVLogCoshError": cv_log_cosh_error,
    "CVLogError": cv_log_error,
}


def pointwise_loss(name: str, x, y, c: float = 1.0) -> Variable:
    if name not in POINTWISE_LOSSES:
        raise ConfigError(f"Unknown pointwise loss {name!r}; known: {sorted(POINTWISE_LOSSES)}")
    if name == "CVCauchyError":
        return cv_cauchy_error(x, y, c)
    return POINTWISE_LOSSES[name](x, y)


def perp_loss_ssim(x, y) -> Variable:
    raise NotImplementedError("PerpLossSSIM is not implemented: its formulation is not specified")


LossFn = Callable[[Variable, Variable], Variable]

LOSSES: Dict[str, Callable[..., LossFn]] = {
    "SplitL1": lambda: partial(split_loss, "L1"),
    "SplitMSE": lambda: partial(split_loss, "MSE"),
    "SplitSSIM": lambda: partial(split_loss, "SSIM"),
    "PolarL1": lambda w_mag=1.0, w_phase=1.0: partial(
        polar_loss, "L1", "L1", PolarLossWeights(w_mag=w_mag, w_phase=w_phase)
    ),
    "PolarMSE": lambda w_mag=1.0, w_phase=1.0: partial(
        polar_loss, "MSE", "MSE", PolarLossWeights(w_mag=w_mag, w_phase=w_phase)
    ),
    "CVQuadError": lambda: cv_quad_error,
    "CVFourthPowError": lambda: cv_fourth_pow_error,
    "CVCauchyError": lambda c=1.0: partial(cv_cauchy_error, c=c),
    "CVLogCoshError": lambda: cv_log_cosh_error,
    "CVLogError": lambda: cv_log_error,
    "PerpLossSSIM": lambda: perp_loss_ssim,
}


def get_loss(name: str, **params) -> LossFn:
    """Loss callable ``f(estimate, target)`` from the config vocabulary."""
    if name not in LOSSES:
        raise ConfigError(f"Unknown loss {name!r}; known: {sorted(LOSSES)}")
    try:
        return LOSSES[name](**params)
    except TypeError as e:
        raise ConfigError(f"Invalid parameters for loss {name}: {e}") from e
