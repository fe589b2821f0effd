"""Complex softmax variants and masking functions.

Each is usable standalone and as the masking function of an attention
block (looked up by name through ``get_mask``).
"""
from typing import Callable, Dict, Optional, Sequence, Union

from src.autodiff import functional as F
from src.autodiff.variable import Variable
from src.errors import ConfigError, CVNNError
from src.nn.module import Module

Axes = Optional[Union[int, Sequence[int]]]
MaskFunction = Callable[[Variable, int], Variable]
MINMAX_MODES = ("literal", "rescale")


def cv_softmax_split(z, axis: int = -1) -> Variable:
    """SoftMax(x) + j SoftMax(y)."""
    z = F.as_variable(z)
    return F.make_complex(F.softmax(F.real(z), axis), F.softmax(F.imag(z), axis))


def phase_softmax(z, axis: int = -1) -> Variable:
    """SoftMax(|z|) times z/|z|; zero elements stay zero."""
    z = F.as_variable(z)
    return F.mul(F.softmax(F.abs(z), axis), F.unit_phase(z))


def mag_softmax(z, axis: int = -1) -> Variable:
    """SoftMax(|z|); the result is real."""
    return F.softmax(F.abs(F.as_variable(z)), axis)


def complex_ratio_mask(z) -> Variable:
    """Sigmoid(|z|) times z/|z|."""
    z = F.as_variable(z)
    return F.mul(F.rfn("sigmoid", F.abs(z)), F.unit_phase(z))


def mag_minmax_norm(z, axes: Axes = None, mode: str = "literal") -> Variable:
    """(z - min|z|)/(max|z| - min|z|) over ``axes``.

    "literal" subtracts the real minimum from the complex value;
    "rescale" rescales the magnitude and keeps the phase.
    """
    if mode not in MINMAX_MODES:
        raise ConfigError(f"Unknown MagMinMaxNorm mode {mode!r}; expected {MINMAX_MODES}")
    z = F.as_variable(z)
    low = F.min_magnitude(z, axes, keepdims=True)
    high = F.max_magnitude(z, axes, keepdims=True)
    spread = F.sub(high, low)
    if (spread.numpy().real <= 0).any():
        raise CVNNError("constant magnitude input")
    if mode == "literal":
        return F.div(F.sub(z, low), spread)
    return F.mul(F.div(F.sub(F.abs(z), low), spread), F.unit_phase(z))


def identity_mask(z, axis: int = -1) -> Variable:
    return F.as_variable(z)


MASK_FUNCTIONS: Dict[str, MaskFunction] = {
    "CVSoftMax": cv_softmax_split,
    "PhaseSoftMax": phase_softmax,
    "MagSoftMax": mag_softmax,
    "ComplexRatioMask": lambda z, axis=-1: complex_ratio_mask(z),
    "MagMinMaxNorm": lambda z, axis=-1: mag_minmax_norm(z, axis),
    "Identity": identity_mask,
}


def get_mask(name: str) -> MaskFunction:
    if name not in MASK_FUNCTIONS:
        raise ConfigError(f"Unknown mask function {name!r}; known: {sorted(MASK_FUNCTIONS)}")
    return MASK_FUNCTIONS[name]


# Modules

class _AxisMask(Module):
    function: Callable = staticmethod(identity_mask)

    def __init__(self, axis: int = -1) -> None:
        super().__init__()
        self.axis = axis

    def forward(self, z) -> Variable:
        return type(self).function(z, self.axis)

    def extra_repr(self) -> str:
        return f"axis={self.axis}"


class CVSoftMax(_AxisMask):
    function = staticmethod(cv_softmax_split)


class PhaseSoftMax(_AxisMask):
    function = staticmethod(phase_softmax)


class MagSoftMax(_AxisMask):
    function = staticmethod(mag_softmax)


class ComplexRatioMask(Module):
    def forward(self, z) -> Variable:
        return complex_ratio_mask(z)


class MagMinMaxNorm(Module):
    def __init__(self, axes: Axes = None, mode: str = "literal") -> None:
        super().__init__()
        if mode not in MINMAX_MODES:
            raise ConfigError(f"Unknown MagMinMaxNorm mode {mode!r}; expected {MINMAX_MODES}")
        self.axes = axes
        self.mode = mode

    def forward(self, z) -> Variable:
        return mag_minmax_norm(z, self.axes, self.mode)


class Identity(Module):
    def forward(self, z) -> Variable:
        return F.as_variable(z)
