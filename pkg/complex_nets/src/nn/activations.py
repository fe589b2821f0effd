"""Complex activations: split (Type-A), polar (Type-B), fully complex and ReLU-based.

Names are the config vocabulary. Aliases with identical definitions
(CTanh/CVSplitTanh, CSigmoid/CVSplitSigmoid, CVSplitReLU/CReLU,
CVCardiod/CVCardioid) resolve to the same class.
"""
from typing import Callable, Dict, Optional, Set, Type, Union

import numpy as np

from src.autodiff import functional as F
from src.autodiff.variable import Variable
from src.errors import ConfigError
from src.models.specs import ActivationSpec
from src.nn.module import Module, init_real

RealFunction = Union[str, Callable[[Variable], Variable]]

MODRELU_B_INIT = -0.1
CPRELU_SLOPE_INIT = 0.25


def _as_fn(g: Optional[RealFunction]) -> Optional[Callable[[Variable], Variable]]:
    if g is None or callable(g):
        return g
    return lambda v: F.rfn(g, v)


def apply_type_a(g_re: RealFunction, g_im: RealFunction, z) -> Variable:
    """G_re(x) + j G_im(y)."""
    z = F.as_variable(z)
    return F.make_complex(_as_fn(g_re)(F.real(z)), _as_fn(g_im)(F.imag(z)))


def apply_type_b(g_mag: RealFunction, g_phase: Optional[RealFunction], z) -> Variable:
    """G_mag(|z|) exp(j G_phase(angle z)); the phase is kept when G_phase is None.

    At z = 0 the phase factor is 1 (angle(0) = 0).
    """
    z = F.as_variable(z)
    magnitude = _as_fn(g_mag)(F.abs(z))
    if g_phase is None:
        phase = F.unit_phase(z, at_zero=1.0)
    else:
        phase = F.phasor(_as_fn(g_phase)(F.angle(z)))
    return F.mul(magnitude, phase)


def _polar_squash(r: Variable) -> Variable:
    r2 = F.mul(r, r)
    return F.div(r2, F.add(1.0, r2))


def modrelu(z, b) -> Variable:
    """ReLU(|z| + b) with the phase of z."""
    return apply_type_b(lambda r: F.rfn("relu", F.add(r, F.real(b))), None, z)


def cv_sigmoid(z, convention: str = "literal") -> Variable:
    """1/(1 + exp(z)) as printed; "standard" uses exp(-z)."""
    z = F.as_variable(z)
    if convention not in ("literal", "standard"):
        raise ConfigError(f"Unknown CVSigmoid convention {convention!r}")
    arg = z if convention == "literal" else F.neg(z)
    return F.div(1.0, F.add(1.0, F.exp(arg)))


def zrelu(z) -> Variable:
    """z where angle(z) lies in the closed first quadrant, else 0."""
    z = F.as_variable(z)
    arr = z.numpy()
    passes = (arr.real >= 0) & (arr.imag >= 0)
    return F.mul(z, passes.astype(np.float64))


def cardioid(z) -> Variable:
    z = F.as_variable(z)
    gain = F.mul(F.add(1.0, F.rfn("cos", F.angle(z))), 0.5)
    return F.mul(gain, z)


def siglog(z, c: float = 1.0, r: float = 1.0) -> Variable:
    if c <= 0 or r <= 0:
        raise ConfigError(f"CVSigLog needs c > 0 and r > 0, got c={c}, r={r}")
    z = F.as_variable(z)
    return F.div(z, F.add(c, F.mul(F.abs(z), 1.0 / r)))


def cprelu(z, slope) -> Variable:
    z = F.as_variable(z)
    return F.make_complex(F.prelu(F.real(z), slope), F.prelu(F.imag(z), slope))


def apply_fully_complex(name: str, params: Dict, z) -> Variable:
    if name == "CVSigmoid":
        return cv_sigmoid(z, params.get("convention") or "literal")
    if name == "zReLU":
        return zrelu(z)
    if name in ("CVCardioid", "CVCardiod"):
        return cardioid(z)
    if name == "CVSigLog":
        return siglog(z, params.get("c", 1.0), params.get("r", 1.0))
    raise ConfigError(f"{name!r} is not a fully complex activation")


def apply_relu_family(name: str, params: Dict, z) -> Variable:
    if name in ("CReLU", "CVSplitReLU"):
        return apply_type_a("relu", "relu", z)
    if name == "CPReLU":
        slope = params.get("slope")
        return cprelu(z, CPRELU_SLOPE_INIT if slope is None else slope)
    raise ConfigError(f"{name!r} is not a ReLU-family activation")


# Modules

class TypeA(Module):
    """Split activation with any pair of real functions."""

    def __init__(self, g_re: RealFunction, g_im: Optional[RealFunction] = None) -> None:
        super().__init__()
        self.g_re = g_re
        self.g_im = g_re if g_im is None else g_im

    def forward(self, z) -> Variable:
        return apply_type_a(self.g_re, self.g_im, z)


class TypeB(Module):
    """Polar activation with any magnitude function and optional phase function."""

    def __init__(self, g_mag: RealFunction, g_phase: Optional[RealFunction] = None) -> None:
        super().__init__()
        self.g_mag = g_mag
        self.g_phase = g_phase

    def forward(self, z) -> Variable:
        return apply_type_b(self.g_mag, self.g_phase, z)


class CVSplitTanh(TypeA):
    def __init__(self) -> None:
        super().__init__("tanh")


class CVSplitSigmoid(TypeA):
    def __init__(self) -> None:
        super().__init__("sigmoid")


class CVSplitAbs(TypeA):
    def __init__(self) -> None:
        super().__init__("abs")


class CVPolarTanh(TypeB):
    def __init__(self) -> None:
        super().__init__("tanh")


class CVPolarSquash(TypeB):
    def __init__(self) -> None:
        super().__init__(_polar_squash)


class CVPolarLog(TypeB):
    def __init__(self) -> None:
        super().__init__("log1p")


class modReLU(Module):  # noqa: N801
    def __init__(self, b: float = MODRELU_B_INIT, dtype: Optional[str] = None) -> None:
        super().__init__()
        self.b = init_real(b, dtype)

    def forward(self, z) -> Variable:
        return modrelu(z, self.b)


class CVSigmoid(Module):
    def __init__(self, convention: str = "literal") -> None:
        super().__init__()
        if convention not in ("literal", "standard"):
            raise ConfigError(f"Unknown CVSigmoid convention {convention!r}")
        self.convention = convention

    def forward(self, z) -> Variable:
        return cv_sigmoid(z, self.convention)


class zReLU(Module):  # noqa: N801
    def forward(self, z) -> Variable:
        return zrelu(z)


class CVCardioid(Module):
    def forward(self, z) -> Variable:
        return cardioid(z)


class CVSigLog(Module):
    def __init__(self, c: float = 1.0, r: float = 1.0) -> None:
        super().__init__()
        if c <= 0 or r <= 0:
            raise ConfigError(f"CVSigLog needs c > 0 and r > 0, got c={c}, r={r}")
        self.c = c
        self.r = r

    def forward(self, z) -> Variable:
        return siglog(z, self.c, self.r)


class CReLU(TypeA):
    def __init__(self) -> None:
        super().__init__("relu")


class CPReLU(Module):
    """Split PReLU with one learnable real slope shared by both planes."""

    def __init__(self, slope: float = CPRELU_SLOPE_INIT, dtype: Optional[str] = None) -> None:
        super().__init__()
        self.slope = init_real(slope, dtype)

    def forward(self, z) -> Variable:
        return cprelu(z, self.slope)


ACTIVATIONS: Dict[str, Type[Module]] = {
    "CVSplitTanh": CVSplitTanh,
    "CTanh": CVSplitTanh,
    "CVSplitSigmoid": CVSplitSigmoid,
    "CSigmoid": CVSplitSigmoid,
    "CVSplitAbs": CVSplitAbs,
    "CVPolarTanh": CVPolarTanh,
    "CVPolarSquash": CVPolarSquash,
    "CVPolarLog": CVPolarLog,
    "modReLU": modReLU,
    "CVSigmoid": CVSigmoid,
    "zReLU": zReLU,
    "CVCardioid": CVCardioid,
    "CVCardiod": CVCardioid,
    "CVSigLog": CVSigLog,
    "CReLU": CReLU,
    "CVSplitReLU": CReLU,
    "CPReLU": CPReLU,
}

ACTIVATION_FAMILIES: Dict[str, str] = {
    **{name: "typeA" for name in (
        "CVSplitTanh", "CTanh", "CVSplitSigmoid", "CSigmoid", "CVSplitAbs")},
    **{name: "typeB" for name in ("CVPolarTanh", "CVPolarSquash", "CVPolarLog", "modReLU")},
    **{name: "fullyComplex" for name in (
        "CVSigmoid", "zReLU", "CVCardioid", "CVCardiod", "CVSigLog")},
    **{name: "reluFamily" for name in ("CReLU", "CVSplitReLU", "CPReLU")},
}

ACTIVATION_PARAMS: Dict[str, Set[str]] = {
    "modReLU": {"b"},
    "CVSigmoid": {"convention"},
    "CVSigLog": {"c", "r"},
    "CPReLU": {"slope"},
}


def build_activation(spec: Union[ActivationSpec, str], dtype: Optional[str] = None) -> Module:
    if isinstance(spec, str):
        spec = ActivationSpec(name=spec)
    cls = ACTIVATIONS[spec.name]
    params = {k: v for k, v in spec.params.model_dump().items() if v is not None}
    if cls in (modReLU, CPReLU):
        return cls(dtype=dtype, **params)
    return cls(**params)
