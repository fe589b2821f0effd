"""Finite-difference gradient suite over every differentiable layer, activation, mask and loss.

Each case is re-drawn at ``points`` random interior points: both planes of
every input lie at least 0.2 away from zero, which keeps the samples clear of
the non-differentiability loci (|z| = 0, the axes for split ReLU/abs and
zReLU, the modReLU dead-zone edge |z| = -b = 0.1).
"""
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm.auto import tqdm
from colorama import Fore, Style

from src import config
from src.autodiff import functional as F
from src.autodiff.gradcheck import check_gradients
from src.autodiff.variable import Variable, no_grad
from src.errors import ConfigError
from src.kernels.conv import ConvSpec
from src.nn import attention, layers, losses, manifold, masks, normalization
from src.models.specs import ActivationSpec
from src.nn.activations import ACTIVATIONS, build_activation
from src.nn.module import Module
from src.tensor.ctensor import CTensor

Thunk = Callable[[], Variable]
CaseBuilder = Callable[[np.random.Generator], Tuple[Thunk, List[Variable]]]

INTERIOR_MIN = 0.2
INTERIOR_MAX = 1.5
DROPOUT_SEED = 7


@dataclass
class GradCase:
    module: str
    name: str
    build: CaseBuilder


@dataclass
class CaseResult:
    module: str
    name: str
    worst_error: float
    points: int
    passed: bool


def interior(rng: np.random.Generator, shape: Tuple[int, ...]) -> CTensor:
    """Planes with magnitude in [0.2, 1.5] and random sign."""
    def plane() -> np.ndarray:
        return rng.choice([-1.0, 1.0], size=shape) * rng.uniform(INTERIOR_MIN, INTERIOR_MAX, size=shape)
    return CTensor(plane(), plane(), dtype="f64")


def _var(rng: np.random.Generator, *shape: int) -> Variable:
    return Variable(interior(rng, shape), requires_grad=True)


def _scalarize(fn: Thunk, rng: np.random.Generator) -> Thunk:
    """Re(sum(c * fn())) with a fixed random complex probe c."""
    with no_grad():
        shape = fn().shape
    probe = CTensor(rng.normal(size=shape), rng.normal(size=shape), dtype="f64")
    return lambda: F.real(F.sum(F.mul(fn(), probe)))


def _module_case(factory: Callable[[np.random.Generator], Module], *shapes: Tuple[int, ...]) -> CaseBuilder:
    def build(rng: np.random.Generator) -> Tuple[Thunk, List[Variable]]:
        module = factory(rng)
        inputs = [_var(rng, *shape) for shape in shapes]
        return _scalarize(lambda: module(*inputs), rng), inputs + module.parameters()
    return build


def _function_case(fn: Callable[..., Variable], *shapes: Tuple[int, ...]) -> CaseBuilder:
    def build(rng: np.random.Generator) -> Tuple[Thunk, List[Variable]]:
        inputs = [_var(rng, *shape) for shape in shapes]
        return _scalarize(lambda: fn(*inputs), rng), inputs
    return build


# Cases per module

def _autodiff_cases() -> List[GradCase]:
    unary = {
        "conj": F.conj, "abs": F.abs, "abs2": F.abs2, "angle": F.angle, "exp": F.exp,
        "log": F.log, "unit_phase": F.unit_phase, "mean": lambda z: F.mean(z, axes=-1),
        "max_magnitude": lambda z: F.max_magnitude(z, axes=-1),
        "min_magnitude": lambda z: F.min_magnitude(z, axes=-1),
    }
    cases = [GradCase("autodiff", name, _function_case(fn, (2, 3))) for name, fn in unary.items()]
    cases += [
        GradCase("autodiff", "mul", _function_case(F.mul, (2, 3), (3,))),
        GradCase("autodiff", "div", _function_case(F.div, (2, 3), (2, 3))),
    ]
    return cases


def _cvops_cases() -> List[GradCase]:
    cases = []
    for path in ("gauss", "naive"):
        cases.append(GradCase(
            "cvops", f"matmul[{path}]",
            _function_case(lambda a, b, p=path: F.matmul(a, b, p), (2, 3), (3, 2)),
        ))
        spec = ConvSpec.create(1, stride=2, padding=1)
        cases.append(GradCase(
            "cvops", f"conv1d[{path}]",
            _function_case(lambda z, w, b, p=path: F.conv(z, w, b, spec, p), (1, 2, 5), (2, 2, 3), (2,)),
        ))
    return cases


def _dropout_case(rng: np.random.Generator) -> Tuple[Thunk, List[Variable]]:
    z = _var(rng, 2, 4)

    def fn() -> Variable:
        # same mask on every evaluation
        return layers.cv_dropout(z, 0.3, True, "independent", np.random.default_rng(DROPOUT_SEED))
    return _scalarize(fn, rng), [z]


def _layers_cases() -> List[GradCase]:
    specs = {
        "CVLinear": (lambda r: layers.CVLinear(3, 2, rng=r, dtype="f64"), (2, 3)),
        "CVConv1d": (lambda r: layers.CVConv1d(2, 2, 3, stride=2, padding=1, rng=r, dtype="f64"), (1, 2, 5)),
        "CVConv2d": (lambda r: layers.CVConv2d(1, 2, 2, dilation=1, rng=r, dtype="f64"), (1, 1, 3, 3)),
        "CVConv3d": (lambda r: layers.CVConv3d(1, 1, 2, rng=r, dtype="f64"), (1, 1, 3, 3, 3)),
        "CVConvTranspose1d": (lambda r: layers.CVConvTranspose1d(2, 1, 3, stride=2, rng=r, dtype="f64"), (1, 2, 3)),
        "CVConvTranspose2d": (lambda r: layers.CVConvTranspose2d(1, 1, 2, stride=2, rng=r, dtype="f64"), (1, 1, 2, 2)),
        "CVConvTranspose3d": (lambda r: layers.CVConvTranspose3d(1, 1, 2, rng=r, dtype="f64"), (1, 1, 2, 2, 2)),
        "CVAdaptiveAvgPool1d": (lambda r: layers.CVAdaptiveAvgPool1d(3), (1, 2, 5)),
        "CVAdaptiveAvgPool2d": (lambda r: layers.CVAdaptiveAvgPool2d((2, 2)), (1, 1, 3, 3)),
        "CVAdaptiveAvgPool3d": (lambda r: layers.CVAdaptiveAvgPool3d(1), (1, 1, 2, 2, 2)),
    }
    cases = [GradCase("layers", name, _module_case(factory, shape)) for name, (factory, shape) in specs.items()]
    cases.append(GradCase("layers", "CVDropout", _dropout_case))
    return cases


def _activation_cases() -> List[GradCase]:
    seen, cases = set(), []
    for name, cls in ACTIVATIONS.items():
        if cls in seen:
            continue
        seen.add(cls)
        cases.append(GradCase("activations", name, _module_case(lambda r, n=name: build_activation(n, "f64"), (2, 3))))
    cases.append(GradCase(
        "activations", "CVSigmoid[standard]",
        _module_case(
            lambda r: build_activation(ActivationSpec(name="CVSigmoid", params={"convention": "standard"}), "f64"),
            (2, 3),
        ),
    ))
    return cases


def _mask_cases() -> List[GradCase]:
    return [
        GradCase("masks_softmax", "CVSoftMax", _function_case(masks.cv_softmax_split, (2, 4))),
        GradCase("masks_softmax", "PhaseSoftMax", _function_case(masks.phase_softmax, (2, 4))),
        GradCase("masks_softmax", "MagSoftMax", _function_case(masks.mag_softmax, (2, 4))),
        GradCase("masks_softmax", "ComplexRatioMask", _function_case(masks.complex_ratio_mask, (2, 4))),
        GradCase("masks_softmax", "MagMinMaxNorm[literal]",
                 _function_case(lambda z: masks.mag_minmax_norm(z, -1), (2, 4))),
        GradCase("masks_softmax", "MagMinMaxNorm[rescale]",
                 _function_case(lambda z: masks.mag_minmax_norm(z, -1, "rescale"), (2, 4))),
    ]


def _normalization_cases() -> List[GradCase]:
    return [
        GradCase("normalization", "CVBatchNorm",
                 _module_case(lambda r: normalization.CVBatchNorm(2, dtype="f64"), (4, 2, 3))),
        GradCase("normalization", "CVLayerNorm",
                 _module_case(lambda r: normalization.CVLayerNorm(4, dtype="f64"), (2, 4))),
    ]


def _attention_cases() -> List[GradCase]:
    return [
        GradCase("attention", "CVSDPA",
                 _module_case(lambda r: attention.CVSDPA(), (1, 3, 2), (1, 3, 2), (1, 3, 2))),
        GradCase("attention", "CVSDPA[hermitian]",
                 _module_case(lambda r: attention.CVSDPA(transpose_mode="hermitian"), (1, 3, 2), (1, 3, 2), (1, 3, 2))),
        GradCase("attention", "CVMultiHead",
                 _module_case(lambda r: attention.CVMultiHead(4, heads=2, bias=False, rng=r, dtype="f64"), (1, 2, 4))),
        GradCase("attention", "CVECA",
                 _module_case(lambda r: attention.CVECA(3, rng=r, dtype="f64"), (2, 4, 3))),
        GradCase("attention", "CVMCA",
                 _module_case(lambda r: attention.CVMCA(4, reduction=2, activation="CVSplitTanh", rng=r, dtype="f64"),
                              (2, 4, 3))),
    ]


def _manifold_cases() -> List[GradCase]:
    cases = []
    for scope in manifold.CONVEX_SCOPES:
        cases.append(GradCase("manifold", f"wFMConv1d[{scope}]", _module_case(
            lambda r, s=scope: manifold.wFMConv1d(2, 2, 3, scope=s, rng=r, dtype="f64"), (1, 2, 5))))
        cases.append(GradCase("manifold", f"wFMConv2d[{scope}]", _module_case(
            lambda r, s=scope: manifold.wFMConv2d(1, 2, 2, scope=s, rng=r, dtype="f64"), (1, 1, 3, 3))))
    return cases


def _loss_case(name: str, shape: Tuple[int, ...], target: str = "offset") -> CaseBuilder:
    """``offset``: y = x - d with interior d; ``independent``: interior y; ``polar``: y = x rho e^{j phi}."""
    loss = losses.get_loss(name)

    def build(rng: np.random.Generator) -> Tuple[Thunk, List[Variable]]:
        x = _var(rng, *shape)
        if target == "polar":
            # magnitude ratio away from 1 and a small phase offset
            ratio = rng.uniform(1.3, 1.8, size=shape) * np.exp(1j * rng.uniform(0.2, 0.5, size=shape))
            y_value = x.numpy() * ratio
        elif target == "independent":
            y_value = interior(rng, shape).numpy()
        else:
            y_value = x.numpy() - interior(rng, shape).numpy()
        y = Variable(CTensor.from_complex(y_value, "f64"), requires_grad=True)
        return (lambda: loss(x, y)), [x, y]
    return build


def _loss_cases() -> List[GradCase]:
    cases = [GradCase("losses", name, _loss_case(name, (2, 3))) for name in (
        "SplitL1", "SplitMSE", "CVQuadError", "CVFourthPowError", "CVCauchyError", "CVLogCoshError",
    )]
    # log needs a target off zero and off the branch cut
    cases.append(GradCase("losses", "CVLogError", _loss_case("CVLogError", (2, 3), "independent")))
    cases += [GradCase("losses", name, _loss_case(name, (2, 3), "polar")) for name in ("PolarL1", "PolarMSE")]
    cases.append(GradCase("losses", "SplitSSIM", _ssim_case))
    return cases


def _ssim_case(rng: np.random.Generator) -> Tuple[Thunk, List[Variable]]:
    size = losses.SSIM_WINDOW
    x = _var(rng, 1, size, size)
    y = Variable(interior(rng, (1, size, size)))
    loss = losses.get_loss("SplitSSIM")
    return (lambda: loss(x, y)), [x]


SUITE: Dict[str, Callable[[], List[GradCase]]] = {
    "autodiff": _autodiff_cases,
    "cvops": _cvops_cases,
    "layers": _layers_cases,
    "activations": _activation_cases,
    "masks_softmax": _mask_cases,
    "normalization": _normalization_cases,
    "attention": _attention_cases,
    "manifold": _manifold_cases,
    "losses": _loss_cases,
}


@dataclass
class GradcheckReport:
    results: List[CaseResult]
    tolerance: float

    @property
    def failed(self) -> List[CaseResult]:
        return [r for r in self.results if not r.passed]

    @property
    def passed(self) -> bool:
        return not self.failed

    def by_module(self) -> pd.DataFrame:
        """Worst error and case count per module."""
        frame = pd.DataFrame([r.__dict__ for r in self.results])
        return frame.groupby("module", sort=False).agg(
            cases=("name", "count"), worst_error=("worst_error", "max"), failures=("passed", lambda s: int((~s).sum()))
        )


class GradcheckService:
    def __init__(
        self,
        modules: Optional[Sequence[str]] = None,
        tolerance: Optional[float] = None,
        points: Optional[int] = None,
        seed: int = 0,
    ) -> None:
        modules = list(modules) if modules else list(SUITE)
        unknown = [m for m in modules if m not in SUITE]
        if unknown:
            raise ConfigError(f"Unknown gradcheck module(s) {unknown}; known: {list(SUITE)}")
        self.modules = modules
        self.tolerance = config.GRADCHECK_TOL if tolerance is None else tolerance
        self.points = config.GRADCHECK_POINTS if points is None else points
        self.seed = seed

    def cases(self) -> Iterable[GradCase]:
        for module in self.modules:
            yield from SUITE[module]()

    def run_case(self, case: GradCase, index: int) -> CaseResult:
        worst = 0.0
        for point in range(self.points):
            rng = np.random.default_rng([self.seed, index, point])
            fn, variables = case.build(rng)
            worst = max(worst, check_gradients(fn, variables))
        return CaseResult(case.module, case.name, worst, self.points, worst <= self.tolerance)

    def run(self) -> GradcheckReport:
        cases = list(self.cases())
        pbar = tqdm(
            cases,
            desc=f"{Fore.BLUE}🔬 Gradcheck{Style.RESET_ALL}",
            bar_format="{desc}: {percentage:3.0f}%|{bar}| {n_fmt}/{total_fmt} {postfix}",
            colour="blue",
            leave=False,
        )
        results = []
        for index, case in enumerate(pbar):
            pbar.set_postfix_str(f"{case.module}.{case.name}")
            results.append(self.run_case(case, index))
        pbar.close()
        return GradcheckReport(results, self.tolerance)
