"""Module/Parameter base classes shared by every layer."""
from collections import OrderedDict
from typing import Dict, Iterator, List, Optional, Tuple

import numpy as np

from src import config
from src.autodiff.variable import Variable
from src.errors import ShapeError
from src.tensor.ctensor import CTensor, circular_normal, zeros


class Parameter(Variable):
    """A learnable leaf Variable."""

    def __init__(self, value: CTensor, name: Optional[str] = None) -> None:
        super().__init__(value, requires_grad=True, name=name)

    def __repr__(self) -> str:
        return f"Parameter(shape={self.shape}, dtype={self.dtype})"


def init_complex_weight(
    rng: np.random.Generator, shape: Tuple[int, ...], fan_in: int, dtype: Optional[str] = None
) -> Parameter:
    """Independent real/imag Gaussians with std 1/sqrt(2 fan_in), so E|w|^2 = 1/fan_in."""
    return Parameter(circular_normal(rng, shape, scale=1.0 / np.sqrt(fan_in), dtype=dtype))


def init_zero(shape: Tuple[int, ...], dtype: Optional[str] = None) -> Parameter:
    return Parameter(zeros(shape, dtype))


def init_real(value, dtype: Optional[str] = None) -> Parameter:
    """A real-valued learnable stored with a zero imaginary plane."""
    arr = np.asarray(value, dtype=np.float64)
    return Parameter(CTensor(arr, np.zeros_like(arr), dtype or config.DEFAULT_DTYPE))


class Module:
    """Base class: registers Parameters, sub-Modules and buffers by attribute."""

    def __init__(self) -> None:
        object.__setattr__(self, "_parameters", OrderedDict())
        object.__setattr__(self, "_modules", OrderedDict())
        object.__setattr__(self, "_buffers", OrderedDict())
        object.__setattr__(self, "training", True)

    def __setattr__(self, name: str, value) -> None:
        if "_parameters" not in self.__dict__:
            raise AttributeError("Module.__init__() must run before assigning attributes")
        for registry in (self._parameters, self._modules, self._buffers):
            registry.pop(name, None)
        if isinstance(value, Parameter):
            self._parameters[name] = value
        elif isinstance(value, Module):
            self._modules[name] = value
        object.__setattr__(self, name, value)

    def register_buffer(self, name: str, value: CTensor) -> None:
        """Non-learnable state that is still checkpointed (e.g. running stats)."""
        self.__setattr__(name, value)
        self._buffers[name] = value

    def set_buffer(self, name: str, value: CTensor) -> None:
        if name not in self._buffers:
            raise KeyError(f"No buffer named {name!r}")
        self._buffers[name] = value
        object.__setattr__(self, name, value)

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    # Traversal

    def named_modules(self, prefix: str = "") -> Iterator[Tuple[str, "Module"]]:
        yield prefix, self
        for name, child in self._modules.items():
            yield from child.named_modules(f"{prefix}.{name}" if prefix else name)

    def named_parameters(self) -> Iterator[Tuple[str, Parameter]]:
        for prefix, module in self.named_modules():
            for name, param in module._parameters.items():
                yield (f"{prefix}.{name}" if prefix else name), param

    def parameters(self) -> List[Parameter]:
        return [p for _, p in self.named_parameters()]

    def named_buffers(self) -> Iterator[Tuple[str, CTensor]]:
        for prefix, module in self.named_modules():
            for name, buf in module._buffers.items():
                yield (f"{prefix}.{name}" if prefix else name), buf

    def train(self, mode: bool = True) -> "Module":
        for _, module in self.named_modules():
            object.__setattr__(module, "training", mode)
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def zero_grad(self) -> None:
        for p in self.parameters():
            p.zero_grad()

    # Persistence

    def state_dict(self) -> Dict[str, CTensor]:
        state: Dict[str, CTensor] = OrderedDict()
        for name, param in self.named_parameters():
            state[name] = param.value
        for name, buf in self.named_buffers():
            state[name] = buf
        return state

    def load_state_dict(self, state: Dict[str, CTensor]) -> None:
        expected = self.state_dict()
        missing = sorted(set(expected) - set(state))
        unexpected = sorted(set(state) - set(expected))
        if missing or unexpected:
            raise ShapeError(f"state mismatch: missing {missing}, unexpected {unexpected}")
        modules = dict(self.named_modules())
        for key, value in state.items():
            if value.shape != expected[key].shape:
                raise ShapeError(f"{key}: shape {value.shape} != {expected[key].shape}")
            prefix, _, name = key.rpartition(".")
            owner = modules[prefix]
            if name in owner._parameters:
                owner._parameters[name].value = value
            else:
                owner.set_buffer(name, value)

    def extra_repr(self) -> str:
        return ""

    def __repr__(self) -> str:
        lines = [f"{type(self).__name__}({self.extra_repr()}"]
        for name, child in self._modules.items():
            child_repr = repr(child).replace("\n", "\n  ")
            lines.append(f"  ({name}): {child_repr}")
        return "\n".join(lines) + ")" if len(lines) > 1 else lines[0] + ")"


class Sequential(Module):
    def __init__(self, *layers: Module) -> None:
        super().__init__()
        for i, layer in enumerate(layers):
            setattr(self, str(i), layer)

    def __iter__(self) -> Iterator[Module]:
        return iter(self._modules.values())

    def __len__(self) -> int:
        return len(self._modules)

    def __getitem__(self, index: int) -> Module:
        return list(self._modules.values())[index]

    def forward(self, z):
        for layer in self:
            z = layer(z)
        return z
