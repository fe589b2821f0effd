"""Reverse-mode differentiation over the two real degrees of freedom.

Gradient convention: for a real scalar loss L and an element z = x + jy,
``grad = dL/dx + j dL/dy``. A holomorphic map w = f(z) therefore
back-propagates ``conj(f'(z)) * g``; a general map back-propagates
``conj(dw/dz) * g + (dw/dz*) * conj(g)``.
"""
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Sequence, Tuple
import itertools
import threading

import numpy as np

from src.errors import GradientError
from src.tensor.ctensor import CTensor

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_SEQUENCE = itertools.count()
_state = threading.local()

# Relative size of an imaginary part still accepted as a "real" loss
REAL_LOSS_TOL = 1e-12


def is_grad_enabled() -> bool:
    return getattr(_state, "grad_enabled", True)


@contextmanager
def no_grad() -> Iterator[None]:
    """Evaluate without recording any node."""
    previous = is_grad_enabled()
    _state.grad_enabled = False
    try:
        yield
    finally:
        _state.grad_enabled = previous


@dataclass(eq=False)
class Node:
    op: str
    inputs: Tuple["Variable", ...]
    backward_fn: BackwardFn
    seq: int


class Variable:
    """A CTensor plus the node that produced it."""

    __array_priority__ = 1000

    def __init__(
        self,
        value: CTensor,
        requires_grad: bool = False,
        name: Optional[str] = None,
    ) -> None:
        if not isinstance(value, CTensor):
            value = CTensor.from_complex(np.asarray(value))
        self.value = value
        self.grad: Optional[CTensor] = None
        self.requires_grad = requires_grad
        self.node: Optional[Node] = None
        self.name = name

    @property
    def node_id(self) -> Optional[int]:
        return None if self.node is None else self.node.seq

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def dtype(self) -> str:
        return self.value.dtype

    @property
    def is_leaf(self) -> bool:
        return self.node is None

    def numpy(self) -> np.ndarray:
        return self.value.numpy()

    def item(self) -> complex:
        return self.value.item()

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Variable":
        return Variable(self.value)

    def _accumulate(self, grad: np.ndarray) -> None:
        update = CTensor.from_complex(grad, self.value.dtype)
        self.grad = update if self.grad is None else self.grad + update

    # Operator sugar; the differentiable implementations live in functional.

    def __add__(self, other):
        from src.autodiff import functional as F
        return F.add(self, other)

    def __radd__(self, other):
        from src.autodiff import functional as F
        return F.add(other, self)

    def __sub__(self, other):
        from src.autodiff import functional as F
        return F.sub(self, other)

    def __rsub__(self, other):
        from src.autodiff import functional as F
        return F.sub(other, self)

    def __mul__(self, other):
        from src.autodiff import functional as F
        return F.mul(self, other)

    def __rmul__(self, other):
        from src.autodiff import functional as F
        return F.mul(other, self)

    def __truediv__(self, other):
        from src.autodiff import functional as F
        return F.div(self, other)

    def __rtruediv__(self, other):
        from src.autodiff import functional as F
        return F.div(other, self)

    def __neg__(self):
        from src.autodiff import functional as F
        return F.neg(self)

    def __getitem__(self, index):
        from src.autodiff import functional as F
        return F.getitem(self, index)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Variable(shape={self.shape}, dtype={self.dtype}{flag})"


class Tape:
    """Nodes reachable from one output, in recording (topological) order."""

    def __init__(self, nodes: List[Node]) -> None:
        self.nodes = nodes

    @classmethod
    def from_output(cls, output: Variable) -> "Tape":
        seen: Dict[int, Node] = {}
        stack = [output.node] if output.node is not None else []
        while stack:
            node = stack.pop()
            if node.seq in seen:
                continue
            seen[node.seq] = node
            for inp in node.inputs:
                if inp.node is None:
                    continue
                # inputs are always recorded before the node that consumes them
                assert inp.node.seq < node.seq, "cyclic tape"
                if inp.node.seq not in seen:
                    stack.append(inp.node)
        return cls(sorted(seen.values(), key=lambda n: n.seq))

    def __len__(self) -> int:
        return len(self.nodes)

    def __iter__(self) -> Iterator[Node]:
        return iter(self.nodes)

    def __reversed__(self) -> Iterator[Node]:
        return reversed(self.nodes)


def _check_real_scalar(loss: Variable) -> None:
    if loss.value.size != 1:
        raise GradientError(f"backward needs a scalar loss, got shape {loss.shape}")
    value = loss.value.item()
    if value.imag != 0 and abs(value.imag) > REAL_LOSS_TOL * abs(value.real):
        raise GradientError(f"backward needs a real loss, got {value}")


def backward(loss: Variable) -> None:
    """Accumulate the real-pair gradient on every reachable leaf."""
    _check_real_scalar(loss)
    if not loss.requires_grad:
        return
    seed = np.ones(loss.shape, dtype=np.complex128)
    if loss.node is None:
        loss._accumulate(seed)
        return

    tape = Tape.from_output(loss)
    pending: Dict[int, np.ndarray] = {loss.node.seq: seed}
    for node in reversed(tape):
        grad = pending.pop(node.seq, None)
        if grad is None:
            continue
        input_grads = node.backward_fn(grad)
        for inp, inp_grad in zip(node.inputs, input_grads):
            if inp_grad is None or not inp.requires_grad:
                continue
            if inp_grad.shape != inp.shape:
                raise GradientError(
                    f"{node.op}: gradient shape {inp_grad.shape} != input shape {inp.shape}"
                )
            if inp.node is None:
                inp._accumulate(inp_grad)
            elif inp.node.seq in pending:
                pending[inp.node.seq] = pending[inp.node.seq] + inp_grad
            else:
                pending[inp.node.seq] = inp_grad


def next_sequence() -> int:
    return next(_SEQUENCE)
