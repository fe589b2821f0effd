"""SGD and split Adam over complex parameters (real-pair gradient convention)."""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import ConfigError, GradientError
from src.nn.module import Parameter
from src.tensor.ctensor import CTensor

OPTIMIZERS = ("sgd", "adam")


@dataclass
class AdamState:
    step: int = 0
    m_re: Dict[int, np.ndarray] = field(default_factory=dict)
    m_im: Dict[int, np.ndarray] = field(default_factory=dict)
    v_re: Dict[int, np.ndarray] = field(default_factory=dict)
    v_im: Dict[int, np.ndarray] = field(default_factory=dict)


def _grads(params: Sequence[Parameter]) -> List[CTensor]:
    missing = [p.name or f"#{i}" for i, p in enumerate(params) if p.grad is None]
    if missing:
        raise GradientError(f"parameters without gradient: {missing}")
    return [p.grad for p in params]


def _adam_plane(
    moments: Tuple[Dict[int, np.ndarray], Dict[int, np.ndarray]],
    key: int,
    grad: np.ndarray,
    step: int,
    lr: float,
    betas: Tuple[float, float],
    eps: float,
) -> np.ndarray:
    m_store, v_store = moments
    b1, b2 = betas
    m = b1 * m_store.get(key, np.zeros_like(grad)) + (1 - b1) * grad
    v = b2 * v_store.get(key, np.zeros_like(grad)) + (1 - b2) * grad * grad
    m_store[key], v_store[key] = m, v
    m_hat = m / (1 - b1 ** step)
    v_hat = v / (1 - b2 ** step)
    return lr * m_hat / (np.sqrt(v_hat) + eps)


def optimizer_step(
    kind: str,
    params: Sequence[Parameter],
    lr: float,
    state: Optional[AdamState] = None,
    betas: Tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
) -> Optional[AdamState]:
    """Update ``params`` in place from their ``.grad``; returns the Adam state."""
    if kind not in OPTIMIZERS:
        raise ConfigError(f"Unknown optimizer {kind!r}; expected one of {OPTIMIZERS}")
    grads = _grads(params)
    if kind == "sgd":
        for p, g in zip(params, grads):
            p.value.sub_(CTensor._wrap(lr * g.re, lr * g.im, p.dtype))
        return state

    state = state if state is not None else AdamState()
    state.step += 1
    for i, (p, g) in enumerate(zip(params, grads)):
        re = g.re.astype(np.float64)
        im = g.im.astype(np.float64)
        delta_re = _adam_plane((state.m_re, state.v_re), i, re, state.step, lr, betas, eps)
        delta_im = _adam_plane((state.m_im, state.v_im), i, im, state.step, lr, betas, eps)
        p.value.sub_(CTensor._wrap(delta_re, delta_im, p.dtype))
    return state


class SGD:
    def __init__(self, params: Sequence[Parameter], lr: float) -> None:
        if lr <= 0:
            raise ConfigError(f"learning rate must be positive, got {lr}")
        self.params = list(params)
        self.lr = lr

    def step(self) -> None:
        optimizer_step("sgd", self.params, self.lr)

    def zero_grad(self) -> None:
        for p in self.params:
            p.zero_grad()


class Adam(SGD):
    """Adam applied independently to the real and imaginary planes."""

    def __init__(
        self,
        params: Sequence[Parameter],
        lr: float,
        betas: Tuple[float, float] = (0.9, 0.999),
        eps: float = 1e-8,
    ) -> None:
        super().__init__(params, lr)
        self.betas = betas
        self.eps = eps
        self.state = AdamState()

    def step(self) -> None:
        self.state = optimizer_step("adam", self.params, self.lr, self.state, self.betas, self.eps)


def build_optimizer(kind: str, params: Sequence[Parameter], lr: float, **kwargs) -> SGD:
    if kind == "sgd":
        return SGD(params, lr)
    if kind == "adam":
        return Adam(params, lr, **kwargs)
    raise ConfigError(f"Unknown optimizer {kind!r}; expected one of {OPTIMIZERS}")
