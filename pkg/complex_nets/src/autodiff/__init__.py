from src.autodiff.gradcheck import check_gradients, finite_diff_check
from src.autodiff.variable import Node, Tape, Variable, backward, is_grad_enabled, no_grad

__all__ = [
    "Node",
    "Tape",
    "Variable",
    "backward",
    "check_gradients",
    "finite_diff_check",
    "is_grad_enabled",
    "no_grad",
]
