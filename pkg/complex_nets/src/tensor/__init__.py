from src.tensor.ctensor import (
    CTensor,
    circular_normal,
    elementwise,
    full,
    reduce,
    zeros,
)
from src.tensor.cvt_format import deserialize, load, save, serialize

__all__ = [
    "CTensor",
    "circular_normal",
    "deserialize",
    "elementwise",
    "full",
    "load",
    "reduce",
    "save",
    "serialize",
    "zeros",
]
