from src.kernels.conv import (
    ConvOperator,
    ConvSpec,
    ConvTransposeOperator,
    conv_nd,
    conv_transpose_nd,
    conv_weight_grad,
    convnd,
)
from src.kernels.operators import (
    DenseOperator,
    MatrixOperator,
    MulCounter,
    RealOperator,
    ScalarOperator,
    complex_apply,
    gauss_apply,
    naive_apply,
)

__all__ = [
    "ConvOperator",
    "ConvSpec",
    "ConvTransposeOperator",
    "DenseOperator",
    "MatrixOperator",
    "MulCounter",
    "RealOperator",
    "ScalarOperator",
    "complex_apply",
    "conv_nd",
    "conv_transpose_nd",
    "conv_weight_grad",
    "convnd",
    "gauss_apply",
    "naive_apply",
]
