from .tensor import (
    Tensor,
    NumericError,
    ShapeError,
    add,
    anomaly_detection,
    bias_add,
    concat,
    depthwise_conv1d,
    embedding,
    group_norm,
    index_axis,
    layer_norm,
    matmul,
    mean_pool,
    mul,
    no_grad,
    relu,
    sigmoid,
    slice_axis,
    softmax,
    softmax_cross_entropy,
    swish,
    tanh,
    token_nll,
)
from .module import Module, Parameter, glorot
from .check import Graph, gradient_check

__all__ = [
    "Tensor",
    "NumericError",
    "ShapeError",
    "add",
    "anomaly_detection",
    "bias_add",
    "concat",
    "depthwise_conv1d",
    "embedding",
    "group_norm",
    "index_axis",
    "layer_norm",
    "matmul",
    "mean_pool",
    "mul",
    "no_grad",
    "relu",
    "sigmoid",
    "slice_axis",
    "softmax",
    "softmax_cross_entropy",
    "swish",
    "tanh",
    "token_nll",
    "Module",
    "Parameter",
    "glorot",
    "Graph",
    "gradient_check",
]
