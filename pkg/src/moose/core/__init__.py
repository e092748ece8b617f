"""Minimal dense-tensor library with reverse-mode automatic differentiation."""

from .tensor import (
    LAYER_NORM_EPS,
    GradientError,
    MacCounter,
    MaskError,
    ShapeError,
    Tape,
    Tensor,
    active_tape,
    add,
    as_tensor,
    backward,
    broadcast_to,
    check_gradients,
    concat,
    gelu,
    getitem,
    layer_norm,
    log_softmax_nll,
    matmul,
    mul,
    relative_error,
    reshape,
    softmax_lastdim,
    sub,
    swap_last,
    tensor_mean,
    tensor_sum,
    transpose,
)

__all__ = [
    "LAYER_NORM_EPS",
    "GradientError",
    "MacCounter",
    "MaskError",
    "ShapeError",
    "Tape",
    "Tensor",
    "active_tape",
    "add",
    "as_tensor",
    "backward",
    "broadcast_to",
    "check_gradients",
    "concat",
    "gelu",
    "getitem",
    "layer_norm",
    "log_softmax_nll",
    "matmul",
    "mul",
    "relative_error",
    "reshape",
    "softmax_lastdim",
    "sub",
    "swap_last",
    "tensor_mean",
    "tensor_sum",
    "transpose",
]
