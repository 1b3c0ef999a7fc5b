"""Numeric substrate: tensors with reverse-mode gradients, Adam, least squares."""
from . import tensor as ops
from .linalg import RIDGE_JITTER, SingularMatrixError, add_bias_column, solve_least_squares
from .optim import Adam, AdamState, adam_step
from .tensor import DimensionError, GraphError, Tensor, as_tensor, parameter

__all__ = [
    "Adam",
    "AdamState",
    "DimensionError",
    "GraphError",
    "RIDGE_JITTER",
    "SingularMatrixError",
    "Tensor",
    "adam_step",
    "add_bias_column",
    "as_tensor",
    "ops",
    "parameter",
    "solve_least_squares",
]
