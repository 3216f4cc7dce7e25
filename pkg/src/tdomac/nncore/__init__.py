"""Differentiable function-approximator core: reverse-mode tape, MLPs with
flat parameter vectors, squashed-Gaussian heads, Adam, and target averaging."""

from .dist import SquashedGaussianSample, mean_action, sample_squashed, squashed_sample_graph
from .mlp import HEAD_GAUSSIAN, HEAD_LINEAR, LEAKY_SLOPE, LOG_STD_MAX, LOG_STD_MIN, Mlp
from .optim import AdamState, adam_step, ema_update
from .tape import NonFiniteError, Tape, Var, check_finite_loss

__all__ = [
    "AdamState",
    "HEAD_GAUSSIAN",
    "HEAD_LINEAR",
    "LEAKY_SLOPE",
    "LOG_STD_MAX",
    "LOG_STD_MIN",
    "Mlp",
    "NonFiniteError",
    "SquashedGaussianSample",
    "Tape",
    "Var",
    "adam_step",
    "check_finite_loss",
    "ema_update",
    "mean_action",
    "sample_squashed",
    "squashed_sample_graph",
]
