"""Adam and target-network averaging over flat parameter vectors."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tape import NonFiniteError


@dataclass
class AdamState:
    """Moment accumulators for one parameter vector."""

    m: np.ndarray
    v: np.ndarray
    t: int
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n: int, lr: float) -> "AdamState":
        return cls(m=np.zeros(n), v=np.zeros(n), t=0, lr=lr)


def adam_step(
    params: np.ndarray,
    grads: np.ndarray,
    state: AdamState,
    direction: str = "descend",
) -> np.ndarray:
    """One bias-corrected Adam update, in place.

    direction "descend" subtracts the step, "ascend" adds it. Raises on
    non-finite gradients and on non-finite parameters after the update.
    """
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ValueError("parameter/gradient/state shape mismatch")
    if direction not in ("ascend", "descend"):
        raise ValueError(f"unknown direction {direction!r}")
    if not np.all(np.isfinite(grads)):
        raise NonFiniteError("adam_step", "gradient contains NaN/Inf")

    state.t += 1
    state.m *= state.beta1
    state.m += (1.0 - state.beta1) * grads
    state.v *= state.beta2
    state.v += (1.0 - state.beta2) * (grads * grads)
    m_hat = state.m / (1.0 - state.beta1 ** state.t)
    v_hat = state.v / (1.0 - state.beta2 ** state.t)
    step = state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    if direction == "descend":
        params -= step
    else:
        params += step
    if not np.all(np.isfinite(params)):
        raise NonFiniteError("adam_step", "parameters became NaN/Inf")
    return params


def ema_update(target: np.ndarray, online: np.ndarray, tau: float) -> np.ndarray:
    """target <- (1 - tau) * target + tau * online, in place."""
    if target.shape != online.shape:
        raise ValueError("target/online length mismatch")
    if not (0.0 <= tau <= 1.0):
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    target *= 1.0 - tau
    target += tau * online
    return target
