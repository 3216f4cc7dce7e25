"""Bounded (tanh-squashed, affinely rescaled) diagonal Gaussians.

A sample is built as u = mu + sigma * eps, then mapped through
action = mid + half * tanh(u) with mid = (low + high)/2 and
half = (high - low)/2. Its log-density subtracts the log-Jacobian of
that map; log(1 - tanh(u)^2) is evaluated as 2*(log 2 - u - softplus(-2u))
so saturated pre-squash values stay finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import tape
from .tape import Var

LOG2 = math.log(2.0)


@dataclass
class SquashedGaussianSample:
    """A bounded action with the quantities needed to reproduce it."""

    action: np.ndarray
    pre_squash: np.ndarray
    noise: np.ndarray
    log_prob: np.ndarray


def _check_bounds(low: float, high: float) -> tuple[float, float]:
    if not low < high:
        raise ValueError(f"action bounds must satisfy low < high, got [{low}, {high}]")
    return (low + high) / 2.0, (high - low) / 2.0


def _tanh_log_jacobian(u: np.ndarray) -> np.ndarray:
    # log(1 - tanh(u)^2), saturation-safe
    return 2.0 * (LOG2 - u - np.logaddexp(0.0, -2.0 * u))


def sample_squashed(
    mu: np.ndarray,
    sigma: np.ndarray,
    eps: np.ndarray,
    low: float,
    high: float,
) -> SquashedGaussianSample:
    """Deterministic transform of (mu, sigma, eps) into a bounded sample.

    Accepts (d,) vectors or (batch, d) arrays; log_prob sums over the
    trailing component axis.
    """
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if np.any(sigma <= 0.0):
        raise ValueError("sigma must be strictly positive")
    mid, half = _check_bounds(low, high)

    u = mu + sigma * eps
    action = mid + half * np.tanh(u)
    logpdf = -0.5 * tape.LOG_2PI - np.log(sigma) - 0.5 * eps * eps
    log_jac = math.log(half) + _tanh_log_jacobian(u)
    log_prob = np.sum(logpdf - log_jac, axis=-1)
    return SquashedGaussianSample(action=action, pre_squash=u, noise=eps, log_prob=log_prob)


def mean_action(mu: np.ndarray, low: float, high: float) -> np.ndarray:
    """The bounded action at the distribution mode (deterministic mode)."""
    mid, half = _check_bounds(low, high)
    return mid + half * np.tanh(np.asarray(mu, dtype=np.float64))


def squashed_sample_graph(
    mu: Var,
    sigma: Var,
    eps: np.ndarray,
    low: float,
    high: float,
) -> tuple[Var, Var]:
    """Reparameterized bounded sample on the tape.

    Gradients flow into mu and sigma through both the action and its
    log-density. Returns (action (batch, d), log_prob (batch,)).
    """
    mid, half = _check_bounds(low, high)
    d = eps.shape[-1]

    u = tape.add(mu, tape.mul(sigma, eps))
    action = tape.add(tape.scale(tape.tanh(u), half), mid)
    logpdf = tape.gaussian_logpdf(u, mu, sigma)
    # 2*(log2 - u - softplus(-2u)) per component
    log_jac = tape.scale(tape.sub(LOG2, tape.add(u, tape.softplus(tape.scale(u, -2.0)))), 2.0)
    log_prob = tape.add(tape.row_sum(tape.sub(logpdf, log_jac)), -d * math.log(half))
    return action, log_prob
