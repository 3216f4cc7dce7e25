"""Reverse-mode autodiff over a small, fixed set of array primitives.

Values are float64 numpy arrays (scalar results are numpy float64). A
``Tape`` records operation nodes in creation order and ``backward`` replays
them in reverse, which is a valid topological order because graphs are
built forward. Gradients flow only into nodes with ``requires_grad``, so
passes through frozen parameter sets (a target network, another agent's
critic) skip all weight-gradient matmuls and cost a single delta
back-substitution.

Tapes are tracked per thread: forward passes on immutable snapshots may
run concurrently from different threads without sharing state.
"""

from __future__ import annotations

import math
import threading
from typing import Callable, Sequence, Union

import numpy as np

LOG_2PI = math.log(2.0 * math.pi)

ArrayLike = Union["Var", np.ndarray, float]


class NonFiniteError(RuntimeError):
    """A NaN or infinity appeared in a computation.

    ``op`` names the first offending primitive in creation order.
    """

    def __init__(self, op: str, detail: str = ""):
        self.op = op
        super().__init__(f"non-finite value produced by '{op}'" + (f": {detail}" if detail else ""))


class Var:
    """One node of the computation graph."""

    __slots__ = ("value", "grad", "requires_grad", "_backward", "_op")

    def __init__(self, value, requires_grad=False, op="leaf"):
        self.value = value
        self.grad = None
        self.requires_grad = requires_grad
        self._backward = None
        self._op = op

    def __repr__(self):
        shape = getattr(self.value, "shape", ())
        return f"Var({self._op}, shape={shape}, requires_grad={self.requires_grad})"


_local = threading.local()


def _tape_stack():
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = []
        _local.stack = stack
    return stack


class Tape:
    """Records op nodes so backward() can replay them in reverse order."""

    def __init__(self):
        self.nodes: list[Var] = []

    def __enter__(self):
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc):
        _tape_stack().pop()
        return False

    def backward(self, loss: Var):
        """Accumulate gradients of ``loss`` into every reachable leaf."""
        if not loss.requires_grad:
            return
        loss.grad = np.float64(1.0)
        for node in reversed(self.nodes):
            if node.grad is not None and node._backward is not None:
                node._backward(node.grad)

    def first_nonfinite(self) -> str | None:
        """Name of the earliest op whose value is not finite, if any."""
        for node in self.nodes:
            if not np.all(np.isfinite(node.value)):
                return node._op
        return None


def check_finite_loss(tape: Tape, loss: Var) -> None:
    """Raise NonFiniteError naming the first bad op if the loss is not finite.

    The scan is deferred to the failure path so the hot path only checks
    one scalar.
    """
    if np.isfinite(loss.value):
        return
    op = tape.first_nonfinite() or "loss"
    raise NonFiniteError(op)


def _record(out: Var):
    stack = _tape_stack()
    if stack:
        stack[-1].nodes.append(out)
    return out


def _value(x: ArrayLike):
    return x.value if isinstance(x, Var) else x


def _needs_grad(*xs) -> bool:
    return any(isinstance(x, Var) and x.requires_grad for x in xs)


def _acc(var: Var, g, own: bool):
    """Accumulate gradient g into var. own=True means g is freshly
    allocated and may be stored without copying."""
    if not var.requires_grad:
        return
    if var.grad is None:
        if own or not isinstance(g, np.ndarray):
            var.grad = g
        else:
            var.grad = g.copy()
    else:
        if isinstance(var.grad, np.ndarray) and var.grad.ndim > 0:
            var.grad += g
        else:
            var.grad = var.grad + g


def leaf(value: np.ndarray, requires_grad: bool = False, op: str = "leaf") -> Var:
    return Var(value, requires_grad=requires_grad, op=op)


def affine(x: ArrayLike, w: Var, b: Var) -> Var:
    """x @ w + b with x of shape (batch, in), w (in, out), b (out,)."""
    xv, wv, bv = _value(x), w.value, b.value
    out = Var(xv @ wv + bv, requires_grad=_needs_grad(x, w, b), op="affine")
    if out.requires_grad:
        def backward(g):
            if w.requires_grad:
                _acc(w, xv.T @ g, own=True)
            if b.requires_grad:
                _acc(b, g.sum(axis=0), own=True)
            if isinstance(x, Var) and x.requires_grad:
                _acc(x, g @ wv.T, own=True)
        out._backward = backward
    return _record(out)


def add(a: ArrayLike, b: ArrayLike) -> Var:
    av, bv = _value(a), _value(b)
    out = Var(av + bv, requires_grad=_needs_grad(a, b), op="add")
    if out.requires_grad:
        def backward(g):
            if isinstance(a, Var):
                _acc(a, g, own=False)
            if isinstance(b, Var):
                _acc(b, g, own=False)
        out._backward = backward
    return _record(out)


def sub(a: ArrayLike, b: ArrayLike) -> Var:
    av, bv = _value(a), _value(b)
    out = Var(av - bv, requires_grad=_needs_grad(a, b), op="sub")
    if out.requires_grad:
        def backward(g):
            if isinstance(a, Var):
                _acc(a, g, own=False)
            if isinstance(b, Var):
                _acc(b, -g, own=True)
        out._backward = backward
    return _record(out)


def mul(a: ArrayLike, b: ArrayLike) -> Var:
    """Elementwise product; operands must share a shape or be scalars."""
    av, bv = _value(a), _value(b)
    out = Var(av * bv, requires_grad=_needs_grad(a, b), op="mul")
    if out.requires_grad:
        def backward(g):
            if isinstance(a, Var):
                _acc(a, g * bv, own=True)
            if isinstance(b, Var):
                _acc(b, g * av, own=True)
        out._backward = backward
    return _record(out)


def neg(x: Var) -> Var:
    out = Var(-x.value, requires_grad=x.requires_grad, op="neg")
    if out.requires_grad:
        out._backward = lambda g: _acc(x, -g, own=True)
    return _record(out)


def scale(x: Var, c: float) -> Var:
    out = Var(x.value * c, requires_grad=x.requires_grad, op="scale")
    if out.requires_grad:
        out._backward = lambda g: _acc(x, g * c, own=True)
    return _record(out)


def leaky_relu(x: Var, slope: float = 0.01) -> Var:
    xv = x.value
    out = Var(np.where(xv > 0.0, xv, slope * xv), requires_grad=x.requires_grad, op="leaky_relu")
    if out.requires_grad:
        out._backward = lambda g: _acc(x, g * np.where(xv > 0.0, 1.0, slope), own=True)
    return _record(out)


def tanh(x: Var) -> Var:
    t = np.tanh(x.value)
    out = Var(t, requires_grad=x.requires_grad, op="tanh")
    if out.requires_grad:
        out._backward = lambda g: _acc(x, g * (1.0 - t * t), own=True)
    return _record(out)


def exp(x: Var) -> Var:
    e = np.exp(x.value)
    out = Var(e, requires_grad=x.requires_grad, op="exp")
    if out.requires_grad:
        out._backward = lambda g: _acc(x, g * e, own=True)
    return _record(out)


def log(x: Var) -> Var:
    out = Var(np.log(x.value), requires_grad=x.requires_grad, op="log")
    if out.requires_grad:
        out._backward = lambda g: _acc(x, g / x.value, own=True)
    return _record(out)


def square(x: Var) -> Var:
    out = Var(x.value * x.value, requires_grad=x.requires_grad, op="square")
    if out.requires_grad:
        out._backward = lambda g: _acc(x, g * (2.0 * x.value), own=True)
    return _record(out)


def softplus(x: Var) -> Var:
    out = Var(np.logaddexp(0.0, x.value), requires_grad=x.requires_grad, op="softplus")
    if out.requires_grad:
        # sigmoid via tanh keeps large negative inputs stable
        out._backward = lambda g: _acc(x, g * (0.5 * (1.0 + np.tanh(0.5 * x.value))), own=True)
    return _record(out)


def clamp(x: Var, lo: float, hi: float) -> Var:
    xv = x.value
    out = Var(np.clip(xv, lo, hi), requires_grad=x.requires_grad, op="clamp")
    if out.requires_grad:
        out._backward = lambda g: _acc(x, g * ((xv >= lo) & (xv <= hi)), own=True)
    return _record(out)


def concat_cols(parts: Sequence[ArrayLike]) -> Var:
    """Column-wise concatenation of (batch, d_k) blocks."""
    values = [_value(p) for p in parts]
    out = Var(np.concatenate(values, axis=1), requires_grad=_needs_grad(*parts), op="concat_cols")
    if out.requires_grad:
        offsets = np.cumsum([0] + [v.shape[1] for v in values])

        def backward(g):
            for part, a, b in zip(parts, offsets[:-1], offsets[1:]):
                if isinstance(part, Var) and part.requires_grad:
                    _acc(part, g[:, a:b], own=False)
        out._backward = backward
    return _record(out)


def slice_cols(x: Var, start: int, stop: int) -> Var:
    out = Var(x.value[:, start:stop], requires_grad=x.requires_grad, op="slice_cols")
    if out.requires_grad:
        def backward(g):
            full = np.zeros_like(x.value)
            full[:, start:stop] = g
            _acc(x, full, own=True)
        out._backward = backward
    return _record(out)


def row_sum(x: Var) -> Var:
    """(batch, d) -> (batch,) sum over components."""
    out = Var(x.value.sum(axis=1), requires_grad=x.requires_grad, op="row_sum")
    if out.requires_grad:
        d = x.value.shape[1]
        out._backward = lambda g: _acc(x, np.repeat(g[:, None], d, axis=1), own=True)
    return _record(out)


def sum_all(x: Var) -> Var:
    out = Var(np.float64(x.value.sum()), requires_grad=x.requires_grad, op="sum")
    if out.requires_grad:
        out._backward = lambda g: _acc(x, np.full_like(x.value, g), own=True)
    return _record(out)


def mean_all(x: Var) -> Var:
    out = Var(np.float64(x.value.mean()), requires_grad=x.requires_grad, op="mean")
    if out.requires_grad:
        n = x.value.size
        out._backward = lambda g: _acc(x, np.full_like(x.value, g / n), own=True)
    return _record(out)


def gaussian_logpdf(u: ArrayLike, mu: ArrayLike, sigma: ArrayLike) -> Var:
    """Elementwise log N(u; mu, sigma^2). Fused so the three partials are
    computed directly rather than through log/exp/square chains."""
    uv, mv, sv = _value(u), _value(mu), _value(sigma)
    z = (uv - mv) / sv
    out = Var(
        -0.5 * LOG_2PI - np.log(sv) - 0.5 * z * z,
        requires_grad=_needs_grad(u, mu, sigma),
        op="gaussian_logpdf",
    )
    if out.requires_grad:
        def backward(g):
            if isinstance(u, Var) and u.requires_grad:
                _acc(u, g * (-z / sv), own=True)
            if isinstance(mu, Var) and mu.requires_grad:
                _acc(mu, g * (z / sv), own=True)
            if isinstance(sigma, Var) and sigma.requires_grad:
                _acc(sigma, g * ((z * z - 1.0) / sv), own=True)
        out._backward = backward
    return _record(out)
