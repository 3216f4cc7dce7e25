"""Feed-forward networks over a single flat float64 parameter vector.

The flat layout keeps optimizer state, EMA tracking, serialization and
gradient collection trivial: every consumer sees one contiguous array.
Layer weights are reshaped views into it, so in-place optimizer updates
are immediately visible to forward passes.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from . import tape
from .tape import Var

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
LEAKY_SLOPE = 0.01

HEAD_LINEAR = "linear"
HEAD_GAUSSIAN = "gaussian"

_MAGIC = b"TDOMMLP1"
_HEAD_CODES = {HEAD_LINEAR: 0, HEAD_GAUSSIAN: 1}
_HEAD_NAMES = {v: k for k, v in _HEAD_CODES.items()}


class Mlp:
    """MLP with leaky-ReLU hidden layers and a linear or gaussian head.

    A gaussian head outputs (mu, sigma) for a diagonal Gaussian; its raw
    final layer is twice the output width and log-sigma is clamped to
    [LOG_STD_MIN, LOG_STD_MAX] before exponentiation.
    """

    def __init__(
        self,
        in_dim: int,
        out_dim: int,
        head: str = HEAD_LINEAR,
        hidden: Sequence[int] = (256, 256),
        params: np.ndarray | None = None,
    ):
        if head not in _HEAD_CODES:
            raise ValueError(f"unknown head kind: {head!r}")
        self.in_dim = int(in_dim)
        self.out_dim = int(out_dim)
        self.head = head
        raw_out = 2 * out_dim if head == HEAD_GAUSSIAN else out_dim
        self.sizes = (self.in_dim, *[int(h) for h in hidden], raw_out)

        self._layout = []
        offset = 0
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            w0, w1 = offset, offset + fan_in * fan_out
            b0, b1 = w1, w1 + fan_out
            self._layout.append((w0, w1, b0, b1, fan_in, fan_out))
            offset = b1
        self.n_params = offset

        if params is None:
            self.params = np.zeros(self.n_params, dtype=np.float64)
        else:
            params = np.asarray(params, dtype=np.float64)
            if params.shape != (self.n_params,):
                raise ValueError(
                    f"parameter vector has length {params.shape}, expected ({self.n_params},)"
                )
            self.params = params.copy()

    # -- parameter access -------------------------------------------------

    def init_params(self, rng: np.random.Generator) -> None:
        """Uniform +-1/sqrt(fan_in) init for each layer's weights and bias."""
        for w0, w1, b0, b1, fan_in, _ in self._layout:
            bound = 1.0 / np.sqrt(fan_in)
            self.params[w0:b1] = rng.uniform(-bound, bound, b1 - w0)

    def layer_views(self, flat: np.ndarray):
        """(W, b) array views of a flat vector laid out like self.params."""
        out = []
        for w0, w1, b0, b1, fan_in, fan_out in self._layout:
            out.append((flat[w0:w1].reshape(fan_in, fan_out), flat[b0:b1]))
        return out

    def zeros_grad(self) -> np.ndarray:
        return np.zeros(self.n_params, dtype=np.float64)

    def copy(self) -> "Mlp":
        hidden = self.sizes[1:-1]
        return Mlp(self.in_dim, self.out_dim, head=self.head, hidden=hidden, params=self.params)

    # -- forward -----------------------------------------------------------

    def forward(
        self,
        x: Union[Var, np.ndarray],
        trainable: bool = False,
        grad_out: np.ndarray | None = None,
    ):
        """Run the network on a (batch, in_dim) input.

        trainable=True makes the parameters differentiable leaves; when
        grad_out is given their gradients accumulate directly into that
        flat buffer (caller supplies it zeroed). Returns a Var for a
        linear head or a (mu, sigma) Var pair for a gaussian head.
        """
        value = x.value if isinstance(x, Var) else x
        if value.ndim != 2 or value.shape[1] != self.in_dim:
            raise ValueError(
                f"input of shape {value.shape} does not match network input width {self.in_dim}"
            )
        h = x
        last = len(self._layout) - 1
        for i, (w0, w1, b0, b1, fan_in, fan_out) in enumerate(self._layout):
            w = tape.leaf(self.params[w0:w1].reshape(fan_in, fan_out), requires_grad=trainable, op="W")
            b = tape.leaf(self.params[b0:b1], requires_grad=trainable, op="b")
            if grad_out is not None and trainable:
                w.grad = grad_out[w0:w1].reshape(fan_in, fan_out)
                b.grad = grad_out[b0:b1]
            h = tape.affine(h, w, b)
            if i != last:
                h = tape.leaky_relu(h, LEAKY_SLOPE)
        if self.head == HEAD_LINEAR:
            return h
        mu = tape.slice_cols(h, 0, self.out_dim)
        log_std = tape.clamp(tape.slice_cols(h, self.out_dim, 2 * self.out_dim), LOG_STD_MIN, LOG_STD_MAX)
        return mu, tape.exp(log_std)

    def forward_values(self, x: np.ndarray):
        """Forward pass returning plain arrays (no gradient tracking)."""
        out = self.forward(x, trainable=False)
        if self.head == HEAD_LINEAR:
            return out.value
        mu, sigma = out
        return mu.value, sigma.value

    # -- serialization ------------------------------------------------------
    # Layout: magic, u32 width count, u32 widths (raw layer sizes), u8 head
    # kind, u64 parameter count, then the flat float64 little-endian array.

    def to_bytes(self) -> bytes:
        header = bytearray()
        header += _MAGIC
        header += struct.pack("<I", len(self.sizes))
        header += struct.pack(f"<{len(self.sizes)}I", *self.sizes)
        header += struct.pack("<B", _HEAD_CODES[self.head])
        header += struct.pack("<Q", self.n_params)
        return bytes(header) + self.params.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "Mlp":
        if blob[:8] != _MAGIC:
            raise ValueError("bad magic: not a serialized network")
        off = 8
        (n_sizes,) = struct.unpack_from("<I", blob, off)
        off += 4
        sizes = struct.unpack_from(f"<{n_sizes}I", blob, off)
        off += 4 * n_sizes
        (head_code,) = struct.unpack_from("<B", blob, off)
        off += 1
        (n_params,) = struct.unpack_from("<Q", blob, off)
        off += 8
        head = _HEAD_NAMES.get(head_code)
        if head is None:
            raise ValueError(f"unknown head code {head_code}")
        raw_out = sizes[-1]
        out_dim = raw_out // 2 if head == HEAD_GAUSSIAN else raw_out
        params = np.frombuffer(blob, dtype="<f8", count=n_params, offset=off)
        net = cls(sizes[0], out_dim, head=head, hidden=sizes[1:-1], params=np.asarray(params))
        return net

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path: str | Path) -> "Mlp":
        return cls.from_bytes(Path(path).read_bytes())
