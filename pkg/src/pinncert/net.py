"""Fully connected tanh network with exact x-derivatives up to second order.

The forward pass carries ``(value, d/dx, d2/dx2)`` through every layer.
:meth:`Network.grad_theta` runs the reverse pass over that computation,
so gradients of any linear combination of ``N``, ``N'`` and ``N''`` with
respect to the parameters come out exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sample import make_rng

INIT_STREAM = 0
_MAGIC = b"PINNNET1"


@dataclass(frozen=True)
class Jet2:
    """Second-order Taylor data of a function of ``x`` at one or more points."""

    value: np.ndarray
    d1: np.ndarray
    d2: np.ndarray

    def __iter__(self):
        return iter((self.value, self.d1, self.d2))

    def __add__(self, other):
        if isinstance(other, Jet2):
            return Jet2(self.value + other.value, self.d1 + other.d1, self.d2 + other.d2)
        return Jet2(self.value + other, self.d1, self.d2)

    __radd__ = __add__

    def __neg__(self):
        return Jet2(-self.value, -self.d1, -self.d2)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet2):
            return Jet2(
                self.value * other.value,
                self.d1 * other.value + self.value * other.d1,
                self.d2 * other.value + 2.0 * self.d1 * other.d1 + self.value * other.d2,
            )
        return Jet2(self.value * other, self.d1 * other, self.d2 * other)

    __rmul__ = __mul__

    def compose(self, f, df, d2f):
        """Chain rule for ``g(self)`` given ``g, g', g''`` evaluated at ``self.value``."""
        return Jet2(f, df * self.d1, d2f * self.d1**2 + df * self.d2)

    def tanh(self):
        s = np.tanh(self.value)
        ds = 1.0 - s * s
        return self.compose(s, ds, -2.0 * s * ds)

    @classmethod
    def variable(cls, x):
        x = np.asarray(x, dtype=float)
        return cls(x, np.ones_like(x), np.zeros_like(x))

    @classmethod
    def constant(cls, c, like):
        like = np.asarray(like, dtype=float)
        return cls(np.full_like(like, c), np.zeros_like(like), np.zeros_like(like))


def param_count(sizes) -> int:
    return sum((a + 1) * b for a, b in zip(sizes[:-1], sizes[1:]))


class Network:
    """``N(x; theta)`` with layer sizes ``[1, W, ..., W, 1]``.

    Hidden layers use tanh, the output layer is affine.  ``theta`` is a
    flat float64 vector; each layer stores its weight matrix (row-major,
    shape ``(fan_out, fan_in)``) followed by its bias.
    """

    def __init__(self, sizes, theta: np.ndarray, seed: int | None = None):
        sizes = [int(s) for s in sizes]
        if len(sizes) < 2 or sizes[0] != 1 or sizes[-1] != 1:
            raise ValueError(f"layer sizes must start and end with 1, got {sizes}")
        theta = np.array(theta, dtype=float)
        if theta.shape != (param_count(sizes),):
            raise ValueError(f"expected {param_count(sizes)} parameters, got {theta.shape}")
        self.sizes = sizes
        self.theta = theta
        self.seed = seed

    @property
    def n_params(self) -> int:
        return self.theta.size

    def copy(self) -> Network:
        return Network(self.sizes, self.theta.copy(), self.seed)

    def layers(self, theta: np.ndarray | None = None):
        """Views ``(W, b)`` into ``theta`` (default: the network's own)."""
        theta = self.theta if theta is None else theta
        out, k = [], 0
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            w = theta[k:k + fan_in * fan_out].reshape(fan_out, fan_in)
            k += fan_in * fan_out
            out.append((w, theta[k:k + fan_out]))
            k += fan_out
        return out

    @classmethod
    def from_layers(cls, layers, seed=None) -> Network:
        sizes = [np.shape(layers[0][0])[1]] + [np.shape(w)[0] for w, _ in layers]
        theta = np.concatenate([np.concatenate([np.ravel(w), np.ravel(b)]) for w, b in layers])
        return cls(sizes, theta, seed)

    # -- evaluation --------------------------------------------------------

    def __call__(self, x) -> np.ndarray:
        return self.forward(x)

    def forward(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        a = x.reshape(-1, 1)
        layers = self.layers()
        for w, b in layers[:-1]:
            a = np.tanh(a @ w.T + b)
        w, b = layers[-1]
        return (a @ w.T + b).reshape(x.shape)

    def forward_jet(self, x) -> Jet2:
        jet, _ = self._forward(x)
        return jet

    def _forward(self, x):
        x = np.asarray(x, dtype=float)
        shape = x.shape
        a0 = x.reshape(-1, 1)
        a1 = np.ones_like(a0)
        a2 = np.zeros_like(a0)
        layers = self.layers()
        cache = []
        for w, b in layers[:-1]:
            z0 = a0 @ w.T + b
            z1 = a1 @ w.T
            z2 = a2 @ w.T
            s = np.tanh(z0)
            ds = 1.0 - s * s
            d2s = -2.0 * s * ds
            cache.append((a0, a1, a2, z1, z2, s, ds, d2s))
            a0, a1, a2 = s, ds * z1, d2s * z1 * z1 + ds * z2
        w, b = layers[-1]
        cache.append((a0, a1, a2))
        jet = Jet2((a0 @ w.T + b).reshape(shape), (a1 @ w.T).reshape(shape), (a2 @ w.T).reshape(shape))
        return jet, cache

    def grad_theta(self, x, weights) -> np.ndarray:
        """Gradient of ``sum_i (w0 N + w1 N' + w2 N'')(x_i)`` with respect to theta.

        ``weights`` is a triple of scalars or arrays broadcastable to ``x``.
        """
        _, cache = self._forward(x)
        return self._backward(cache, np.shape(np.asarray(x)), weights)

    def _backward(self, cache, shape, weights) -> np.ndarray:
        n = int(np.prod(shape)) if shape else 1
        g0, g1, g2 = (np.broadcast_to(np.asarray(w, dtype=float), shape).reshape(n, 1) for w in weights)
        grad = np.zeros_like(self.theta)
        grads = self.layers(grad)
        layers = self.layers()

        a0, a1, a2 = cache[-1]
        w, _ = layers[-1]
        gw, gb = grads[-1]
        gw += g0.T @ a0 + g1.T @ a1 + g2.T @ a2
        gb += g0.sum(axis=0)
        ga0, ga1, ga2 = g0 @ w, g1 @ w, g2 @ w

        for li in range(len(layers) - 2, -1, -1):
            a0, a1, a2, z1, z2, s, ds, d2s = cache[li]
            d3s = -2.0 * ds * ds + 4.0 * s * s * ds
            gz2 = ga2 * ds
            gz1 = ga1 * ds + ga2 * 2.0 * d2s * z1
            gz0 = ga0 * ds + ga1 * d2s * z1 + ga2 * (d3s * z1 * z1 + d2s * z2)
            w, _ = layers[li]
            gw, gb = grads[li]
            gw += gz0.T @ a0 + gz1.T @ a1 + gz2.T @ a2
            gb += gz0.sum(axis=0)
            if li:
                ga0, ga1, ga2 = gz0 @ w, gz1 @ w, gz2 @ w
        return grad

    # -- checkpoints -------------------------------------------------------

    def to_bytes(self) -> bytes:
        seed = -1 if self.seed is None else int(self.seed)
        header = _MAGIC + struct.pack("<Iq", len(self.sizes), seed)
        header += struct.pack(f"<{len(self.sizes)}I", *self.sizes)
        return header + self.theta.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> Network:
        if blob[:8] != _MAGIC:
            raise ValueError("not a network checkpoint")
        n_sizes, seed = struct.unpack_from("<Iq", blob, 8)
        off = 8 + struct.calcsize("<Iq")
        sizes = struct.unpack_from(f"<{n_sizes}I", blob, off)
        off += 4 * n_sizes
        theta = np.frombuffer(blob, dtype="<f8", offset=off).astype(float)
        return cls(sizes, theta, None if seed < 0 else seed)

    def save(self, path) -> None:
        Path(path).write_bytes(self.to_bytes())

    @classmethod
    def load(cls, path) -> Network:
        return cls.from_bytes(Path(path).read_bytes())


def init(seed: int, hidden_layers: int = 2, width: int = 32, zero: bool = False) -> Network:
    """Random network: weights and biases uniform on ``±1/sqrt(fan_in)``."""
    if hidden_layers < 1 or width < 1:
        raise ValueError("need at least one hidden layer of positive width")
    sizes = [1] + [width] * hidden_layers + [1]
    if zero:
        return Network(sizes, np.zeros(param_count(sizes)), seed)
    rng = make_rng(seed, INIT_STREAM)
    parts = []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        parts.append(rng.uniform(-bound, bound, size=(fan_in + 1) * fan_out))
    return Network(sizes, np.concatenate(parts), seed)
