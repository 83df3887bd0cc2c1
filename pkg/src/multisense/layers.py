"""Layer kinds used by the recognition architectures.

Every layer works on batches: the leading axis is the sample axis and the
per-sample shapes follow it (``(N, C, H, W)`` for images, ``(N, D)`` for
vectors). ``forward`` returns the output together with whatever the layer
needs to run ``backward``; ``backward`` returns one gradient per input and
*accumulates* parameter gradients into ``self.grads`` so a layer shared by
several graph nodes sums its contributions.
"""
from __future__ import annotations

from typing import Any, Sequence

import numpy as np

from .errors import ArgumentError, DimensionError
from .tensor import DTYPE

Shape = tuple[int, ...]


class Layer:
    kind = "layer"
    n_inputs: int | None = 1
    # set by the graph when nobody consumes this layer's input gradient
    skip_input_grad = False

    def __init__(self) -> None:
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def out_shape(self, *in_shapes: Shape) -> Shape:
        raise NotImplementedError

    def forward(self, *xs: np.ndarray) -> tuple[np.ndarray, Any]:
        raise NotImplementedError

    def backward(self, grad: np.ndarray, cache: Any) -> list[np.ndarray | None]:
        raise NotImplementedError

    def zero_grad(self) -> None:
        self.grads = {name: np.zeros_like(p) for name, p in self.params.items()}

    def describe(self) -> str:
        """Kind plus parameter shapes; feeds the architecture fingerprint."""
        shapes = ",".join(f"{k}{list(v.shape)}" for k, v in self.params.items())
        return f"{self.kind}({shapes})"

    def _accumulate(self, name: str, g: np.ndarray) -> None:
        if name in self.grads:
            self.grads[name] += g
        else:
            self.grads[name] = g.copy()


def he_normal(rng: np.random.Generator, shape: Sequence[int], fan_in: int, gain: float = 2.0) -> np.ndarray:
    return rng.standard_normal(shape) * np.sqrt(gain / fan_in)


def _im2col(x: np.ndarray) -> np.ndarray:
    """(N, C, H, W) -> (C*9, N*H*W) patches of the zero-padded input, rows ordered (c, ky, kx)."""
    n, c, h, w = x.shape
    xp = np.zeros((c, n, h + 2, w + 2), dtype=DTYPE)
    xp[:, :, 1:-1, 1:-1] = x.transpose(1, 0, 2, 3)
    cols = np.empty((c, 3, 3, n, h, w), dtype=DTYPE)
    for ky in range(3):
        for kx in range(3):
            cols[:, ky, kx] = xp[:, :, ky:ky + h, kx:kx + w]
    return cols.reshape(c * 9, n * h * w)


class Conv2D(Layer):
    """3x3, stride 1, zero 'same' padding cross-correlation with per-channel bias.

    weight: (out_channels, in_channels, 3, 3); bias: (out_channels,)
    """

    kind = "conv2d"

    def __init__(self, in_channels: int, out_channels: int, rng: np.random.Generator | None = None):
        super().__init__()
        if in_channels <= 0 or out_channels <= 0:
            raise ArgumentError("channel counts must be positive")
        self.in_channels = in_channels
        self.out_channels = out_channels
        fan_in = in_channels * 9
        w = he_normal(rng, (out_channels, in_channels, 3, 3), fan_in) if rng is not None else \
            np.zeros((out_channels, in_channels, 3, 3))
        self.params = {"weight": w.astype(DTYPE), "bias": np.zeros(out_channels, dtype=DTYPE)}

    def out_shape(self, in_shape: Shape) -> Shape:
        if len(in_shape) != 3 or in_shape[0] != self.in_channels:
            raise DimensionError(f"conv2d expects ({self.in_channels}, H, W), got {in_shape}")
        return (self.out_channels, in_shape[1], in_shape[2])

    def forward(self, x):
        if x.ndim != 4 or x.shape[1] != self.in_channels:
            raise DimensionError(f"conv2d expects (N, {self.in_channels}, H, W), got {x.shape}")
        n, c, h, w = x.shape
        cols = _im2col(x)
        wmat = self.params["weight"].reshape(self.out_channels, c * 9)
        out = wmat @ cols + self.params["bias"][:, None]
        out = out.reshape(self.out_channels, n, h, w).transpose(1, 0, 2, 3)
        return np.ascontiguousarray(out), (cols, x.shape)

    def backward(self, grad, cache):
        cols, (n, c, h, w) = cache
        o = self.out_channels
        g = grad.transpose(1, 0, 2, 3).reshape(o, n * h * w)
        self._accumulate("weight", (g @ cols.T).reshape(o, c, 3, 3))
        self._accumulate("bias", g.sum(axis=1))
        if self.skip_input_grad:
            return [None]
        # input gradient = same-padded correlation of grad with the spatially
        # flipped, channel-transposed kernel
        flipped = self.params["weight"][:, :, ::-1, ::-1].transpose(1, 0, 2, 3).reshape(c, o * 9)
        dx = (flipped @ _im2col(grad)).reshape(c, n, h, w).transpose(1, 0, 2, 3)
        return [np.ascontiguousarray(dx)]


class MaxPool2x2(Layer):
    """Non-overlapping 2x2 max pooling. Odd trailing rows/columns are dropped.

    Gradient goes to the first maximum in row-major scan order of each window.
    """

    kind = "maxpool2x2"

    def out_shape(self, in_shape: Shape) -> Shape:
        if len(in_shape) != 3 or in_shape[1] < 2 or in_shape[2] < 2:
            raise DimensionError(f"maxpool2x2 needs (C, H>=2, W>=2), got {in_shape}")
        c, h, w = in_shape
        return (c, h // 2, w // 2)

    def forward(self, x):
        n, c, h, w = x.shape
        if h < 2 or w < 2:
            raise DimensionError(f"maxpool2x2 needs H, W >= 2, got {h}x{w}")
        h2, w2 = 2 * (h // 2), 2 * (w // 2)
        out = np.maximum(np.maximum(x[:, :, 0:h2:2, 0:w2:2], x[:, :, 0:h2:2, 1:w2:2]),
                         np.maximum(x[:, :, 1:h2:2, 0:w2:2], x[:, :, 1:h2:2, 1:w2:2]))
        return out, (x, out)

    def backward(self, grad, cache):
        x, out = cache
        h2, w2 = 2 * out.shape[2], 2 * out.shape[3]
        dx = np.zeros(x.shape, dtype=DTYPE)
        taken = np.zeros(out.shape, dtype=bool)
        # window positions in scan order: (0,0), (0,1), (1,0), (1,1)
        for dy, dx_ in ((0, 0), (0, 1), (1, 0), (1, 1)):
            m = (x[:, :, dy:h2:2, dx_:w2:2] == out) & ~taken
            taken |= m
            dx[:, :, dy:h2:2, dx_:w2:2] = np.where(m, grad, 0.0)
        return [dx]


class ReLU(Layer):
    kind = "relu"

    def out_shape(self, in_shape: Shape) -> Shape:
        return in_shape

    def forward(self, x):
        mask = x > 0
        return np.where(mask, x, 0.0), mask

    def backward(self, grad, mask):
        # derivative at exactly 0 is taken as 0
        return [np.where(mask, grad, 0.0)]


class Flatten(Layer):
    kind = "flatten"

    def out_shape(self, in_shape: Shape) -> Shape:
        return (int(np.prod(in_shape)),)

    def forward(self, x):
        return x.reshape(x.shape[0], -1).copy(), x.shape

    def backward(self, grad, shape):
        return [grad.reshape(shape).copy()]


class Dense(Layer):
    """Affine map ``x @ weight + bias`` with weight of shape (in_dim, out_dim)."""

    kind = "dense"

    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator | None = None, gain: float = 2.0):
        super().__init__()
        if in_dim <= 0 or out_dim <= 0:
            raise ArgumentError("dense dimensions must be positive")
        self.in_dim = in_dim
        self.out_dim = out_dim
        w = he_normal(rng, (in_dim, out_dim), in_dim, gain) if rng is not None else np.zeros((in_dim, out_dim))
        self.params = {"weight": w.astype(DTYPE), "bias": np.zeros(out_dim, dtype=DTYPE)}

    def out_shape(self, in_shape: Shape) -> Shape:
        if in_shape != (self.in_dim,):
            raise DimensionError(f"dense expects ({self.in_dim},), got {in_shape}")
        return (self.out_dim,)

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise DimensionError(f"dense expects (N, {self.in_dim}), got {x.shape}")
        return x @ self.params["weight"] + self.params["bias"], x

    def backward(self, grad, x):
        self._accumulate("weight", x.T @ grad)
        self._accumulate("bias", grad.sum(axis=0))
        return [grad @ self.params["weight"].T]


class Concat(Layer):
    """Order-preserving concatenation of flat feature vectors."""

    kind = "concat"
    n_inputs = None

    def out_shape(self, *in_shapes: Shape) -> Shape:
        if not in_shapes or any(len(s) != 1 for s in in_shapes):
            raise DimensionError(f"concat expects flat inputs, got {in_shapes}")
        return (sum(s[0] for s in in_shapes),)

    def forward(self, *xs):
        if any(x.ndim != 2 for x in xs):
            raise DimensionError(f"concat expects (N, d) inputs, got {[x.shape for x in xs]}")
        return np.concatenate(xs, axis=1), [x.shape[1] for x in xs]

    def backward(self, grad, widths):
        cuts = np.cumsum(widths)[:-1]
        return [g.copy() for g in np.split(grad, cuts, axis=1)]


class Add(Layer):
    """Elementwise sum of equally shaped inputs."""

    kind = "add"
    n_inputs = None

    def out_shape(self, *in_shapes: Shape) -> Shape:
        if not in_shapes or len(set(in_shapes)) != 1:
            raise DimensionError(f"add expects equal shapes, got {in_shapes}")
        return in_shapes[0]

    def forward(self, *xs):
        out = xs[0].copy()
        for x in xs[1:]:
            if x.shape != out.shape:
                raise DimensionError(f"add: shape {x.shape} != {out.shape}")
            out += x
        return out, len(xs)

    def backward(self, grad, k):
        return [grad.copy() for _ in range(k)]


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(logits: np.ndarray, labels) -> tuple[float, np.ndarray]:
    """Mean categorical cross-entropy of a batch of logits and its class probabilities.

    ``logits`` is (N, C) or a single (C,) vector; ``labels`` holds N class
    indices (or one index). Uses the log-sum-exp shift so large logits do not
    overflow.
    """
    logits = np.asarray(logits, dtype=DTYPE)
    single = logits.ndim == 1
    if single:
        logits = logits[None, :]
    labels = np.atleast_1d(np.asarray(labels))
    n, c = logits.shape
    if labels.shape != (n,):
        raise DimensionError(f"{labels.shape[0]} labels for {n} rows of logits")
    if np.any(labels < 0) or np.any(labels >= c):
        raise ArgumentError(f"label out of range [0, {c})")
    z = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    log_p = z[np.arange(n), labels] - log_norm
    probs = softmax(logits)
    loss = float(-log_p.mean())
    return loss, probs[0] if single else probs


def softmax_cross_entropy_grad(probs: np.ndarray, labels) -> np.ndarray:
    """Gradient of the *mean* batch loss wrt the logits: (probs - onehot) / N."""
    probs = np.asarray(probs, dtype=DTYPE)
    single = probs.ndim == 1
    p = probs[None, :] if single else probs
    labels = np.atleast_1d(np.asarray(labels))
    g = p.copy()
    g[np.arange(p.shape[0]), labels] -= 1.0
    g /= p.shape[0]
    return g[0] if single else g
