"""Minimal dense NN kernels with explicit forward/backward passes.

Everything trains in float64 so that central finite differences can
verify every backward pass to tight tolerances (see :func:`grad_check`).
There is deliberately no autodiff: each layer exposes a hand-derived
backward, and the model code wires them together.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

ACTIVATIONS = ("leaky_relu", "relu", "sigmoid")


class NonFiniteError(FloatingPointError):
    """NaN or Inf detected at a layer boundary."""


@dataclass
class ParamTensor:
    """A trainable value with its gradient accumulator."""

    name: str
    value: np.ndarray
    grad: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.value = np.asarray(self.value, dtype=np.float64)
        if self.grad is None:
            self.grad = np.zeros_like(self.value)
        assert self.grad.shape == self.value.shape

    def zero_grad(self) -> None:
        self.grad.fill(0.0)


def glorot_uniform(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def _check_finite(x: np.ndarray, where: str) -> np.ndarray:
    if not np.all(np.isfinite(x)):
        raise NonFiniteError(f"non-finite values in {where}")
    return x


def linear_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """x @ w + b with the bias broadcast over rows."""
    if x.shape[1] != w.shape[0] or w.shape[1] != b.shape[0]:
        raise ValueError(f"shape mismatch in linear: {x.shape} @ {w.shape} + {b.shape}")
    return _check_finite(x @ w + b, "linear output")


def linear_backward(x: np.ndarray, w: np.ndarray, d_out: np.ndarray):
    """Gradients (d_x, d_w, d_b) for the linear map above."""
    return d_out @ w.T, x.T @ d_out, d_out.sum(axis=0)


@dataclass(frozen=True)
class Activation:
    """Elementwise nonlinearity with its derivative."""

    kind: str = "leaky_relu"
    slope: float = 0.2  # leaky_relu only

    def __post_init__(self):
        if self.kind not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.kind!r}")

    def forward(self, x: np.ndarray) -> np.ndarray:
        if self.kind == "relu":
            return np.maximum(x, 0.0)
        if self.kind == "leaky_relu":
            return np.where(x >= 0.0, x, self.slope * x)
        return expit(x)

    def backward(self, d_out: np.ndarray, x: np.ndarray) -> np.ndarray:
        """d_out times the derivative evaluated at the forward input x."""
        if self.kind == "relu":
            return d_out * (x > 0.0)
        if self.kind == "leaky_relu":
            return d_out * np.where(x >= 0.0, 1.0, self.slope)
        s = expit(x)
        return d_out * s * (1.0 - s)


def softmax_rows(scores: np.ndarray) -> np.ndarray:
    """Row-wise softmax, computed with the max-shift for stability."""
    shifted = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def softmax_backward(d_out: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """Backward through a row-wise softmax given its output probabilities."""
    dot = (d_out * probs).sum(axis=1, keepdims=True)
    return probs * (d_out - dot)


def cross_entropy(logits: np.ndarray, onehot: np.ndarray, mask: np.ndarray):
    """Mean negative log-likelihood over the masked rows.

    Returns (loss, gradient); the gradient is (softmax - onehot) / |mask|
    on masked rows and zero elsewhere.
    """
    mask = np.asarray(mask, dtype=np.int64)
    if mask.size == 0:
        raise ValueError("cross_entropy needs a nonempty mask")
    z = logits[mask]
    z = z - z.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1, keepdims=True))
    log_probs = z - log_norm
    loss = -(onehot[mask] * log_probs).sum() / mask.size
    grad = np.zeros_like(logits)
    grad[mask] = (np.exp(log_probs) - onehot[mask]) / mask.size
    return float(loss), grad


def dropout(x: np.ndarray, rate: float, rng: np.random.Generator | None,
            training: bool):
    """Inverted dropout. Returns (output, mask); mask is None when inactive."""
    if not 0.0 <= rate < 1.0:
        raise ValueError(f"dropout rate must lie in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x, None
    keep = 1.0 - rate
    mask = (rng.random(x.shape) < keep) / keep
    return x * mask, mask


class Adam:
    """Bias-corrected Adam with optional L2 weight decay folded into grads."""

    def __init__(self, params: list[ParamTensor], lr: float = 0.001,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8,
                 weight_decay: float = 0.0):
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.weight_decay = weight_decay
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in params]
        self.v = [np.zeros_like(p.value) for p in params]

    def step(self) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            if self.weight_decay:
                g = g + self.weight_decay * p.value
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            m_hat = m / (1.0 - b1 ** self.t)
            v_hat = v / (1.0 - b2 ** self.t)
            p.value -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class Sgd:
    """Plain gradient descent, kept for optimizer-parity experiments."""

    def __init__(self, params: list[ParamTensor], lr: float = 0.001,
                 weight_decay: float = 0.0):
        self.params = params
        self.lr = lr
        self.weight_decay = weight_decay
        self.t = 0

    def step(self) -> None:
        self.t += 1
        for p in self.params:
            g = p.grad
            if self.weight_decay:
                g = g + self.weight_decay * p.value
            p.value -= self.lr * g


def grad_check(loss_fn, params: list[ParamTensor], h: float = 1e-5,
               max_coords: int = 64, rng: np.random.Generator | None = None) -> float:
    """Compare populated analytic gradients against central differences.

    ``loss_fn`` must deterministically evaluate the loss at the current
    parameter values (dropout off, fixed inputs); ``params`` must already
    carry the analytic gradients for that same point. A sampled subset of
    coordinates per parameter is perturbed. Returns the maximum error
    |analytic - numeric| / max(1, |analytic|, |numeric|).
    """
    rng = rng or np.random.default_rng(0)
    worst = 0.0
    for p in params:
        flat_v = p.value.reshape(-1)
        flat_g = p.grad.reshape(-1)
        idx = np.arange(flat_v.size)
        if flat_v.size > max_coords:
            idx = rng.choice(flat_v.size, size=max_coords, replace=False)
        for i in idx:
            saved = flat_v[i]
            flat_v[i] = saved + h
            up = loss_fn()
            flat_v[i] = saved - h
            down = loss_fn()
            flat_v[i] = saved
            numeric = (up - down) / (2.0 * h)
            err = abs(flat_g[i] - numeric) / max(1.0, abs(flat_g[i]), abs(numeric))
            worst = max(worst, err)
    return worst


class Linear:
    """Linear layer owning its weight/bias parameters."""

    def __init__(self, rng: np.random.Generator, in_dim: int, out_dim: int, name: str):
        self.w = ParamTensor(f"{name}.w", glorot_uniform(rng, in_dim, out_dim))
        self.b = ParamTensor(f"{name}.b", np.zeros(out_dim))
        self._x = None

    @property
    def params(self) -> list[ParamTensor]:
        return [self.w, self.b]

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return linear_forward(x, self.w.value, self.b.value)

    def backward(self, d_out: np.ndarray) -> np.ndarray:
        d_x, d_w, d_b = linear_backward(self._x, self.w.value, d_out)
        self.w.grad += d_w
        self.b.grad += d_b
        return d_x


class Mlp:
    """Stack of linear layers with activation + dropout between them.

    ``depth`` = 1 is a single linear map (no nonlinearity), matching the
    linear-model baselines.
    """

    def __init__(self, rng: np.random.Generator, in_dim: int, hidden: int,
                 out_dim: int, depth: int, activation: Activation,
                 dropout_rate: float = 0.0, name: str = "mlp"):
        if depth < 1:
            raise ValueError("mlp depth must be >= 1")
        dims = [in_dim] + [hidden] * (depth - 1) + [out_dim]
        self.layers = [Linear(rng, dims[i], dims[i + 1], f"{name}.{i}")
                       for i in range(depth)]
        self.activation = activation
        self.dropout_rate = dropout_rate
        self._cache = None

    @property
    def params(self) -> list[ParamTensor]:
        return [p for layer in self.layers for p in layer.params]

    def forward(self, x: np.ndarray, training: bool = False,
                rng: np.random.Generator | None = None) -> np.ndarray:
        cache = []
        h = x
        for i, layer in enumerate(self.layers):
            h = layer.forward(h)
            if i < len(self.layers) - 1:
                pre = h
                h = self.activation.forward(pre)
                h, mask = dropout(h, self.dropout_rate, rng, training)
                cache.append((pre, mask))
        self._cache = cache
        return h

    def backward(self, d_out: np.ndarray) -> np.ndarray:
        d_h = d_out
        for i in range(len(self.layers) - 1, -1, -1):
            if i < len(self.layers) - 1:
                pre, mask = self._cache[i]
                if mask is not None:
                    d_h = d_h * mask
                d_h = self.activation.backward(d_h, pre)
            d_h = self.layers[i].backward(d_h)
        return d_h


# ---------------------------------------------------------------------------
# Checkpoint file: magic "GMCK", named f64 parameter blobs, optional optimizer
# state (step counter plus first/second moments in parameter order).
# ---------------------------------------------------------------------------

_CK_MAGIC = b"GMCK"
_CK_VERSION = 1


class CheckpointFormatError(Exception):
    pass


def _write_array(f, a: np.ndarray) -> None:
    a = np.ascontiguousarray(a, dtype="<f8")
    f.write(struct.pack("<B", a.ndim))
    for d in a.shape:
        f.write(struct.pack("<Q", d))
    f.write(a.tobytes())


def _read_array(buf: memoryview, off: int):
    (ndim,) = struct.unpack_from("<B", buf, off)
    off += 1
    shape = []
    for _ in range(ndim):
        (d,) = struct.unpack_from("<Q", buf, off)
        off += 8
        shape.append(d)
    count = int(np.prod(shape)) if shape else 1
    a = np.frombuffer(buf, dtype="<f8", count=count, offset=off).reshape(shape).copy()
    return a, off + count * 8


def save_checkpoint(path, params: list[ParamTensor], optimizer: Adam | None = None) -> None:
    # only moment-carrying optimizers (Adam) have state worth persisting
    has_opt = optimizer is not None and hasattr(optimizer, "m")
    with open(path, "wb") as f:
        f.write(_CK_MAGIC)
        f.write(struct.pack("<IBI", _CK_VERSION, 1 if has_opt else 0, len(params)))
        for p in params:
            name = p.name.encode("utf-8")
            f.write(struct.pack("<H", len(name)))
            f.write(name)
            _write_array(f, p.value)
        if has_opt:
            f.write(struct.pack("<Q", optimizer.t))
            for m, v in zip(optimizer.m, optimizer.v):
                _write_array(f, m)
                _write_array(f, v)


def load_checkpoint(path):
    """Returns (name -> value dict, optimizer state dict or None)."""
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 13 or raw[:4] != _CK_MAGIC:
        raise CheckpointFormatError(f"{path}: not a checkpoint file")
    version, has_opt, n_params = struct.unpack_from("<IBI", raw, 4)
    if version != _CK_VERSION:
        raise CheckpointFormatError(f"{path}: unsupported checkpoint version {version}")
    buf = memoryview(raw)
    off = 13
    values: dict[str, np.ndarray] = {}
    order: list[str] = []
    for _ in range(n_params):
        (name_len,) = struct.unpack_from("<H", buf, off)
        off += 2
        name = bytes(buf[off:off + name_len]).decode("utf-8")
        off += name_len
        values[name], off = _read_array(buf, off)
        order.append(name)
    opt_state = None
    if has_opt:
        (t,) = struct.unpack_from("<Q", buf, off)
        off += 8
        moments = {}
        for name in order:
            m, off = _read_array(buf, off)
            v, off = _read_array(buf, off)
            moments[name] = (m, v)
        opt_state = {"t": t, "moments": moments}
    return values, opt_state


def restore_params(params: list[ParamTensor], values: dict[str, np.ndarray]) -> None:
    """Copy checkpointed values into an existing parameter list by name."""
    for p in params:
        if p.name not in values:
            raise CheckpointFormatError(f"checkpoint missing parameter {p.name!r}")
        if values[p.name].shape != p.value.shape:
            raise CheckpointFormatError(
                f"checkpoint parameter {p.name!r} has shape {values[p.name].shape}, "
                f"model expects {p.value.shape}")
        p.value[...] = values[p.name]
