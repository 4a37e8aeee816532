"""Small dense networks with hand-written reverse mode.

Parameters of an :class:`Mlp` live in a single flat float32 buffer; layer
weights and biases are views into it. That keeps Adam, Polyak averaging and
serialization to one array operation each.
"""
from __future__ import annotations

import struct
from typing import BinaryIO, Iterable

import numpy as np

DTYPE = np.float32
LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0


class Mlp:
    """Rectifier MLP: affine+ReLU on hidden layers, affine output layer.

    Weights are stored as ``(n_in, n_out)`` so ``x @ W + b`` maps a row batch.
    Initialization is uniform in ``+-1/sqrt(fan_in)``.
    """

    def __init__(self, sizes, rng: np.random.Generator | None = None, dtype=DTYPE):
        sizes = [int(s) for s in sizes]
        if len(sizes) < 2 or min(sizes) < 1:
            raise ValueError(f"bad layer sizes {sizes}")
        self.sizes = sizes
        self.data = np.zeros(self.param_count(sizes), dtype=dtype)
        self.weights, self.biases = self._views(self.data)
        if rng is not None:
            for W, b in zip(self.weights, self.biases):
                bound = 1.0 / np.sqrt(W.shape[0])
                W[...] = rng.uniform(-bound, bound, W.shape)
                b[...] = rng.uniform(-bound, bound, b.shape)

    @staticmethod
    def param_count(sizes) -> int:
        return sum((n_in + 1) * n_out for n_in, n_out in zip(sizes[:-1], sizes[1:]))

    def _views(self, flat):
        weights, biases, pos = [], [], 0
        for n_in, n_out in zip(self.sizes[:-1], self.sizes[1:]):
            weights.append(flat[pos:pos + n_in * n_out].reshape(n_in, n_out))
            pos += n_in * n_out
            biases.append(flat[pos:pos + n_out])
            pos += n_out
        return weights, biases

    @property
    def n_in(self) -> int:
        return self.sizes[0]

    @property
    def n_out(self) -> int:
        return self.sizes[-1]

    def copy(self) -> "Mlp":
        other = Mlp(self.sizes, dtype=self.data.dtype)
        other.data[...] = self.data
        return other

    def forward(self, x, keep: bool = False):
        """Map a ``(batch, n_in)`` array; with ``keep`` also return the cache for :meth:`backward`."""
        h = np.asarray(x, dtype=self.data.dtype)
        if h.ndim != 2 or h.shape[1] != self.n_in:
            raise ValueError(f"expected input (batch, {self.n_in}), got {h.shape}")
        cache = []
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            cache.append(h)
            h = h @ W
            h += b
            if i < last:
                np.maximum(h, 0, out=h)
        return (h, cache) if keep else h

    def backward(self, cache, grad_out, input_grad: bool = True, param_grad: bool = True):
        """Reverse pass. Returns ``(flat parameter gradient or None, input gradient or None)``."""
        g = np.asarray(grad_out, dtype=self.data.dtype)
        if g.ndim != 2 or g.shape[1] != self.n_out or g.shape[0] != cache[0].shape[0]:
            raise ValueError(f"upstream gradient shape {g.shape} does not match forward pass")
        grad = np.zeros_like(self.data) if param_grad else None
        if param_grad:
            gW, gb = self._views(grad)
        for i in range(len(self.weights) - 1, -1, -1):
            h_in = cache[i]
            if param_grad:
                np.matmul(h_in.T, g, out=gW[i])
                gb[i][...] = g.sum(axis=0)
            if i == 0 and not input_grad:
                return grad, None
            g = g @ self.weights[i].T
            if i > 0:
                g = g * (h_in > 0)
        return grad, g

    def named_tensors(self, prefix: str):
        out = []
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            out.append((f"{prefix}.{i}.weight", W))
            out.append((f"{prefix}.{i}.bias", b))
        return out


class Adam:
    """Adam with bias correction over a flat parameter buffer."""

    def __init__(self, n_params: int, lr: float = 3e-4, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8, dtype=DTYPE):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(n_params, dtype=dtype)
        self.v = np.zeros(n_params, dtype=dtype)
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> None:
        """Update ``params`` in place."""
        if grad.shape != params.shape or params.shape != self.m.shape:
            raise ValueError(f"shape mismatch: params {params.shape}, grad {grad.shape}, state {self.m.shape}")
        if not np.all(np.isfinite(grad)):
            raise FloatingPointError("nonfinite gradient passed to Adam")
        self.t += 1
        self.m *= self.beta1
        self.m += (1 - self.beta1) * grad
        self.v *= self.beta2
        self.v += (1 - self.beta2) * np.square(grad)
        step_size = self.lr / (1 - self.beta1 ** self.t)
        denom = np.sqrt(self.v / (1 - self.beta2 ** self.t))
        denom += self.eps
        params -= (step_size * self.m / denom).astype(params.dtype)

    def state(self):
        return {"t": self.t, "lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps}

    def load_state(self, state, m, v):
        self.t = int(state["t"])
        self.lr, self.beta1, self.beta2, self.eps = state["lr"], state["beta1"], state["beta2"], state["eps"]
        self.m[...] = m
        self.v[...] = v


def polyak_update(target: Mlp, online: Mlp, tau: float) -> None:
    """target <- tau * online + (1 - tau) * target, in place."""
    if target.sizes != online.sizes:
        raise ValueError(f"architecture mismatch: {target.sizes} vs {online.sizes}")
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    target.data *= (1.0 - tau)
    target.data += tau * online.data


def _log_one_minus_tanh_sq(u):
    # log(1 - tanh(u)^2) = 2 * (log 2 - u - softplus(-2u)), stable for large |u|
    return 2.0 * (np.log(2.0) - u - np.logaddexp(0.0, -2.0 * u))


def squashed_gaussian_sample(mean, log_std, rng: np.random.Generator | None, deterministic: bool = False):
    """Sample a = tanh(mean + std * eps) and its log-density.

    ``log_std`` is clamped to ``[-20, 2]``. Deterministic mode returns
    ``tanh(mean)`` (the log-density is then evaluated at eps = 0).
    Returns ``(action, log_prob, aux)``; ``aux`` feeds
    :func:`squashed_gaussian_grads`.
    """
    mean = np.asarray(mean)
    raw = np.asarray(log_std)
    clamped = np.clip(raw, LOG_STD_MIN, LOG_STD_MAX)
    std = np.exp(clamped)
    if deterministic:
        eps = np.zeros_like(mean)
    else:
        eps = rng.standard_normal(mean.shape).astype(mean.dtype)
    u = mean + std * eps
    action = np.tanh(u)
    log_prob = np.sum(-0.5 * eps * eps - clamped - 0.5 * np.log(2 * np.pi) - _log_one_minus_tanh_sq(u), axis=-1)
    aux = {"eps": eps, "u": u, "std": std, "action": action,
           "in_range": (raw >= LOG_STD_MIN) & (raw <= LOG_STD_MAX)}
    return action, log_prob, aux


def squashed_gaussian_grads(aux, grad_action, grad_log_prob):
    """Reparameterized gradients w.r.t. ``(mean, raw log_std)``.

    ``grad_action`` has the action's shape; ``grad_log_prob`` is per sample.
    """
    a, eps, std, u = aux["action"], aux["eps"], aux["std"], aux["u"]
    glp = np.asarray(grad_log_prob)[..., None]
    # d logp / du has only the tanh correction, since eps is held fixed
    g_u = grad_action * (1.0 - a * a) + glp * (2.0 * np.tanh(u))
    g_mean = g_u
    g_log_std = g_u * std * eps - glp
    g_log_std = g_log_std * aux["in_range"]
    return g_mean, g_log_std


# -- tensor file records ------------------------------------------------------------

MAGIC = b"DISCSCKPT"


class CheckpointFormatError(ValueError):
    """Raised for bad magic, unsupported version or truncated checkpoint files."""


def write_tensor_records(f: BinaryIO, records: Iterable[tuple[str, np.ndarray]]) -> None:
    records = list(records)
    f.write(struct.pack("<I", len(records)))
    for name, arr in records:
        name_b = name.encode("utf-8")
        arr = np.asarray(arr, dtype="<f4")  # tobytes() below is C-order; keeps rank 0
        f.write(struct.pack("<I", len(name_b)))
        f.write(name_b)
        f.write(struct.pack("<I", arr.ndim))
        f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        f.write(arr.tobytes())


def _read_exact(f: BinaryIO, n: int) -> bytes:
    buf = f.read(n)
    if len(buf) != n:
        raise CheckpointFormatError(f"truncated file: wanted {n} bytes, got {len(buf)}")
    return buf


def read_tensor_records(f: BinaryIO) -> dict[str, np.ndarray]:
    (count,) = struct.unpack("<I", _read_exact(f, 4))
    out = {}
    for _ in range(count):
        (name_len,) = struct.unpack("<I", _read_exact(f, 4))
        name = _read_exact(f, name_len).decode("utf-8")
        (rank,) = struct.unpack("<I", _read_exact(f, 4))
        dims = struct.unpack(f"<{rank}I", _read_exact(f, 4 * rank)) if rank else ()
        n = int(np.prod(dims)) if rank else 1
        arr = np.frombuffer(_read_exact(f, 4 * n), dtype="<f4").reshape(dims)
        out[name] = arr.astype(DTYPE)
    return out
