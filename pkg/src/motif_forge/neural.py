"""Minimal dense/convolutional network stack with hand-rolled reverse-mode
gradients, sized for the actor and critic of the discovery loop.

Everything is float64. The public state layout is (strand=2, sequence=N,
position=L, base=4); internally layers see (batch, row=2N, column=position,
channel), channels last. Convolutions run along the column axis only (kernel
1 x K, stride 1, same padding), so parameter shapes are independent of both N
and L; global average pooling before the dense layers keeps it that way.
"""

from __future__ import annotations

import json
import struct

import numpy as np

_CKPT_MAGIC = b"MFNET\x00\x01\x00"
_BN_EPS = 1e-5
_BN_MOMENTUM = 0.9


class Param:
    """One trainable tensor plus its gradient accumulator."""

    __slots__ = ("name", "value", "grad")

    def __init__(self, name: str, value: np.ndarray):
        self.name = name
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)


def _he_uniform(shape: tuple[int, ...], fan_in: int, rng: np.random.Generator) -> np.ndarray:
    limit = np.sqrt(6.0 / fan_in)
    return rng.uniform(-limit, limit, size=shape)


def _im2col(x: np.ndarray, kernel: int) -> np.ndarray:
    """(B, R, W, C) -> (B*R*W, K*C) patches for a same-padded width-K window.

    Flattening in (k, c) order keeps each patch a contiguous memory run, so
    the unavoidable copy is a cheap sequential one.
    """
    b, r, w, c = x.shape
    pad = kernel // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (0, 0)))
    view = np.lib.stride_tricks.sliding_window_view(xp, kernel, axis=2)
    return view.transpose(0, 1, 2, 4, 3).reshape(b * r * w, kernel * c)


class ConvRows:
    """1 x K convolution along the column axis, same padding, stride 1.

    Rows are independent; input (B, R, W, Cin) -> output (B, R, W, Cout).
    Weights are stored (Cout, Cin, K).
    """

    def __init__(self, name: str, cin: int, cout: int, kernel: int, rng: np.random.Generator):
        self.name = name
        self.kernel = kernel
        self.cin = cin
        self.cout = cout
        self.weight = Param(f"{name}.weight", _he_uniform((cout, cin, kernel), cin * kernel, rng))
        self.bias = Param(f"{name}.bias", np.zeros(cout))
        self._cols: np.ndarray | None = None
        self._in_shape: tuple[int, ...] | None = None

    @property
    def params(self) -> list[Param]:
        return [self.weight, self.bias]

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        b, r, w, c = x.shape
        cols = _im2col(x, self.kernel)
        self._cols = cols
        self._in_shape = x.shape
        w_mat = self.weight.value.transpose(2, 1, 0).reshape(self.kernel * self.cin, self.cout)
        y = cols @ w_mat
        y += self.bias.value
        return y.reshape(b, r, w, self.cout)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        b, r, w, c = self._in_shape
        dy2 = dy.reshape(b * r * w, self.cout)
        self.bias.grad += dy2.sum(axis=0)
        dw_mat = self._cols.T @ dy2  # (K*Cin, Cout)
        self.weight.grad += dw_mat.reshape(self.kernel, self.cin, self.cout).transpose(2, 1, 0)
        # dx is a correlation of dy with the kernel flipped along K
        cols_dy = _im2col(dy, self.kernel)  # (B*R*W, K*Cout)
        w_back = self.weight.value[:, :, ::-1].transpose(2, 0, 1).reshape(
            self.kernel * self.cout, self.cin
        )
        return (cols_dy @ w_back).reshape(b, r, w, c)


class BatchNorm:
    """Per-channel batch normalization over (batch, row, column)."""

    def __init__(self, name: str, channels: int):
        self.name = name
        self.gamma = Param(f"{name}.gamma", np.ones(channels))
        self.beta = Param(f"{name}.beta", np.zeros(channels))
        self.running_mean = np.zeros(channels)
        self.running_var = np.ones(channels)
        self._x: np.ndarray | None = None
        self._mean: np.ndarray | None = None
        self._inv_std: np.ndarray | None = None
        self._train_mode = False

    @property
    def params(self) -> list[Param]:
        return [self.gamma, self.beta]

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        self._train_mode = train
        pop = x.shape[0] * x.shape[1] * x.shape[2]
        if train:
            total = x.sum(axis=(0, 1, 2))
            total_sq = np.einsum("brwc,brwc->c", x, x)
            mean = total / pop
            var = np.maximum(total_sq / pop - mean * mean, 0.0)
            self.running_mean = _BN_MOMENTUM * self.running_mean + (1 - _BN_MOMENTUM) * mean
            self.running_var = _BN_MOMENTUM * self.running_var + (1 - _BN_MOMENTUM) * var
        else:
            mean = self.running_mean
            var = self.running_var
        inv_std = 1.0 / np.sqrt(var + _BN_EPS)
        self._x = x
        self._mean = mean
        self._inv_std = inv_std
        # single fused pass: y = a*x + b
        scale = self.gamma.value * inv_std
        shift = self.beta.value - scale * mean
        return x * scale + shift

    def backward(self, dy: np.ndarray) -> np.ndarray:
        inv_std = self._inv_std
        xhat = (self._x - self._mean) * inv_std
        self.gamma.grad += np.einsum("brwc,brwc->c", dy, xhat)
        self.beta.grad += dy.sum(axis=(0, 1, 2))
        if not self._train_mode:
            return dy * (self.gamma.value * inv_std)
        pop = dy.shape[0] * dy.shape[1] * dy.shape[2]
        mean_dy = dy.sum(axis=(0, 1, 2)) / pop
        mean_dy_xhat = np.einsum("brwc,brwc->c", dy, xhat) / pop
        return (self.gamma.value * inv_std) * (dy - mean_dy - xhat * mean_dy_xhat)


class Relu:
    def __init__(self):
        self._mask: np.ndarray | None = None

    params: list[Param] = []

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return np.where(self._mask, dy, 0.0)


class GlobalAvgPool:
    """(B, R, W, C) -> (B, C), averaging over rows and columns."""

    def __init__(self):
        self._in_shape: tuple[int, ...] | None = None

    params: list[Param] = []

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        self._in_shape = x.shape
        return x.mean(axis=(1, 2))

    def backward(self, dy: np.ndarray) -> np.ndarray:
        b, r, w, c = self._in_shape
        return np.broadcast_to(dy[:, None, None, :] / (r * w), (b, r, w, c))


class Dense:
    def __init__(self, name: str, n_in: int, n_out: int, rng: np.random.Generator):
        self.name = name
        self.weight = Param(f"{name}.weight", _he_uniform((n_in, n_out), n_in, rng))
        self.bias = Param(f"{name}.bias", np.zeros(n_out))
        self._x: np.ndarray | None = None

    @property
    def params(self) -> list[Param]:
        return [self.weight, self.bias]

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        self._x = x
        return x @ self.weight.value + self.bias.value

    def backward(self, dy: np.ndarray) -> np.ndarray:
        self.weight.grad += self._x.T @ dy
        self.bias.grad += dy.sum(axis=0)
        return dy @ self.weight.value.T


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Softmax over the last axis; rows sum to 1."""
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_rows_backward(probs: np.ndarray, dprobs: np.ndarray) -> np.ndarray:
    """Gradient through softmax_rows given its output and upstream gradient."""
    inner = (dprobs * probs).sum(axis=-1, keepdims=True)
    return probs * (dprobs - inner)


def _to_internal(state: np.ndarray) -> np.ndarray:
    """(2, N, L, 4) public layout -> (1, 2N, L, 4) rows-by-columns view."""
    if state.ndim != 4 or state.shape[0] != 2 or state.shape[3] != 4:
        raise ValueError(f"state must have shape (2, N, L, 4), got {state.shape}")
    _, n, length, _ = state.shape
    return np.ascontiguousarray(state, dtype=np.float64).reshape(1, 2 * n, length, 4)


class _ConvStack:
    """Shared trunk: two conv/batch-norm/ReLU blocks, pooling, one hidden dense."""

    def __init__(self, name: str, rng: np.random.Generator, channels=(8, 16), kernel=7, hidden=128):
        c1, c2 = channels
        self.layers = [
            ConvRows(f"{name}.conv1", 4, c1, kernel, rng),
            BatchNorm(f"{name}.bn1", c1),
            Relu(),
            ConvRows(f"{name}.conv2", c1, c2, kernel, rng),
            BatchNorm(f"{name}.bn2", c2),
            Relu(),
            GlobalAvgPool(),
            Dense(f"{name}.dense1", c2, hidden, rng),
            Relu(),
        ]

    def forward(self, x: np.ndarray, train: bool) -> np.ndarray:
        for layer in self.layers:
            x = layer.forward(x, train)
        return x

    def backward(self, dy: np.ndarray) -> np.ndarray:
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    @property
    def params(self) -> list[Param]:
        out = []
        for layer in self.layers:
            out.extend(layer.params)
        return out

    def state_arrays(self) -> list[tuple[str, np.ndarray]]:
        items = []
        for layer in self.layers:
            for p in layer.params:
                items.append((p.name, p.value))
            if isinstance(layer, BatchNorm):
                items.append((f"{layer.name}.running_mean", layer.running_mean))
                items.append((f"{layer.name}.running_var", layer.running_var))
        return items


class ActorNetwork:
    """Deterministic policy: constant state in, an (m, 4) probability matrix out."""

    def __init__(self, motif_length: int, rng: np.random.Generator,
                 channels=(8, 16), kernel=7, hidden=128):
        if motif_length < 1:
            raise ValueError("motif_length must be >= 1")
        self.motif_length = motif_length
        self.spec = {"channels": tuple(channels), "kernel": kernel, "hidden": hidden}
        self.trunk = _ConvStack("actor", rng, channels, kernel, hidden)
        self.head = Dense("actor.dense2", hidden, motif_length * 4, rng)
        self._probs: np.ndarray | None = None

    @property
    def params(self) -> list[Param]:
        return self.trunk.params + self.head.params

    def zero_grad(self):
        for p in self.params:
            p.grad[...] = 0.0

    def forward_logits(self, state: np.ndarray, train: bool = False) -> np.ndarray:
        x = _to_internal(state)
        h = self.trunk.forward(x, train)
        logits = self.head.forward(h, train)
        return logits.reshape(self.motif_length, 4)

    def forward(self, state: np.ndarray, train: bool = False) -> np.ndarray:
        probs = softmax_rows(self.forward_logits(state, train))
        self._probs = probs
        return probs

    def backward_probs(self, dprobs: np.ndarray) -> None:
        """Backpropagate a gradient w.r.t. the (m, 4) output probabilities."""
        dlogits = softmax_rows_backward(self._probs, dprobs)
        dh = self.head.backward(dlogits.reshape(1, -1))
        self.trunk.backward(dh)

    def state_arrays(self) -> list[tuple[str, np.ndarray]]:
        return self.trunk.state_arrays() + [
            (self.head.weight.name, self.head.weight.value),
            (self.head.bias.name, self.head.bias.value),
        ]

    def clone(self) -> "ActorNetwork":
        twin = ActorNetwork(self.motif_length, np.random.default_rng(0), **self.spec)
        _copy_state(twin, self)
        return twin


class CriticNetwork:
    """Action-value estimator: state plus a batch of actions in, scalars out.

    Each action is tiled across strand and sequence rows, then concatenated to
    the state along the position axis before the conv trunk.
    """

    def __init__(self, rng: np.random.Generator, channels=(8, 16), kernel=7, hidden=128):
        self.spec = {"channels": tuple(channels), "kernel": kernel, "hidden": hidden}
        self.trunk = _ConvStack("critic", rng, channels, kernel, hidden)
        self.head = Dense("critic.dense2", hidden, 1, rng)
        self._dims: tuple[int, int, int] | None = None  # (batch, rows, state_width)

    @property
    def params(self) -> list[Param]:
        return self.trunk.params + self.head.params

    def zero_grad(self):
        for p in self.params:
            p.grad[...] = 0.0

    def forward(self, state: np.ndarray, actions: np.ndarray, train: bool = False) -> np.ndarray:
        actions = np.asarray(actions, dtype=np.float64)
        if actions.ndim == 2:
            actions = actions[None]
        x_state = _to_internal(state)
        batch, rows, width = actions.shape[0], x_state.shape[1], x_state.shape[2]
        x = np.concatenate(
            [
                np.broadcast_to(x_state, (batch, rows, width, 4)),
                np.broadcast_to(actions[:, None, :, :], (batch, rows, actions.shape[1], 4)),
            ],
            axis=2,
        )
        self._dims = (batch, rows, width)
        h = self.trunk.forward(x, train)
        return self.head.forward(h, train)[:, 0]

    def backward(self, dvalues: np.ndarray) -> np.ndarray:
        """Backpropagate d(loss)/d(value); returns d(loss)/d(actions) (B, m, 4)."""
        batch, rows, width = self._dims
        dh = self.head.backward(np.asarray(dvalues, dtype=np.float64).reshape(batch, 1))
        dx = self.trunk.backward(dh)
        return dx[:, :, width:, :].sum(axis=1)

    def state_arrays(self) -> list[tuple[str, np.ndarray]]:
        return self.trunk.state_arrays() + [
            (self.head.weight.name, self.head.weight.value),
            (self.head.bias.name, self.head.bias.value),
        ]

    def clone(self) -> "CriticNetwork":
        twin = CriticNetwork(np.random.default_rng(0), **self.spec)
        _copy_state(twin, self)
        return twin


def _copy_state(dst, src) -> None:
    for (_, target), (_, source) in zip(dst.state_arrays(), src.state_arrays()):
        target[...] = source


def soft_update(target, online, tau: float) -> None:
    """Blend every state array of `online` into `target`: t <- tau*o + (1-tau)*t."""
    if not 0 < tau <= 1:
        raise ValueError("tau must be in (0, 1]")
    for (name_t, arr_t), (name_o, arr_o) in zip(target.state_arrays(), online.state_arrays()):
        if arr_t.shape != arr_o.shape:
            raise ValueError(f"shape mismatch for {name_t}: {arr_t.shape} vs {arr_o.shape}")
        arr_t *= 1.0 - tau
        arr_t += tau * arr_o


def huber_loss(pred: float, target: float, delta: float = 1.0) -> tuple[float, float]:
    """Huber loss and its gradient w.r.t. `pred`."""
    if delta <= 0:
        raise ValueError("delta must be > 0")
    diff = pred - target
    if abs(diff) <= delta:
        return 0.5 * diff * diff, diff
    return delta * (abs(diff) - 0.5 * delta), delta * np.sign(diff)


def adam_step(
    value: np.ndarray,
    grad: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    lr: float,
    beta1: float,
    beta2: float,
    eps: float,
    t: int,
) -> None:
    """One in-place Adam update with bias correction. `t` is 1-based."""
    if t < 1:
        raise ValueError("t must be >= 1")
    if value.shape != grad.shape:
        raise ValueError(f"shape mismatch: {value.shape} vs {grad.shape}")
    m *= beta1
    m += (1 - beta1) * grad
    v *= beta2
    v += (1 - beta2) * grad * grad
    m_hat = m / (1 - beta1**t)
    v_hat = v / (1 - beta2**t)
    value -= lr * m_hat / (np.sqrt(v_hat) + eps)


class AdamOptimizer:
    """Adam over a fixed parameter list."""

    def __init__(self, params: list[Param], lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = [np.zeros_like(p.value) for p in params]
        self._v = [np.zeros_like(p.value) for p in params]

    def step(self) -> None:
        self.t += 1
        for p, m, v in zip(self.params, self._m, self._v):
            adam_step(p.value, p.grad, m, v, self.lr, self.beta1, self.beta2, self.eps, self.t)


def save_checkpoint(path, items: list[tuple[str, np.ndarray]]) -> None:
    """Write a self-describing parameter file: names, shapes, raw LE float64."""
    header = {
        "version": 1,
        "arrays": [{"name": name, "shape": list(arr.shape)} for name, arr in items],
    }
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for _, arr in items:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_checkpoint(path) -> list[tuple[str, np.ndarray]]:
    """Read a checkpoint written by save_checkpoint; exact float64 round-trip."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_CKPT_MAGIC))
        if magic != _CKPT_MAGIC:
            raise ValueError(f"{path}: not a motif-forge checkpoint")
        (blob_len,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(blob_len).decode("utf-8"))
        if header.get("version") != 1:
            raise ValueError(f"{path}: unsupported checkpoint version {header.get('version')}")
        items = []
        for entry in header["arrays"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(count * 8), dtype="<f8").reshape(shape)
            items.append((entry["name"], data.astype(np.float64)))
    return items


def load_into(network, path) -> None:
    """Restore a network's state arrays from a checkpoint, matched by name."""
    stored = dict(load_checkpoint(path))
    for name, arr in network.state_arrays():
        if name not in stored:
            raise ValueError(f"checkpoint missing array {name!r}")
        if stored[name].shape != arr.shape:
            raise ValueError(
                f"checkpoint array {name!r} has shape {stored[name].shape}, expected {arr.shape}"
            )
        arr[...] = stored[name]
