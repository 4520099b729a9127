"""Small dense-network substrate: flat parameter storage, tanh MLPs with
hand-written backward passes, and Adam.

Every network in the package shares one :class:`ParamStore`, so an optimizer
step, an L2 penalty and a checkpoint all operate on a single flat array.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class ConfigurationError(ValueError):
    """Raised when array shapes do not fit the configured network."""


class TapeError(RuntimeError):
    """Raised when a backward pass is fed a tape it cannot use."""


class ParamStore:
    """Flat parameter vector ``theta`` with a named layout and a gradient buffer.

    Layer tensors are exposed as reshaped *views* into ``theta`` and ``grad``,
    so in-place updates of the flat arrays are seen by every network.
    """

    def __init__(self, shapes: dict[str, tuple[int, ...]], dtype=np.float64):
        self.layout: dict[str, tuple[slice, tuple[int, ...]]] = {}
        offset = 0
        for name, shape in shapes.items():
            size = int(np.prod(shape))
            self.layout[name] = (slice(offset, offset + size), tuple(shape))
            offset += size
        self.theta = np.zeros(offset, dtype=dtype)
        self.grad = np.zeros(offset, dtype=dtype)
        # bumped whenever theta changes; tapes recorded before a bump are stale
        self.version = 0

    @property
    def size(self) -> int:
        return self.theta.size

    def __len__(self) -> int:
        return self.theta.size

    def view(self, name: str) -> np.ndarray:
        sl, shape = self.layout[name]
        return self.theta[sl].reshape(shape)

    def grad_view(self, name: str) -> np.ndarray:
        sl, shape = self.layout[name]
        return self.grad[sl].reshape(shape)

    def slice_of(self, prefix: str) -> slice:
        """Contiguous slice covering every layer whose name starts with ``prefix``."""
        slices = [sl for name, (sl, _) in self.layout.items() if name.startswith(prefix)]
        if not slices:
            raise KeyError(prefix)
        return slice(min(s.start for s in slices), max(s.stop for s in slices))

    def set_theta(self, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=self.theta.dtype)
        if values.shape != self.theta.shape:
            raise ConfigurationError(
                f"expected {self.theta.shape[0]} parameters, got {values.shape}")
        self.theta[...] = values
        self.version += 1

    def zero_grad(self) -> None:
        self.grad[...] = 0.0

    def copy(self) -> "ParamStore":
        other = ParamStore.__new__(ParamStore)
        other.layout = dict(self.layout)
        other.theta = self.theta.copy()
        other.grad = np.zeros_like(self.grad)
        other.version = 0
        return other


@dataclass
class Tape:
    net: "Mlp"
    version: int
    inputs: list[np.ndarray]
    preacts: list[np.ndarray]
    squeeze: bool


ACTIVATIONS = {"tanh", "identity"}


class Mlp:
    """Fully connected network whose tensors live in a shared :class:`ParamStore`.

    Hidden layers use ``tanh``; the output layer is linear. Inputs may be a
    single vector of shape ``(n_in,)`` or a batch ``(batch, n_in)``.
    """

    def __init__(self, store: ParamStore, prefix: str, sizes: list[int],
                 activations: list[str] | None = None):
        if len(sizes) < 2:
            raise ConfigurationError("an Mlp needs at least input and output sizes")
        n_layers = len(sizes) - 1
        if activations is None:
            activations = ["tanh"] * (n_layers - 1) + ["identity"]
        if len(activations) != n_layers or not set(activations) <= ACTIVATIONS:
            raise ConfigurationError(f"bad activation list {activations!r}")
        self.store = store
        self.prefix = prefix
        self.sizes = list(sizes)
        self.activations = list(activations)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        self._wnames: list[str] = []
        self._bnames: list[str] = []
        for i in range(n_layers):
            wname, bname = f"{prefix}.{i}.weight", f"{prefix}.{i}.bias"
            w, b = store.view(wname), store.view(bname)
            if w.shape != (sizes[i + 1], sizes[i]) or b.shape != (sizes[i + 1],):
                raise ConfigurationError(f"layout of {prefix} layer {i} does not chain")
            self.weights.append(w)
            self.biases.append(b)
            self._wnames.append(wname)
            self._bnames.append(bname)

    @staticmethod
    def shapes(prefix: str, sizes: list[int]) -> dict[str, tuple[int, ...]]:
        out: dict[str, tuple[int, ...]] = {}
        for i in range(len(sizes) - 1):
            out[f"{prefix}.{i}.weight"] = (sizes[i + 1], sizes[i])
            out[f"{prefix}.{i}.bias"] = (sizes[i + 1],)
        return out

    @property
    def n_in(self) -> int:
        return self.sizes[0]

    @property
    def n_out(self) -> int:
        return self.sizes[-1]

    @property
    def param_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.forward(x)[0]

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, Tape]:
        x = np.asarray(x, dtype=self.store.theta.dtype)
        squeeze = x.ndim == 1
        if squeeze:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise ConfigurationError(
                f"{self.prefix}: expected input width {self.n_in}, got shape {x.shape}")
        inputs, preacts = [], []
        a = x
        for w, b, act in zip(self.weights, self.biases, self.activations):
            inputs.append(a)
            z = a @ w.T + b
            preacts.append(z)
            a = np.tanh(z) if act == "tanh" else z
        tape = Tape(self, self.store.version, inputs, preacts, squeeze)
        return (a[0] if squeeze else a), tape

    def backward(self, tape: Tape, grad_out: np.ndarray) -> np.ndarray:
        """Accumulate parameter gradients and return the gradient w.r.t. the input."""
        if tape.net is not self:
            raise TapeError(f"tape was recorded by {tape.net.prefix}, not {self.prefix}")
        if tape.version != self.store.version:
            raise TapeError(f"{self.prefix}: parameters changed since the forward pass")
        g = np.asarray(grad_out, dtype=self.store.theta.dtype)
        if tape.squeeze:
            g = g[None, :]
        if g.shape != tape.preacts[-1].shape:
            raise ConfigurationError(
                f"{self.prefix}: output gradient shape {g.shape} does not match "
                f"{tape.preacts[-1].shape}")
        for i in reversed(range(len(self.weights))):
            if self.activations[i] == "tanh":
                t = np.tanh(tape.preacts[i])
                g = g * (1.0 - t * t)
            self.store.grad_view(self._wnames[i])[...] += g.T @ tape.inputs[i]
            self.store.grad_view(self._bnames[i])[...] += g.sum(axis=0)
            g = g @ self.weights[i]
        return g[0] if tape.squeeze else g


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, store: ParamStore, **kwargs) -> "AdamState":
        return cls(np.zeros_like(store.theta), np.zeros_like(store.theta), **kwargs)


def adam_step(params: ParamStore, opt: AdamState, lr: float, l2_weight: float = 0.0) -> None:
    """Bias-corrected Adam update; the ``c * ||theta||^2`` penalty enters as ``2 c theta``."""
    g = params.grad
    if l2_weight:
        g = g + 2.0 * l2_weight * params.theta
    opt.t += 1
    opt.m *= opt.beta1
    opt.m += (1.0 - opt.beta1) * g
    opt.v *= opt.beta2
    opt.v += (1.0 - opt.beta2) * g * g
    m_hat = opt.m / (1.0 - opt.beta1 ** opt.t)
    v_hat = opt.v / (1.0 - opt.beta2 ** opt.t)
    params.theta -= lr * m_hat / (np.sqrt(v_hat) + opt.eps)
    params.zero_grad()
    params.version += 1


def softmax(logits: np.ndarray, temperature: float = 1.0, axis: int = -1) -> np.ndarray:
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    z = np.asarray(logits, dtype=np.float64) / temperature
    if z.size == 0:
        raise ValueError("softmax of an empty array")
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


CE_EPS = 1e-12


def mse(a: np.ndarray, b: np.ndarray) -> float:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"mse of mismatched shapes {a.shape} and {b.shape}")
    return float(np.mean((a - b) ** 2))


def cross_entropy(target: np.ndarray, predicted: np.ndarray) -> float:
    target, predicted = np.asarray(target), np.asarray(predicted)
    if target.shape != predicted.shape:
        raise ValueError(
            f"cross_entropy of mismatched shapes {target.shape} and {predicted.shape}")
    return float(-np.sum(target * np.log(predicted + CE_EPS)))


def softmax_cross_entropy_grad(target: np.ndarray, logits: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise ``-sum(target * log(softmax(logits) + eps))`` and its gradient in ``logits``.

    The epsilon is kept in the derivative so the result is the exact gradient of
    the value returned, not the usual ``p - target`` approximation.
    """
    p = softmax(logits, axis=-1)
    loss = -np.sum(target * np.log(p + CE_EPS), axis=-1)
    dp = -target / (p + CE_EPS)
    dlogits = p * (dp - np.sum(dp * p, axis=-1, keepdims=True))
    return loss, dlogits


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, int]) -> np.ndarray:
    fan_out, fan_in = shape
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)
