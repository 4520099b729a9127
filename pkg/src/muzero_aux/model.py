"""Representation, dynamics, prediction and reconstruction networks.

All four share one :class:`~muzero_aux.nn.ParamStore`. The dynamics network
emits ``[reward, next_latent...]`` and the prediction network emits
``[value, policy_logits...]`` so each function stays a single MLP.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .nn import ConfigurationError, Mlp, ParamStore, glorot_uniform

NETWORKS = ("representation", "dynamics", "prediction", "reconstruction")

TRANSFORM_EPS = 1e-3


def scale_target(x):
    """Invertible squashing ``sign(x)(sqrt(|x| + 1) - 1) + eps x`` for reward/value targets."""
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * (np.sqrt(np.abs(x) + 1.0) - 1.0) + TRANSFORM_EPS * x


def unscale_target(y):
    """Exact inverse of :func:`scale_target`."""
    y = np.asarray(y, dtype=np.float64)
    eps = TRANSFORM_EPS
    root = (np.sqrt(1.0 + 4.0 * eps * (np.abs(y) + 1.0 + eps)) - 1.0) / (2.0 * eps)
    return np.sign(y) * (root * root - 1.0)


@dataclass(frozen=True)
class ModelConfig:
    obs_dim: int
    action_count: int
    state_dim: int = 8
    hidden: tuple[int, ...] = (64, 64)
    reconstruction: bool = True
    # squash latents with tanh as they leave h and g
    bounded_latent: bool = False
    # reward and value heads regress scale_target(x) instead of x
    value_transform: bool = False

    def layer_sizes(self) -> dict[str, list[int]]:
        h = list(self.hidden)
        sizes = {
            "representation": [self.obs_dim, *h, self.state_dim],
            "dynamics": [self.state_dim + self.action_count, *h, self.state_dim + 1],
            "prediction": [self.state_dim, *h, self.action_count + 1],
        }
        if self.reconstruction:
            sizes["reconstruction"] = [self.state_dim, *h, self.obs_dim]
        return sizes

    def param_count(self) -> int:
        return sum(sum(a * b + b for a, b in zip(s[:-1], s[1:]))
                   for s in self.layer_sizes().values())


@dataclass
class ModelOutput:
    latent: np.ndarray
    reward: float
    value: float
    policy_logits: np.ndarray


class MuZeroNet:
    """The learned model used for planning and training.

    ``initial_inference`` runs representation then prediction;
    ``recurrent_inference`` runs dynamics then prediction. Inputs are never
    modified in place.
    """

    def __init__(self, config: ModelConfig, store: ParamStore | None = None):
        self.config = config
        sizes = config.layer_sizes()
        if store is None:
            shapes: dict[str, tuple[int, ...]] = {}
            for name in NETWORKS:
                if name in sizes:
                    shapes.update(Mlp.shapes(name, sizes[name]))
            store = ParamStore(shapes)
        self.params = store
        rep_sizes = sizes["representation"]
        rep_act = ["tanh"] * (len(rep_sizes) - 1) if config.bounded_latent else None
        self.representation = Mlp(store, "representation", rep_sizes, rep_act)
        self.dynamics = Mlp(store, "dynamics", sizes["dynamics"])
        self.prediction = Mlp(store, "prediction", sizes["prediction"])
        self.reconstruction = (Mlp(store, "reconstruction", sizes["reconstruction"])
                               if config.reconstruction else None)
        self._eye = np.eye(config.action_count)

    @property
    def action_count(self) -> int:
        return self.config.action_count

    def snapshot(self) -> "MuZeroNet":
        """Independent copy of the current parameters, for actors."""
        return MuZeroNet(self.config, self.params.copy())

    def one_hot(self, actions) -> np.ndarray:
        actions = np.asarray(actions)
        if np.any(actions < 0) or np.any(actions >= self.action_count):
            raise ValueError(f"action out of range [0, {self.action_count}): {actions}")
        return self._eye[actions]

    def _check_latent(self, state: np.ndarray) -> np.ndarray:
        state = np.asarray(state, dtype=np.float64)
        if state.shape[-1] != self.config.state_dim:
            raise ConfigurationError(
                f"latent width {state.shape[-1]} != state_dim {self.config.state_dim}")
        return state

    def to_scalar(self, head_output):
        """Reward/value head output in environment units."""
        if self.config.value_transform:
            return unscale_target(head_output)
        return head_output

    def to_head(self, target):
        """Reward/value target in the units the heads are trained on."""
        if self.config.value_transform:
            return scale_target(target)
        return np.asarray(target, dtype=np.float64)

    def initial_inference(self, observation: np.ndarray) -> ModelOutput:
        latent = self.representation(observation)
        out = self.prediction(latent)
        return ModelOutput(latent, 0.0, float(self.to_scalar(out[0])), out[1:])

    def recurrent_inference(self, state: np.ndarray, action: int) -> ModelOutput:
        state = self._check_latent(state)
        x = np.concatenate([state, self.one_hot(action)])
        g = self.dynamics(x)
        latent = self.squash(g[1:])
        out = self.prediction(latent)
        return ModelOutput(latent, float(self.to_scalar(g[0])), float(self.to_scalar(out[0])),
                           out[1:])

    def squash(self, pre_latent: np.ndarray) -> np.ndarray:
        """Map the dynamics network's raw latent output to a latent state."""
        return np.tanh(pre_latent) if self.config.bounded_latent else pre_latent

    def reconstruct(self, state: np.ndarray) -> np.ndarray:
        if self.reconstruction is None:
            raise ConfigurationError("model was built without a reconstruction network")
        return self.reconstruction(self._check_latent(state))


def init_params(seed: int, config: ModelConfig) -> MuZeroNet:
    """Build a model with Glorot-uniform weights and zero biases.

    Networks are initialised in a fixed order with the reconstruction network
    last, so a model built without it shares every other initial value.
    """
    net = MuZeroNet(config)
    rng = np.random.default_rng(seed)
    for mlp in (net.representation, net.dynamics, net.prediction, net.reconstruction):
        if mlp is None:
            continue
        for w in mlp.weights:
            w[...] = glorot_uniform(rng, w.shape)
    net.params.version += 1
    return net
