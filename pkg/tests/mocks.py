"""Hand-built deterministic models for driving the planner in tests."""
from __future__ import annotations

import numpy as np

from muzero_aux.model import ModelOutput


class TabularTreeModel:
    """Deterministic model over a complete ``A``-ary tree of height ``depth``.

    Latents are 1-element arrays holding the node's heap index. Nodes at the
    bottom are absorbing: every action loops back with reward ``(1 - gamma) * V``
    and value ``V``, so any deeper rollout evaluates to exactly ``V``.
    ``prior_scale = 0`` gives uniform priors everywhere.
    """

    def __init__(self, action_count, depth, gamma, rng, reward_scale=1.0, prior_scale=1.0):
        self.action_count = action_count
        self.depth = depth
        self.gamma = gamma
        n_nodes = sum(action_count ** d for d in range(depth + 1))
        self.rewards = rng.normal(0.0, reward_scale, size=(n_nodes, action_count))
        self.values = rng.normal(0.0, 1.0, size=n_nodes)
        self.logits = prior_scale * rng.normal(0.0, 1.0, size=(n_nodes, action_count))
        self.calls = 0

    def node_depth(self, idx):
        d, first = 0, 0
        while idx >= first + self.action_count ** d:
            first += self.action_count ** d
            d += 1
        return d

    def _out(self, idx, reward):
        return ModelOutput(np.array([float(idx)]), float(reward),
                           float(self.values[idx]), self.logits[idx].copy())

    def initial_inference(self, observation):
        self.calls += 1
        return self._out(0, 0.0)

    def recurrent_inference(self, state, action):
        self.calls += 1
        idx = int(state[0])
        if self.node_depth(idx) >= self.depth:
            return self._out(idx, (1.0 - self.gamma) * self.values[idx])
        child = idx * self.action_count + action + 1
        return self._out(child, self.rewards[idx, action])


class ConstantModel:
    """Same reward, value and logits everywhere; the latent is the observation."""

    def __init__(self, action_count, logits=None, reward=0.0, value=0.0):
        self.action_count = action_count
        self.logits = np.zeros(action_count) if logits is None else np.asarray(logits, float)
        self.reward = reward
        self.value = value

    def initial_inference(self, observation):
        return ModelOutput(np.asarray(observation, float), 0.0, self.value, self.logits.copy())

    def recurrent_inference(self, state, action):
        return ModelOutput(np.asarray(state, float), self.reward, self.value, self.logits.copy())


class CartPoleControllerModel:
    """Prior concentrated on a linear state-feedback controller's action.

    Rewards and values are 0, so root visits follow the prior alone.
    """

    action_count = 2
    gains = np.array([0.1, 0.5, 10.0, 2.0])

    def _logits(self, obs):
        a = 1 if float(self.gains @ obs) > 0 else 0
        logits = np.full(2, -10.0)
        logits[a] = 10.0
        return logits

    def initial_inference(self, observation):
        obs = np.asarray(observation, float)
        return ModelOutput(obs, 0.0, 0.0, self._logits(obs))

    def recurrent_inference(self, state, action):
        return ModelOutput(np.asarray(state, float), 0.0, 0.0, self._logits(state))
