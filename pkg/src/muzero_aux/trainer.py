"""Losses, optimisation, self-play and evaluation.

The training loss for one sampled position unrolls the representation
network once and the dynamics network ``K`` times along the stored actions:

* reward ``(u - r)^2`` for ``k >= 1``
* value ``(z - v)^2``
* policy: cross-entropy of the search policy against ``softmax(logits)``
* reconstruction: MSE between the real observation ``o_{t+k}`` and the
  decoded latent
* consistency: MSE between the unrolled latent ``s^k`` and the encoding of
  ``o_{t+k}``, the latter treated as a constant

Terms are summed over ``k``, averaged over the batch, and scaled by
:class:`LossWeights`. Positions past the end of an episode (absorbing steps)
still train reward, value and policy towards 0, 0 and uniform; the two
observation-based terms skip them. With a value transform the reward and
value errors are measured in transformed units. L2 regularisation lives in
:func:`~muzero_aux.nn.adam_step`.

``scale_gradients`` enables the usual MuZero stabilisers: every term at
``k >= 1`` is weighted by ``1/K`` in the gradient, and the gradient flowing
back into a latent through the dynamics network is halved. The reported
breakdown stays the plain unweighted sums either way.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, fields

import numpy as np

from .envs import Environment
from .model import MuZeroNet
from .nn import AdamState, adam_step, softmax_cross_entropy_grad
from .planner import run_mcts
from .replay import GameHistory, ReplayBuffer, TrainingBatch

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class LossWeights:
    reward: float = 1.0
    value: float = 1.0
    policy: float = 1.0
    reconstruction: float = 0.0
    consistency: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"loss weight {f.name} must be >= 0")

    @classmethod
    def pretraining(cls) -> "LossWeights":
        return cls(0.0, 0.0, 0.0, 1.0, 1.0)


@dataclass
class LossBreakdown:
    reward: float = 0.0
    value: float = 0.0
    policy: float = 0.0
    reconstruction: float = 0.0
    consistency: float = 0.0
    total: float = 0.0


@dataclass(frozen=True)
class Schedules:
    """Learning rate and self-play temperature as functions of the training step."""

    lr: callable
    temperature: callable


def compute_losses(model: MuZeroNet, batch: TrainingBatch, weights: LossWeights,
                   scale_gradients: bool = False) -> tuple[LossBreakdown, np.ndarray]:
    """Evaluate the weighted loss and accumulate its gradient into ``model.params.grad``.

    Terms with weight 0 are skipped outright, so they cost nothing and cannot
    perturb the remaining gradients. Returns the breakdown and the root value
    predictions ``v^0`` (for priority updates).
    """
    B, K = len(batch), batch.unroll_steps
    D = model.config.state_dim
    # absorbing steps (past the episode end) still train r, v and p towards
    # 0, 0 and uniform; only the observation-based terms need the mask
    mask = batch.mask
    step_scale = np.ones(K + 1)
    if scale_gradients and K > 0:
        step_scale[1:] = 1.0 / K
    scale = mask * step_scale / B
    unmasked = np.broadcast_to(step_scale / B, (B, K + 1))
    w = weights
    want_pred = w.value != 0 or w.policy != 0
    want_recon = w.reconstruction != 0
    want_cons = w.consistency != 0
    if want_recon and model.reconstruction is None:
        raise ValueError("reconstruction loss requested but the model has no decoder")

    sums = dict.fromkeys(("reward", "value", "policy", "reconstruction", "consistency"), 0.0)
    s, tape_h = model.representation.forward(batch.observations[:, 0])
    tapes_g = [None]
    dreward = np.zeros((B, K + 1))
    dstate = [None] * (K + 1)
    latents = [s]
    root_values = None

    for k in range(K + 1):
        if k > 0:
            x = np.concatenate([s, model.one_hot(batch.actions[:, k - 1])], axis=1)
            out, tape = model.dynamics.forward(x)
            tapes_g.append(tape)
            r, s = out[:, 0], model.squash(out[:, 1:])
            latents.append(s)
            err = r - model.to_head(batch.rewards[:, k])
            sums["reward"] += float(np.sum(err * err)) / B
            dreward[:, k] = w.reward * 2.0 * err * unmasked[:, k]
        ds = np.zeros((B, D))

        if want_pred or k == 0:
            pred, tape_f = model.prediction.forward(s)
            v, logits = pred[:, 0], pred[:, 1:]
            if k == 0:
                root_values = model.to_scalar(v)
        if want_pred:
            err = v - model.to_head(batch.values[:, k])
            sums["value"] += float(np.sum(err * err)) / B
            ce, dlogits = softmax_cross_entropy_grad(batch.policies[:, k], logits)
            sums["policy"] += float(np.sum(ce)) / B
            dpred = np.empty_like(pred)
            dpred[:, 0] = w.value * 2.0 * err * unmasked[:, k]
            dpred[:, 1:] = w.policy * dlogits * unmasked[:, k, None]
            ds += model.prediction.backward(tape_f, dpred)

        if want_recon:
            obs_hat, tape_r = model.reconstruction.forward(s)
            err = obs_hat - batch.observations[:, k]
            n_obs = err.shape[1]
            sums["reconstruction"] += float(np.sum(np.mean(err * err, axis=1) * mask[:, k])) / B
            ds += model.reconstruction.backward(
                tape_r, w.reconstruction * 2.0 * err / n_obs * scale[:, k, None])

        if want_cons and k > 0:
            # target branch: forward only, no tape, so no gradient reaches it
            target = model.representation(batch.observations[:, k])
            err = s - target
            sums["consistency"] += float(np.sum(np.mean(err * err, axis=1) * mask[:, k])) / B
            ds += w.consistency * 2.0 * err / D * scale[:, k, None]

        dstate[k] = ds

    carry = np.zeros((B, D))
    for k in range(K, 0, -1):
        dlatent = dstate[k] + carry
        if model.config.bounded_latent:
            dlatent = dlatent * (1.0 - latents[k] ** 2)
        dout = np.concatenate([dreward[:, k:k + 1], dlatent], axis=1)
        carry = model.dynamics.backward(tapes_g[k], dout)[:, :D]
        if scale_gradients:
            carry *= 0.5
    model.representation.backward(tape_h, dstate[0] + carry)

    total = (w.reward * sums["reward"] + w.value * sums["value"] + w.policy * sums["policy"]
             + w.reconstruction * sums["reconstruction"] + w.consistency * sums["consistency"])
    return LossBreakdown(total=total, **sums), root_values


def train_step(model: MuZeroNet, opt: AdamState, buffer: ReplayBuffer, weights: LossWeights,
               schedules: Schedules, t: int, batch_size: int, unroll_steps: int,
               l2_weight: float, scale_gradients: bool = False) -> LossBreakdown:
    """Sample, differentiate, take one Adam step at ``lr(t)``, refresh priorities."""
    batch = buffer.sample_batch(batch_size, unroll_steps)
    breakdown, root_values = compute_losses(model, batch, weights, scale_gradients)
    adam_step(model.params, opt, schedules.lr(t), l2_weight)
    buffer.update_priorities(batch.game_ids, batch.positions, root_values - batch.values[:, 0])
    return breakdown


def pretrain(model: MuZeroNet, opt: AdamState, buffer: ReplayBuffer, steps: int,
             schedules: Schedules, batch_size: int, unroll_steps: int, l2_weight: float,
             callback=None, scale_gradients: bool = False) -> None:
    """Train only the reconstruction and consistency terms (no reward signal used)."""
    weights = LossWeights.pretraining()
    for t in range(steps):
        breakdown = train_step(model, opt, buffer, weights, schedules, t, batch_size,
                               unroll_steps, l2_weight, scale_gradients)
        if callback is not None:
            callback(t + 1, breakdown)


@dataclass(frozen=True)
class SearchParams:
    simulations: int = 50
    discount: float = 0.997
    puct_c1: float = 1.25
    puct_c2: float = 19652.0
    dirichlet_alpha: float = 0.25
    exploration_fraction: float = 0.25


def self_play_episode(model, env: Environment, search: SearchParams, temperature: float,
                      rng: np.random.Generator, seed: int | None = None) -> GameHistory:
    """Play one episode, sampling each move from the visit-count policy."""
    game = GameHistory()
    obs = env.reset(seed)
    noise = (search.dirichlet_alpha, search.exploration_fraction)
    while True:
        result = run_mcts(model, obs, search.simulations, search.discount, search.puct_c1,
                          search.puct_c2, noise=noise, rng=rng, temperature=temperature)
        game.observations.append(obs)
        game.policies.append(result.policy)
        game.values.append(result.value)
        game.actions.append(result.action)
        step = env.step(result.action)
        game.rewards.append(step.reward)
        obs = step.observation
        if step.terminal:
            game.observations.append(obs)
            return game


def random_episode(env: Environment, rng: np.random.Generator, seed: int | None = None) -> GameHistory:
    """Uniform-random play; search targets are uniform policies and zero values."""
    n_actions = env.spec().action_count
    uniform = np.full(n_actions, 1.0 / n_actions)
    game = GameHistory()
    obs = env.reset(seed)
    while True:
        action = int(rng.integers(n_actions))
        game.observations.append(obs)
        game.policies.append(uniform)
        game.values.append(0.0)
        game.actions.append(action)
        step = env.step(action)
        game.rewards.append(step.reward)
        obs = step.observation
        if step.terminal:
            game.observations.append(obs)
            return game


def evaluate(model, env: Environment, episodes: int, search: SearchParams,
             seed: int) -> tuple[float, float]:
    """Greedy play (most-visited action, no root noise); mean and std of episode returns."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    totals = []
    for i in range(episodes):
        obs = env.reset(seed + i)
        total = 0.0
        while True:
            result = run_mcts(model, obs, search.simulations, search.discount, search.puct_c1,
                              search.puct_c2, noise=None, temperature=0.0)
            step = env.step(result.action)
            total += step.reward
            obs = step.observation
            if step.terminal:
                break
        totals.append(total)
    return float(np.mean(totals)), float(np.std(totals))
