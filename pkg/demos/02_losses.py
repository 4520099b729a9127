"""
The five loss terms
===================

One sampled position is unrolled ``K`` steps through the learned dynamics.
Reward, value and policy heads are fitted as in MuZero; the decoder term asks
each latent to reproduce its real observation, and the consistency term pulls
each unrolled latent towards the encoding of the real future observation.
"""

# %%
import numpy as np

from muzero_aux import CartPole, ModelConfig, ReplayBuffer, init_params
from muzero_aux.trainer import LossWeights, compute_losses, random_episode

env = CartPole()
rng = np.random.default_rng(0)
buffer = ReplayBuffer(capacity=50, td_steps=10, discount=0.997, action_count=2,
                      priority_exponent=0.5, rng=rng)
for seed in range(20):
    buffer.store_game(random_episode(env, rng, seed))

model = init_params(0, ModelConfig(obs_dim=4, action_count=2, state_dim=8, hidden=(16,)))
batch = buffer.sample_batch(batch_size=64, unroll_steps=5)
print(batch.observations.shape, batch.mask.mean())

# %%
# Plain MuZero and the hybrid agent differ only in the weights.
for name, weights in [("muzero", LossWeights()), ("hybrid", LossWeights(1, 1, 1, 1, 1)),
                      ("self-supervised only", LossWeights.pretraining())]:
    model.params.zero_grad()
    breakdown, _ = compute_losses(model, batch, weights)
    grad_norm = np.linalg.norm(model.params.grad)
    print(f"{name:22s} total {breakdown.total:8.3f}  |grad| {grad_norm:.3f}")

# %%
# Where does the gradient go? Without a reward signal nothing reaches the prediction network.
model.params.zero_grad()
compute_losses(model, batch, LossWeights.pretraining())
for net in ("representation", "dynamics", "prediction", "reconstruction"):
    g = model.params.grad[model.params.slice_of(net)]
    print(f"{net:15s} {np.linalg.norm(g):.4f}")
