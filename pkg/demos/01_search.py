"""
Planning with a known model
===========================

The search only ever talks to a model through ``initial_inference`` and
``recurrent_inference``. Here the model is a small hand-written table, which
makes it easy to compare the tree search with brute-force enumeration.
"""

# %%
import numpy as np

from muzero_aux.model import ModelOutput
from muzero_aux.planner import exhaustive_plan, run_mcts


class Corridor:
    """Walk left (0) or right (1) on a line of 7 cells; only the right end pays."""

    action_count = 2

    def initial_inference(self, observation):
        return ModelOutput(np.array([3.0]), 0.0, 0.0, np.zeros(2))

    def recurrent_inference(self, state, action):
        pos = float(np.clip(state[0] + (1 if action else -1), 0, 6))
        reward = 1.0 if pos == 6 else 0.0
        return ModelOutput(np.array([pos]), reward, 0.0, np.zeros(2))


model = Corridor()

# %%
# Enumerating all 2^4 action sequences: going right reaches the end after three moves,
# and pushing against the wall on the fourth pays again.
print(exhaustive_plan(model, None, depth=4, gamma=0.9))

# %%
# 50 simulations are enough for the search to agree.
result = run_mcts(model, None, num_simulations=50, gamma=0.9, temperature=0.0)
print("visits", result.visit_counts, "action", result.action, "value %.3f" % result.value)

# %%
# Root noise and a temperature turn the visit counts into a sampling distribution.
rng = np.random.default_rng(0)
for T in (1.0, 0.5, 0.25):
    r = run_mcts(model, None, 50, 0.9, noise=(0.25, 0.25), rng=rng, temperature=T)
    print(T, np.round(r.policy, 3))
