"""
Training on CartPole
====================

A short run of the full loop: self-play with search, prioritized replay,
Adam steps, periodic greedy evaluation. Takes a few minutes on one core.
The same thing from the shell::

    muzero-aux train --config cartpole --out runs/demo
"""

# %%
from pathlib import Path

from muzero_aux import load_preset
from muzero_aux.cli import emit_plot
from muzero_aux.metrics import read_rows
from muzero_aux.runner import Trainer

out = Path("runs/demo")
cfg = load_preset("cartpole").replace(training_steps=1500, out_dir=str(out / "muzero"))
hybrid = cfg.replace(reconstruction_weight=1.0, consistency_weight=1.0,
                     out_dir=str(out / "hybrid"))

# %%
for c in (cfg, hybrid):
    summary = Trainer(c).run()
    print(Path(c.out_dir).name, summary["reward_mean"])

# %%
for row in read_rows(out / "hybrid" / "eval.csv")[-5:]:
    print(row)

# %%
emit_plot([out / "muzero" / "eval.csv", out / "hybrid" / "eval.csv"], out / "reward.svg")
