"""
Learning without rewards first
==============================

The decoder and consistency terms need no reward, so the representation and
dynamics networks can be trained on random play before the task is known.
Afterwards the buffer is emptied and ordinary training starts from the
pretrained weights.
"""

# %%
from muzero_aux import load_preset
from muzero_aux.metrics import read_rows
from muzero_aux.runner import Trainer

cfg = load_preset("cartpole").replace(
    training_steps=1000, pretrain_steps=1000, reconstruction_weight=1.0,
    consistency_weight=1.0, out_dir="runs/pretrained")

trainer = Trainer(cfg)
trainer.run_pretraining()

# %%
# Only the two self-supervised columns move during pretraining.
rows = read_rows("runs/pretrained/pretrain_losses.csv")
for row in rows[::200]:
    print(row["step"], row["l_g"], row["l_c"], row["l_v"])

# %%
summary = trainer.run()
print(summary)
