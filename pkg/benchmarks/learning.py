"""Desk-scale learning experiments on CartPole.

Two paired comparisons, each over seeds 0..N-1:

* ``desk_scale``: plain MuZero (w_g = w_c = 0) against the hybrid agent
  (w_g = w_c = 1), scored by the mean evaluation reward over the final 500
  training steps.
* ``pretraining``: the hybrid agent after 1,000 self-supervised steps on
  random-play data, against the same agent trained from scratch (the hybrid
  runs of the first comparison), scored by how many training steps it takes
  for the mean of the last three evaluations to reach 100.

Finished runs are skipped when the script is restarted, so it can be
interrupted freely. Results land in ``benchmarks/results/learning.json`` and
reward curves in ``benchmarks/results/*.svg``.

    python benchmarks/learning.py            # full protocol, several hours
    python benchmarks/learning.py --steps 600 --seeds 2 --out /tmp/quick
"""
from __future__ import annotations

import argparse
import json
import logging
import time
from pathlib import Path

import numpy as np

from muzero_aux.cli import emit_plot
from muzero_aux.config import load_preset
from muzero_aux.metrics import EVAL_HEADER, read_rows
from muzero_aux.runner import Trainer

HERE = Path(__file__).resolve().parent
log = logging.getLogger("benchmarks")


def steps_to_reach(rows, threshold=100.0, window=3):
    """First evaluation step where the mean of the last ``window`` evaluations hits ``threshold``."""
    rewards = [float(r["reward_mean"]) for r in rows]
    for i in range(window - 1, len(rows)):
        if np.mean(rewards[i - window + 1:i + 1]) >= threshold:
            return int(rows[i]["step"])
    return None


def run_one(out: Path, **changes) -> dict:
    summary_path = out / "summary.json"
    if not summary_path.exists():
        cfg = load_preset("cartpole").replace(out_dir=str(out), **changes)
        t0 = time.time()
        Trainer(cfg).run()
        log.info("%s done in %.0f s", out.name, time.time() - t0)
    rows = read_rows(out / "eval.csv", EVAL_HEADER)
    summary = json.loads(summary_path.read_text())
    return {"final_mean": summary["reward_mean"], "final_std": summary["reward_std"],
            "steps_to_100": steps_to_reach(rows),
            "curve": [[int(r["step"]), float(r["reward_mean"])] for r in rows]}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=3000)
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--pretrain-steps", type=int, default=1000)
    parser.add_argument("--out", type=Path, default=HERE / "results")
    parser.add_argument("--skip-pretraining", action="store_true")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    runs = args.out / "runs"
    results_path = args.out / "learning.json"
    results = {"desk_scale": {"steps": args.steps, "seeds": []}}
    hybrid = {"reconstruction_weight": 1.0, "consistency_weight": 1.0}

    def save():
        args.out.mkdir(parents=True, exist_ok=True)
        results_path.write_text(json.dumps(results, indent=1) + "\n")

    for seed in range(args.seeds):
        common = {"training_steps": args.steps, "seed": seed}
        entry = {"seed": seed,
                 "baseline": run_one(runs / f"baseline_s{seed}", **common),
                 "hybrid": run_one(runs / f"hybrid_s{seed}", **common, **hybrid)}
        results["desk_scale"]["seeds"].append(entry)
        log.info("seed %d: baseline %.1f, hybrid %.1f", seed, entry["baseline"]["final_mean"],
                 entry["hybrid"]["final_mean"])
        save()

    if not args.skip_pretraining:
        results["pretraining"] = {"steps": args.steps, "pretrain_steps": args.pretrain_steps,
                                  "seeds": []}
        for seed, scratch in enumerate(results["desk_scale"]["seeds"]):
            pre = run_one(runs / f"pretrained_s{seed}", training_steps=args.steps, seed=seed,
                          pretrain_steps=args.pretrain_steps, **hybrid)
            results["pretraining"]["seeds"].append(
                {"seed": seed, "pretrained": pre, "scratch": scratch["hybrid"]})
            log.info("seed %d: reward 100 after %s (pretrained) vs %s (scratch) steps", seed,
                     pre["steps_to_100"], scratch["hybrid"]["steps_to_100"])
            save()

    for kind in ("baseline", "hybrid", "pretrained"):
        csvs = sorted(runs.glob(f"{kind}_s*/eval.csv"))
        if csvs:
            emit_plot(csvs, args.out / f"{kind}.svg")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
