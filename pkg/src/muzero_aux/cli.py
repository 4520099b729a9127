"""Command line: ``train``, ``eval`` and ``plot``.

Set ``MUZERO_AUX_LOG`` (DEBUG, INFO, WARNING, ...) to control verbosity.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import checkpoint
from .config import ConfigError, load_config, load_preset
from .metrics import EVAL_HEADER, read_rows
from .runner import Trainer, search_params
from .trainer import evaluate
from .envs import make_env

log = logging.getLogger("muzero_aux")


def run_train(config_path: str, pretrain_steps: int | None = None, seed: int | None = None,
              out: str | None = None, resume: str | None = None) -> int:
    try:
        if resume:
            trainer = Trainer.from_checkpoint(resume, out)
        else:
            path = Path(config_path)
            cfg = load_config(path) if path.exists() else load_preset(config_path)
            overrides = {}
            if pretrain_steps is not None:
                overrides["pretrain_steps"] = pretrain_steps
            if seed is not None:
                overrides["seed"] = seed
            if out is not None:
                overrides["out_dir"] = out
            cfg = cfg.replace(**overrides)
            trainer = Trainer(cfg)
    except ConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, checkpoint.CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        summary = trainer.run(resume=bool(resume))
    except KeyboardInterrupt:
        print(f"interrupted; checkpoint saved in {trainer.out_dir}", file=sys.stderr)
        return 130
    print(f"final {summary['final_window']} steps: reward {summary['reward_mean']:.2f} "
          f"+/- {summary['reward_std']:.2f} over {summary['evaluations']} evaluations")
    return 0


def run_eval(checkpoint_path: str, episodes: int, seed: int, out: str | None = None) -> int:
    try:
        trainer = Trainer.from_checkpoint(checkpoint_path, out_dir=Path(checkpoint_path).parent)
    except (checkpoint.CheckpointError, ConfigError, KeyError, ValueError) as exc:
        print(f"cannot load checkpoint: {exc}", file=sys.stderr)
        return 2
    cfg = trainer.cfg
    mean, std = evaluate(trainer.model, make_env(cfg.env), episodes, search_params(cfg), seed)
    report = {"checkpoint": str(checkpoint_path), "step": trainer.step, "episodes": episodes,
              "seed": seed, "reward_mean": mean, "reward_std": std}
    print(f"reward {mean:.2f} +/- {std:.2f} over {episodes} episodes (step {trainer.step})")
    out_path = Path(out) if out else Path(checkpoint_path).with_name("eval_report.json")
    out_path.write_text(json.dumps(report, indent=2) + "\n")
    return 0


def series_label(path: Path) -> str:
    """Run name for a metrics file: its stem, or the run directory for ``eval.csv``."""
    return path.parent.name if path.stem == "eval" else path.stem


def emit_plot(csv_paths: list[str | Path], out_path: str | Path) -> dict:
    """Reward-versus-step line chart, one series per file, written as SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    if not csv_paths:
        raise ValueError("need at least one metrics file")
    series = []
    for p in map(Path, csv_paths):
        rows = read_rows(p, EVAL_HEADER)
        if not rows:
            raise ValueError(f"{p}: no data rows")
        steps = [int(r["step"]) for r in rows]
        rewards = [float(r["reward_mean"]) for r in rows]
        series.append((series_label(p), steps, rewards))

    with plt.rc_context({"svg.fonttype": "none", "svg.hashsalt": "muzero-aux"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        for i, (label, steps, rewards) in enumerate(series):
            (line,) = ax.plot(steps, rewards, label=label)
            line.set_gid(f"series{i}")
        x_max = max(max(s) for _, s, _ in series)
        y_lo = min(min(r) for _, _, r in series)
        y_hi = max(max(r) for _, _, r in series)
        pad = 0.05 * (y_hi - y_lo or 1.0)
        ax.set_xlim(0, x_max)
        ax.set_ylim(y_lo - pad, y_hi + pad)
        ax.set_xlabel("Training steps")
        ax.set_ylabel("Total episode reward")
        ax.grid(True)
        ax.legend(loc="lower right", frameon=False)
        fig.tight_layout()
        fig.savefig(out_path, format="svg", metadata={"Date": None})
        info = {"labels": [s[0] for s in series], "xlim": ax.get_xlim(), "ylim": ax.get_ylim()}
        plt.close(fig)
    return info


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="muzero-aux", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train an agent")
    p.add_argument("--config", required=True,
                   help="config file, or a preset name (cartpole, landerlite)")
    p.add_argument("--pretrain-steps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory (overrides out_dir)")
    p.add_argument("--resume", metavar="CHECKPOINT", help="continue from a checkpoint")

    p = sub.add_parser("eval", help="evaluate a checkpoint greedily")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--episodes", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="report path (default: next to the checkpoint)")

    p = sub.add_parser("plot", help="plot reward curves from eval.csv files")
    p.add_argument("--out", required=True)
    p.add_argument("csv", nargs="+")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=os.environ.get("MUZERO_AUX_LOG", "WARNING").upper(),
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    if args.command == "train":
        return run_train(args.config, args.pretrain_steps, args.seed, args.out, args.resume)
    if args.command == "eval":
        if args.episodes < 1:
            print("--episodes must be >= 1", file=sys.stderr)
            return 2
        return run_eval(args.checkpoint, args.episodes, args.seed, args.out)
    try:
        info = emit_plot(args.csv, args.out)
    except (ValueError, OSError) as exc:
        print(f"cannot plot: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {args.out} ({len(info['labels'])} series)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
