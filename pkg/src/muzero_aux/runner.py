"""Serial actor/learner loop with checkpoints and metrics.

One self-play episode is played with a snapshot of the parameters, then
``train_steps_per_episode`` learner steps run before the next episode.
Everything random derives from the config seed, so equal configs give equal
metrics files and a resumed run continues exactly where it stopped.
"""
from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from . import checkpoint
from .config import RunConfig, parse_config
from .envs import make_env
from .metrics import EVAL_HEADER, LOSS_HEADER, CsvLog, final_window, read_rows
from .model import ModelConfig, MuZeroNet, init_params
from .nn import AdamState
from .replay import ReplayBuffer
from .trainer import (LossWeights, Schedules, SearchParams, evaluate, pretrain,
                      random_episode, self_play_episode, train_step)

log = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.bin"


def model_config(cfg: RunConfig) -> ModelConfig:
    spec = make_env(cfg.env).spec()
    return ModelConfig(obs_dim=spec.obs_dim, action_count=spec.action_count,
                       state_dim=cfg.state_dim, hidden=tuple(cfg.hidden_sizes),
                       bounded_latent=cfg.bounded_latent,
                       value_transform=cfg.value_transform)


def search_params(cfg: RunConfig) -> SearchParams:
    return SearchParams(cfg.simulations, cfg.discount, cfg.puct_c1, cfg.puct_c2,
                        cfg.dirichlet_alpha, cfg.exploration_fraction)


def eval_seed(cfg: RunConfig, step: int) -> int:
    return int(np.random.SeedSequence([cfg.seed, step, 1]).generate_state(1)[0])


class Trainer:
    def __init__(self, cfg: RunConfig, out_dir: str | Path | None = None):
        self.cfg = cfg
        self.out_dir = Path(out_dir if out_dir is not None else cfg.out_dir)
        seq = np.random.SeedSequence(cfg.seed)
        play_seq, buffer_seq, init_seq = seq.spawn(3)
        self.rng = np.random.default_rng(play_seq)
        self.env = make_env(cfg.env)
        self.eval_env = make_env(cfg.env)
        mcfg = model_config(cfg)
        self.model: MuZeroNet = init_params(int(init_seq.generate_state(1)[0]), mcfg)
        self.opt = AdamState.zeros_like(self.model.params)
        self.buffer = ReplayBuffer(cfg.buffer_size, cfg.td_steps, cfg.discount,
                                   mcfg.action_count, cfg.priority_exponent,
                                   rng=np.random.default_rng(buffer_seq))
        self.weights = LossWeights(1.0, cfg.value_loss_weight, 1.0,
                                   cfg.reconstruction_weight, cfg.consistency_weight)
        self.schedules = Schedules(cfg.learning_rate, cfg.temperature)
        self.search = search_params(cfg)
        self.step = 0
        self.pending = 0  # learner steps left before the next episode
        self.episodes = 0
        self.pretrained = cfg.pretrain_steps == 0
        self.loss_log: CsvLog | None = None
        self.eval_log: CsvLog | None = None

    # -- persistence -------------------------------------------------------

    def state_dict(self) -> dict:
        return {
            "config": self.cfg.dumps(),
            "step": self.step,
            "pending": self.pending,
            "episodes": self.episodes,
            "pretrained": self.pretrained,
            "theta": self.model.params.theta,
            "adam": {"m": self.opt.m, "v": self.opt.v, "t": self.opt.t,
                     "beta1": self.opt.beta1, "beta2": self.opt.beta2, "eps": self.opt.eps},
            "rng": self.rng.bit_generator.state,
            "buffer": self.buffer.state_dict(),
        }

    def load_state_dict(self, state: dict) -> None:
        self.step = int(state["step"])
        self.pending = int(state["pending"])
        self.episodes = int(state["episodes"])
        self.pretrained = bool(state["pretrained"])
        self.model.params.set_theta(state["theta"])
        a = state["adam"]
        self.opt = AdamState(np.array(a["m"]), np.array(a["v"]), int(a["t"]),
                             a["beta1"], a["beta2"], a["eps"])
        self.rng.bit_generator.state = state["rng"]
        self.buffer.load_state_dict(state["buffer"])

    def save(self, path: str | Path | None = None) -> Path:
        path = Path(path) if path is not None else self.out_dir / CHECKPOINT_NAME
        checkpoint.save(path, self.state_dict())
        return path

    @classmethod
    def from_checkpoint(cls, path: str | Path, out_dir: str | Path | None = None) -> "Trainer":
        state = checkpoint.load(path)
        cfg = parse_config(state["config"])
        trainer = cls(cfg, out_dir)
        trainer.load_state_dict(state)
        return trainer

    # -- loop --------------------------------------------------------------

    def _open_logs(self, resume: bool) -> None:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        keep = self.step if resume else None
        self.loss_log = CsvLog(self.out_dir / "losses.csv", LOSS_HEADER, truncate_after=keep)
        self.eval_log = CsvLog(self.out_dir / "eval.csv", EVAL_HEADER, truncate_after=keep)

    def run_pretraining(self) -> None:
        cfg = self.cfg
        log.info("pretraining: %d random episodes, %d steps", cfg.pretrain_episodes,
                 cfg.pretrain_steps)
        for _ in range(cfg.pretrain_episodes):
            seed = int(self.rng.integers(2 ** 31))
            self.buffer.store_game(random_episode(self.env, self.rng, seed))
        self.out_dir.mkdir(parents=True, exist_ok=True)
        pre_log = CsvLog(self.out_dir / "pretrain_losses.csv", LOSS_HEADER)

        def record(t, b):
            pre_log.write(t, b.total, b.reward, b.value, b.policy, b.reconstruction,
                          b.consistency, self.schedules.lr(t - 1))

        pretrain(self.model, self.opt, self.buffer, cfg.pretrain_steps, self.schedules,
                 cfg.batch_size, cfg.unroll_steps, cfg.l2_weight, callback=record,
                 scale_gradients=cfg.gradient_scaling)
        # random-play targets carry no search statistics; goal-directed training starts afresh
        self.buffer.clear()
        self.pretrained = True

    def play_episode(self) -> None:
        actor = self.model.snapshot()
        seed = int(self.rng.integers(2 ** 31))
        game = self_play_episode(actor, self.env, self.search,
                                 self.schedules.temperature(self.step), self.rng, seed)
        self.buffer.store_game(game)
        self.episodes += 1
        log.debug("episode %d: length %d", self.episodes, len(game))

    def evaluate_now(self) -> tuple[float, float]:
        mean, std = evaluate(self.model, self.eval_env, self.cfg.eval_episodes, self.search,
                             eval_seed(self.cfg, self.step))
        self.eval_log.write(self.step, mean, std)
        log.info("step %d: reward %.2f +/- %.2f", self.step, mean, std)
        return mean, std

    def run(self, until: int | None = None, resume: bool = False) -> dict:
        """Train up to step ``until`` (default: the configured total)."""
        cfg = self.cfg
        until = cfg.training_steps if until is None else min(until, cfg.training_steps)
        self._open_logs(resume)
        if not resume:
            (self.out_dir / "config.cfg").write_text(cfg.dumps())
        try:
            if not self.pretrained:
                self.run_pretraining()
            if self.step == 0 and not resume:
                self.save()
            while self.step < until:
                if self.pending == 0:
                    self.play_episode()
                    self.pending = cfg.train_steps_per_episode
                b = train_step(self.model, self.opt, self.buffer, self.weights, self.schedules,
                               self.step, cfg.batch_size, cfg.unroll_steps, cfg.l2_weight,
                               cfg.gradient_scaling)
                lr = self.schedules.lr(self.step)
                self.step += 1
                self.pending -= 1
                self.loss_log.write(self.step, b.total, b.reward, b.value, b.policy,
                                    b.reconstruction, b.consistency, lr)
                if self.step % cfg.eval_interval == 0:
                    self.evaluate_now()
                if self.step % cfg.checkpoint_interval == 0:
                    self.save()
        except KeyboardInterrupt:
            log.warning("interrupted at step %d; saving checkpoint", self.step)
            self.save()
            raise
        self.save()
        return self.summary()

    def summary(self) -> dict:
        rows = read_rows(self.out_dir / "eval.csv", EVAL_HEADER)
        mean, std, n = final_window(rows, self.cfg.training_steps, self.cfg.final_window)
        summary = {"step": self.step, "final_window": self.cfg.final_window,
                   "evaluations": n, "reward_mean": mean, "reward_std": std}
        (self.out_dir / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
        return summary
