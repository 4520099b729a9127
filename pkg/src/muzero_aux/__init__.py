"""MuZero with reconstruction and consistency losses, on a small numpy substrate."""
from .config import RunConfig, load_config, load_preset
from .envs import CartPole, LanderLite, make_env
from .model import ModelConfig, MuZeroNet, init_params
from .planner import exhaustive_plan, run_mcts
from .replay import GameHistory, ReplayBuffer, compute_z
from .trainer import (LossBreakdown, LossWeights, Schedules, SearchParams, compute_losses,
                      evaluate, pretrain, self_play_episode, train_step)

__version__ = "0.1.0"
