"""Episode storage, prioritized position sampling and K-step training targets."""
from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np


class EmptyBufferError(RuntimeError):
    pass


@dataclass
class GameHistory:
    """One episode. ``rewards[i]`` and ``actions[i]`` belong to the transition
    out of ``observations[i]``; ``policies``/``values`` are the search outputs
    at each non-terminal position.
    """

    observations: list[np.ndarray] = field(default_factory=list)
    actions: list[int] = field(default_factory=list)
    rewards: list[float] = field(default_factory=list)
    policies: list[np.ndarray] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    priorities: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.actions)

    def validate(self, action_count: int | None = None) -> None:
        n = len(self.actions)
        if len(self.observations) != n + 1:
            raise ValueError("need exactly one more observation than actions")
        if len(self.rewards) != n or len(self.policies) != n or len(self.values) != n:
            raise ValueError("actions, rewards, policies and values must have equal length")
        if n == 0:
            raise ValueError("empty game")
        for pi in self.policies:
            if abs(float(np.sum(pi)) - 1.0) > 1e-6 or np.any(np.asarray(pi) < 0):
                raise ValueError("every stored policy must be a probability vector")
        if action_count is not None:
            if any(not 0 <= a < action_count for a in self.actions):
                raise ValueError("action index out of range")
            if any(len(pi) != action_count for pi in self.policies):
                raise ValueError("policy length does not match the action count")


def compute_z(game: GameHistory, t: int, n: int, gamma: float) -> float:
    """n-step bootstrapped return from position ``t``.

    Rewards past the final transition are absent and the stored search value
    is only used when position ``t + n`` exists; the terminal position is 0.
    """
    T = len(game)
    if not 0 <= t <= T:
        raise IndexError(f"position {t} outside [0, {T}]")
    z = 0.0
    for i in range(min(n, T - t)):
        z += gamma ** i * game.rewards[t + i]
    if t + n < T:
        z += gamma ** n * game.values[t + n]
    return z


def value_targets(game: GameHistory, n: int, gamma: float) -> np.ndarray:
    """``compute_z`` for every position ``0..T`` (the last entry is the terminal 0)."""
    return np.array([compute_z(game, t, n, gamma) for t in range(len(game) + 1)])


@dataclass
class TrainingBatch:
    """Stacked targets for ``B`` sampled positions unrolled ``K`` steps.

    Step ``k`` of row ``b`` refers to position ``t_b + k``; steps past the end of
    the episode are absorbing: reward and value targets 0, uniform policy.
    ``mask`` is 0 there, since no observation exists to reconstruct or encode.
    ``actions[:, k-1]`` is the action unrolled into step ``k``.
    """

    observations: np.ndarray  # (B, K+1, obs_dim)
    actions: np.ndarray  # (B, K) int
    rewards: np.ndarray  # (B, K+1); column 0 unused
    values: np.ndarray  # (B, K+1)
    policies: np.ndarray  # (B, K+1, A)
    mask: np.ndarray  # (B, K+1)
    game_ids: np.ndarray  # (B,)
    positions: np.ndarray  # (B,)

    def __len__(self) -> int:
        return len(self.positions)

    @property
    def unroll_steps(self) -> int:
        return self.actions.shape[1]

    def row(self, i: int) -> "TrainingBatch":
        sl = slice(i, i + 1)
        return TrainingBatch(self.observations[sl], self.actions[sl], self.rewards[sl],
                             self.values[sl], self.policies[sl], self.mask[sl],
                             self.game_ids[sl], self.positions[sl])


class _StoredGame:
    __slots__ = ("game", "obs", "rewards", "policies", "actions", "z", "priorities")

    def __init__(self, game: GameHistory, td_steps: int, gamma: float):
        self.game = game
        self.obs = np.asarray(game.observations, dtype=np.float64)
        self.rewards = np.asarray(game.rewards, dtype=np.float64)
        self.policies = np.asarray(game.policies, dtype=np.float64)
        self.actions = np.asarray(game.actions, dtype=np.int64)
        self.z = value_targets(game, td_steps, gamma)
        self.priorities = game.priorities


class ReplayBuffer:
    """Bounded FIFO of games with per-position prioritized sampling.

    Positions are drawn with probability proportional to
    ``priority ** priority_exponent``. A game gets priorities
    ``|search value - z|`` when stored; training replaces them with
    ``|predicted value - z|``. Mutating calls are serialized by a lock.
    """

    def __init__(self, capacity: int, td_steps: int, discount: float, action_count: int,
                 priority_exponent: float = 0.5, rng: np.random.Generator | None = None):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.td_steps = td_steps
        self.discount = discount
        self.action_count = action_count
        self.priority_exponent = priority_exponent
        self.rng = rng if rng is not None else np.random.default_rng()
        self.games: OrderedDict[int, _StoredGame] = OrderedDict()
        self.next_id = 0
        self.total_steps = 0
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.games)

    def store_game(self, game: GameHistory) -> int:
        game.validate(self.action_count)
        stored = _StoredGame(game, self.td_steps, self.discount)
        if game.priorities is None:
            stored.priorities = np.abs(np.asarray(game.values) - stored.z[:-1])
            game.priorities = stored.priorities
        else:
            stored.priorities = np.asarray(game.priorities, dtype=np.float64)
        with self._lock:
            gid = self.next_id
            self.next_id += 1
            self.games[gid] = stored
            self.total_steps += len(game)
            while len(self.games) > self.capacity:
                self.games.popitem(last=False)
        return gid

    def clear(self) -> None:
        with self._lock:
            self.games.clear()

    def sampling_probabilities(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(game ids, positions, probabilities) over every stored position."""
        ids = np.concatenate([np.full(len(s.priorities), gid) for gid, s in self.games.items()])
        pos = np.concatenate([np.arange(len(s.priorities)) for s in self.games.values()])
        pri = np.concatenate([s.priorities for s in self.games.values()])
        weights = pri ** self.priority_exponent
        total = weights.sum()
        if total > 0:
            probs = weights / total
        else:
            probs = np.full(len(weights), 1.0 / len(weights))
        return ids, pos, probs

    def sample_batch(self, batch_size: int, unroll_steps: int) -> TrainingBatch:
        with self._lock:
            if not self.games:
                raise EmptyBufferError("cannot sample from an empty replay buffer")
            ids, pos, probs = self.sampling_probabilities()
            draws = self.rng.choice(len(probs), size=batch_size, p=probs)
            game_ids, positions = ids[draws], pos[draws]
            rows = [self._target(self.games[g], t, unroll_steps)
                    for g, t in zip(game_ids, positions)]
        return TrainingBatch(
            observations=np.stack([r[0] for r in rows]),
            actions=np.stack([r[1] for r in rows]),
            rewards=np.stack([r[2] for r in rows]),
            values=np.stack([r[3] for r in rows]),
            policies=np.stack([r[4] for r in rows]),
            mask=np.stack([r[5] for r in rows]),
            game_ids=game_ids,
            positions=positions,
        )

    def _target(self, s: _StoredGame, t: int, K: int):
        T = len(s.actions)
        idx = t + np.arange(K + 1)
        valid = idx <= T
        clipped = np.minimum(idx, T)
        obs = s.obs[clipped]
        rewards = np.zeros(K + 1)
        # step k is reached by the transition out of position t + k - 1
        k_ok = idx[1:] <= T
        rewards[1:][k_ok] = s.rewards[idx[1:][k_ok] - 1]
        values = np.where(valid, s.z[clipped], 0.0)
        policies = np.full((K + 1, self.action_count), 1.0 / self.action_count)
        has_pi = idx < T
        policies[has_pi] = s.policies[idx[has_pi]]
        actions = self.rng.integers(0, self.action_count, size=K)
        actions[k_ok] = s.actions[idx[1:][k_ok] - 1]
        return obs, actions, rewards, values, policies, valid.astype(np.float64)

    def update_priorities(self, game_ids, positions, errors) -> None:
        with self._lock:
            for g, t, e in zip(game_ids, positions, errors):
                stored = self.games.get(int(g))
                if stored is not None:
                    stored.priorities[int(t)] = abs(float(e))

    def value_targets_for(self, game_ids, positions) -> np.ndarray:
        return np.array([self.games[int(g)].z[int(t)] for g, t in zip(game_ids, positions)])

    # -- persistence -----------------------------------------------------

    def state_dict(self) -> dict:
        return {
            "next_id": self.next_id,
            "total_steps": self.total_steps,
            "rng": self.rng.bit_generator.state,
            "games": [
                {"id": gid, "observations": s.obs, "actions": s.actions,
                 "rewards": s.rewards, "policies": s.policies,
                 "values": np.asarray(s.game.values, dtype=np.float64),
                 "priorities": np.asarray(s.priorities, dtype=np.float64)}
                for gid, s in self.games.items()],
        }

    def load_state_dict(self, state: dict) -> None:
        with self._lock:
            self.games.clear()
            for g in state["games"]:
                game = GameHistory(
                    observations=list(g["observations"]),
                    actions=[int(a) for a in g["actions"]],
                    rewards=[float(r) for r in g["rewards"]],
                    policies=list(g["policies"]),
                    values=[float(v) for v in g["values"]],
                    priorities=np.array(g["priorities"], dtype=np.float64),
                )
                self.games[int(g["id"])] = _StoredGame(game, self.td_steps, self.discount)
            self.next_id = int(state["next_id"])
            self.total_steps = int(state["total_steps"])
            self.rng.bit_generator.state = state["rng"]
