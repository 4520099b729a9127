import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from muzero_aux.model import ModelConfig, init_params  # noqa: E402
from muzero_aux.replay import GameHistory  # noqa: E402

SMALL = ModelConfig(obs_dim=4, action_count=2, state_dim=8, hidden=(16,))


def central_difference(f, theta, indices, step=1e-6):
    """Central finite differences of scalar ``f`` w.r.t. ``theta[indices]`` (restores theta)."""
    out = np.empty(len(indices))
    for j, i in enumerate(indices):
        orig = theta[i]
        theta[i] = orig + step
        hi = f()
        theta[i] = orig - step
        lo = f()
        theta[i] = orig
        out[j] = (hi - lo) / (2 * step)
    return out


def rel_error(a, b, floor=1e-5):
    """Elementwise ``|a - b| / max(|a|, |b|, floor)``; the floor absorbs roundoff near 0."""
    a, b = np.asarray(a), np.asarray(b)
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def random_game(rng, length, obs_dim=4, action_count=2, terminal=True):
    game = GameHistory()
    for _ in range(length):
        game.observations.append(rng.normal(size=obs_dim))
        game.actions.append(int(rng.integers(action_count)))
        game.rewards.append(float(rng.normal()))
        game.policies.append(rng.dirichlet(np.ones(action_count)))
        game.values.append(float(rng.normal()))
    game.observations.append(rng.normal(size=obs_dim))
    return game


@pytest.fixture
def small_model():
    return init_params(0, SMALL)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
