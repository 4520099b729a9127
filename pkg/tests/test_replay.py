import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from muzero_aux.replay import (EmptyBufferError, GameHistory, ReplayBuffer, compute_z,
                               value_targets)

from conftest import random_game


def game_with(rewards, values, action_count=2):
    game = GameHistory()
    for r, v in zip(rewards, values):
        game.observations.append(np.zeros(4))
        game.actions.append(0)
        game.rewards.append(float(r))
        game.values.append(float(v))
        game.policies.append(np.full(action_count, 1.0 / action_count))
    game.observations.append(np.zeros(4))
    return game


def buffer(capacity=10, td_steps=5, discount=0.9, seed=0):
    return ReplayBuffer(capacity, td_steps, discount, 2, 0.5, np.random.default_rng(seed))


def three_sigma(p, n):
    return 3 * np.sqrt(p * (1 - p) / n)


# -- n-step returns ---------------------------------------------------------

def test_compute_z_example():
    game = game_with([1, 2, 0.5], [0.0, 0.0, 3.0])
    assert compute_z(game, 0, 2, 0.9) == pytest.approx(5.23, abs=1e-12)


def test_compute_z_truncates_at_terminal():
    game = game_with([4, 7], [10.0, 10.0])
    assert compute_z(game, 1, 5, 0.9) == 7.0
    assert compute_z(game, 2, 5, 0.9) == 0.0


def test_compute_z_zero_discount():
    game = game_with([3, -1, 2, 5], [9, 9, 9, 9])
    for t in range(4):
        assert compute_z(game, t, 3, 0.0) == game.rewards[t]


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 40), st.integers(1, 60), st.data())
def test_compute_z_counts_steps_at_unit_discount(T, n, data):
    t = data.draw(st.integers(0, T - 1))
    game = game_with([1.0] * T, [0.0] * T)
    assert compute_z(game, t, n, 1.0) == min(n, T - t)


def test_value_targets_end_with_terminal_zero():
    game = game_with([1, 1, 1], [5, 5, 5])
    z = value_targets(game, 2, 0.5)
    np.testing.assert_allclose(z, [1 + 0.5 + 0.25 * 5, 1.5, 1.0, 0.0])


# -- storage ----------------------------------------------------------------

def test_store_and_evict_oldest():
    buf = buffer(capacity=500)
    rng = np.random.default_rng(0)
    first = buf.store_game(random_game(rng, 3))
    assert len(buf) == 1
    for _ in range(499):
        buf.store_game(random_game(rng, 3))
    assert len(buf) == 500 and first in buf.games
    buf.store_game(random_game(rng, 3))
    assert len(buf) == 500
    assert first not in buf.games and first + 1 in buf.games


def test_initial_priorities_are_value_errors():
    game = game_with([1, 1, 1], [0.5, 4.0, 1.0])
    buf = buffer(td_steps=1, discount=1.0)
    buf.store_game(game)
    np.testing.assert_allclose(game.priorities, [abs(0.5 - 4.0 - 1), abs(4.0 - 2.0), 0.0])
    assert np.all(game.priorities >= 0)


def test_malformed_games_rejected():
    buf = buffer()
    bad = game_with([1, 1], [0, 0])
    bad.observations.pop()
    with pytest.raises(ValueError):
        buf.store_game(bad)
    bad = game_with([1], [0])
    bad.policies[0] = np.array([0.7, 0.7])
    with pytest.raises(ValueError):
        buf.store_game(bad)
    bad = game_with([1], [0])
    bad.actions[0] = 5
    with pytest.raises(ValueError):
        buf.store_game(bad)


# -- sampling ---------------------------------------------------------------

def test_priority_exponent_example():
    buf = buffer()
    game = game_with([1, 1], [0, 0])
    game.priorities = np.array([4.0, 1.0])
    buf.store_game(game)
    _, pos, probs = buf.sampling_probabilities()
    np.testing.assert_allclose(probs[np.argsort(pos)], [2 / 3, 1 / 3])


def test_equal_priorities_sample_uniformly():
    buf = buffer(seed=3)
    for _ in range(2):
        game = game_with([1] * 5, [0] * 5)
        game.priorities = np.ones(5)
        buf.store_game(game)
    batch = buf.sample_batch(10_000, 1)
    keys = batch.game_ids * 5 + batch.positions
    freq = np.bincount(keys, minlength=10) / 10_000
    assert np.all(np.abs(freq - 0.1) < three_sigma(0.1, 10_000))


def test_all_zero_priorities_fall_back_to_uniform():
    buf = buffer()
    game = game_with([1, 1, 1], [0, 0, 0])
    game.priorities = np.zeros(3)
    buf.store_game(game)
    np.testing.assert_allclose(buf.sampling_probabilities()[2], np.full(3, 1 / 3))


def test_zero_priority_positions_never_drawn():
    buf = buffer()
    game = game_with([1, 1, 1], [0, 0, 0])
    game.priorities = np.array([0.0, 2.0, 0.0])
    buf.store_game(game)
    assert set(buf.sample_batch(500, 2).positions) == {1}


def test_batch_size_and_shapes():
    buf = buffer(seed=1)
    rng = np.random.default_rng(1)
    for _ in range(5):
        buf.store_game(random_game(rng, int(rng.integers(1, 30))))
    batch = buf.sample_batch(128, 10)
    assert len(batch) == 128
    assert batch.observations.shape == (128, 11, 4)
    assert batch.actions.shape == (128, 10)
    assert batch.policies.shape == (128, 11, 2)
    assert batch.mask.shape == (128, 11)
    for g, t in zip(batch.game_ids, batch.positions):
        assert 0 <= t < len(buf.games[g].game)


def test_empty_buffer():
    with pytest.raises(EmptyBufferError):
        buffer().sample_batch(4, 2)


def test_update_priorities_locality_and_stale_ids():
    buf = buffer(capacity=1)
    old = buf.store_game(game_with([1, 1, 1], [0, 0, 0]))
    game = game_with([1, 1, 1], [0, 0, 0])
    gid = buf.store_game(game)
    before = game.priorities.copy()
    buf.update_priorities([gid, old], [1, 0], [-2.5, 9.0])
    assert game.priorities[1] == 2.5
    assert game.priorities[0] == before[0] and game.priorities[2] == before[2]


def test_priority_update_shifts_sampling():
    buf = buffer(seed=9)
    game = game_with([1, 1], [0, 0])
    game.priorities = np.ones(2)
    gid = buf.store_game(game)
    buf.update_priorities([gid, gid], [0, 1], [1.0, 9.0])
    # sqrt(1) : sqrt(9) -> 1/4 : 3/4
    freq = np.mean(buf.sample_batch(20_000, 1).positions == 1)
    assert abs(freq - 0.75) < three_sigma(0.75, 20_000)


# -- targets ------------------------------------------------------------------

def test_targets_inside_episode():
    rng = np.random.default_rng(4)
    game = random_game(rng, 20)
    buf = ReplayBuffer(5, 3, 0.9, 2, 0.5, rng)
    gid = buf.store_game(game)
    obs, actions, rewards, values, policies, mask = buf._target(buf.games[gid], 4, 5)
    z = value_targets(game, 3, 0.9)
    np.testing.assert_array_equal(obs, np.array(game.observations[4:10]))
    np.testing.assert_array_equal(actions, game.actions[4:9])
    np.testing.assert_array_equal(rewards[1:], game.rewards[4:9])
    np.testing.assert_array_equal(values, z[4:10])
    np.testing.assert_array_equal(policies, np.array(game.policies[4:10]))
    assert np.all(mask == 1)


def test_absorbing_targets_past_episode_end():
    rng = np.random.default_rng(5)
    game = random_game(rng, 6)
    buf = ReplayBuffer(5, 10, 0.9, 2, 0.5, rng)
    gid = buf.store_game(game)
    obs, actions, rewards, values, policies, mask = buf._target(buf.games[gid], 4, 5)
    T = 6
    # steps k = 0..5 refer to positions 4..9; position 6 is the terminal observation
    np.testing.assert_array_equal(mask, [1, 1, 1, 0, 0, 0])
    np.testing.assert_array_equal(rewards[1:3], game.rewards[4:6])
    assert np.all(rewards[3:] == 0)
    assert values[2] == 0 and np.all(values[3:] == 0)
    np.testing.assert_array_equal(obs[2], game.observations[T])
    np.testing.assert_allclose(policies[2:], 0.5)
    assert np.all(policies.sum(axis=1) == pytest.approx(1.0))
    assert np.all((actions >= 0) & (actions < 2))


def test_state_dict_round_trip():
    rng = np.random.default_rng(6)
    buf = ReplayBuffer(3, 5, 0.99, 2, 0.5, np.random.default_rng(1))
    for _ in range(4):
        buf.store_game(random_game(rng, 7))
    copy = ReplayBuffer(3, 5, 0.99, 2, 0.5, np.random.default_rng(99))
    copy.load_state_dict(buf.state_dict())
    a, b = buf.sample_batch(16, 3), copy.sample_batch(16, 3)
    for name in ("observations", "actions", "rewards", "values", "policies", "mask",
                 "game_ids", "positions"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
