"""Seedable environments with a shared reset/step interface.

``CartPole`` reproduces the classic cart-pole benchmark (Gym's ``CartPole-v1``
constants, explicit Euler integration, 500-step limit). ``LanderLite`` is a
one-dimensional lander that keeps the sparse +/-100 touchdown reward.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class EnvStateError(RuntimeError):
    """Raised when stepping an environment whose episode has ended."""


@dataclass
class StepResult:
    observation: np.ndarray
    reward: float
    terminal: bool


@dataclass(frozen=True)
class EnvSpec:
    obs_dim: int
    action_count: int
    max_steps: int


class Environment:
    name = "base"

    def __init__(self):
        self.state: np.ndarray | None = None
        self.steps = 0
        self.terminal = False

    def spec(self) -> EnvSpec:
        raise NotImplementedError

    def reset(self, seed: int | None = None) -> np.ndarray:
        raise NotImplementedError

    def step(self, action: int) -> StepResult:
        raise NotImplementedError

    def _check_step(self, action: int) -> None:
        if self.state is None:
            raise EnvStateError("reset() must be called before step()")
        if self.terminal:
            raise EnvStateError("episode is over; call reset()")
        if action not in range(self.spec().action_count):
            raise ValueError(f"invalid action {action!r}")


# -- cart-pole ---------------------------------------------------------------

GRAVITY = 9.8
CART_MASS = 1.0
POLE_MASS = 0.1
TOTAL_MASS = CART_MASS + POLE_MASS
HALF_LENGTH = 0.5
POLE_MASS_LENGTH = POLE_MASS * HALF_LENGTH
FORCE_MAG = 10.0
TAU = 0.02
X_THRESHOLD = 2.4
THETA_THRESHOLD = 12 * 2 * math.pi / 360


def cartpole_dynamics(state: np.ndarray, action: int) -> np.ndarray:
    """One Euler step of the frictionless cart-pole; positions use the old velocities."""
    x, x_dot, theta, theta_dot = state
    force = FORCE_MAG if action == 1 else -FORCE_MAG
    cos, sin = math.cos(theta), math.sin(theta)
    temp = (force + POLE_MASS_LENGTH * theta_dot ** 2 * sin) / TOTAL_MASS
    theta_acc = (GRAVITY * sin - cos * temp) / (
        HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos ** 2 / TOTAL_MASS))
    x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos / TOTAL_MASS
    return np.array([
        x + TAU * x_dot,
        x_dot + TAU * x_acc,
        theta + TAU * theta_dot,
        theta_dot + TAU * theta_acc,
    ])


class CartPole(Environment):
    name = "cartpole"

    def __init__(self, max_steps: int = 500):
        super().__init__()
        self.max_steps = max_steps

    def spec(self) -> EnvSpec:
        return EnvSpec(4, 2, self.max_steps)

    def reset(self, seed: int | None = None) -> np.ndarray:
        rng = np.random.default_rng(seed)
        self.state = rng.uniform(-0.05, 0.05, size=4)
        self.steps = 0
        self.terminal = False
        return self.state.copy()

    def step(self, action: int) -> StepResult:
        self._check_step(action)
        self.state = cartpole_dynamics(self.state, action)
        self.steps += 1
        x, _, theta, _ = self.state
        fallen = abs(x) > X_THRESHOLD or abs(theta) > THETA_THRESHOLD
        self.terminal = bool(fallen or self.steps >= self.max_steps)
        return StepResult(self.state.copy(), 1.0, self.terminal)


# -- 1-D lander --------------------------------------------------------------

@dataclass(frozen=True)
class LanderParams:
    gravity: float = 1.0
    thrust: float = 2.0
    dt: float = 0.1
    start_altitude: float = 10.0
    velocity_jitter: float = 0.5
    fuel: float = 30.0
    fuel_penalty: float = 0.1
    safe_speed: float = 1.0
    landing_reward: float = 100.0
    crash_reward: float = -100.0
    obs_width: int = 4
    max_steps: int = 200


class LanderLite(Environment):
    """Vertical lander: action 0 coasts, action 1 fires the engine.

    Observation is ``(altitude, velocity, fuel)`` zero-padded to ``obs_width``.
    Touching down at speed <= ``safe_speed`` pays +100, faster pays -100; each
    burning step costs ``fuel_penalty``. Thrust with an empty tank is a coast.
    """

    name = "landerlite"

    def __init__(self, params: LanderParams | None = None):
        super().__init__()
        self.params = params or LanderParams()
        if self.params.obs_width < 3:
            raise ValueError("obs_width must be at least 3")

    def spec(self) -> EnvSpec:
        return EnvSpec(self.params.obs_width, 2, self.params.max_steps)

    def _observe(self) -> np.ndarray:
        obs = np.zeros(self.params.obs_width)
        obs[:3] = self.state
        return obs

    def reset(self, seed: int | None = None) -> np.ndarray:
        p = self.params
        rng = np.random.default_rng(seed)
        v0 = rng.uniform(-p.velocity_jitter, p.velocity_jitter)
        self.state = np.array([p.start_altitude, v0, p.fuel])
        self.steps = 0
        self.terminal = False
        return self._observe()

    def step(self, action: int) -> StepResult:
        self._check_step(action)
        p = self.params
        altitude, velocity, fuel = self.state
        burning = action == 1 and fuel > 0
        accel = -p.gravity + (p.thrust if burning else 0.0)
        altitude = altitude + p.dt * velocity
        velocity = velocity + p.dt * accel
        reward = -p.fuel_penalty if burning else 0.0
        if burning:
            fuel = max(fuel - 1.0, 0.0)
        self.steps += 1
        if altitude <= 0.0:
            altitude = 0.0
            reward += p.landing_reward if abs(velocity) <= p.safe_speed else p.crash_reward
            self.terminal = True
        elif self.steps >= p.max_steps:
            self.terminal = True
        self.state = np.array([altitude, velocity, fuel])
        return StepResult(self._observe(), reward, self.terminal)


ENVIRONMENTS = {"cartpole": CartPole, "landerlite": LanderLite}


def make_env(name: str) -> Environment:
    try:
        return ENVIRONMENTS[name]()
    except KeyError:
        raise ValueError(f"unknown environment {name!r}; choose from {sorted(ENVIRONMENTS)}")


def env_spec(env: Environment) -> EnvSpec:
    return env.spec()
