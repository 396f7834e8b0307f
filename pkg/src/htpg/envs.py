"""Episodic one-dimensional car environments driven by pure step functions.

Both environments are value types: ``step`` never mutates, it maps
(state, action) to a :class:`StepResult`.  Parallel episodes need nothing
more than independent states and random streams.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import EnvUsageError, ParameterError
from .policy import PolicyParams, features, sample_action

__all__ = [
    "EnvSpec",
    "EnvState",
    "StepResult",
    "Trajectory",
    "TrappedCar",
    "MountainCar",
    "rollout",
]


@dataclass(frozen=True, slots=True)
class EnvSpec:
    """Bounds, reward ceiling, and episode budget shared by the car family."""

    state_low: float
    state_high: float
    action_low: float
    action_high: float
    init_low: float
    init_high: float
    gamma: float
    reward_bound: float
    max_steps: int

    def __post_init__(self) -> None:
        if not self.state_low < self.state_high:
            raise ParameterError("state_low must be below state_high")
        if not self.action_low < self.action_high:
            raise ParameterError("action_low must be below action_high")
        if not (self.state_low <= self.init_low <= self.init_high <= self.state_high):
            raise ParameterError("initial interval must sit inside the state interval")
        if not 0.0 < self.gamma < 1.0:
            raise ParameterError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not self.reward_bound > 0.0:
            raise ParameterError("reward_bound must be positive")
        if self.max_steps < 1:
            raise ParameterError("max_steps must be at least 1")

    def clamp_action(self, a: float) -> float:
        return min(max(a, self.action_low), self.action_high)


@dataclass(frozen=True, slots=True)
class EnvState:
    position: float
    velocity: float
    step_count: int = 0
    terminal: bool = False


@dataclass(frozen=True, slots=True)
class StepResult:
    next_state: EnvState
    reward: float
    done: bool


@dataclass(frozen=True, slots=True)
class Trajectory:
    """One rollout: the state each action was taken in, the (clamped) action,
    and the reward it earned, plus the state the rollout ended in."""

    states: tuple
    actions: tuple
    rewards: tuple
    final_state: EnvState
    reached_terminal: bool

    def __len__(self) -> int:
        return len(self.actions)

    def total_return(self) -> float:
        return float(sum(self.rewards))


DEFAULT_TRAPPED_SPEC = EnvSpec(
    state_low=-4.0,
    state_high=3.709,
    action_low=-20.0,
    action_high=20.0,
    init_low=1.15,
    init_high=2.0,
    gamma=0.97,
    reward_bound=100.0,
    max_steps=500,
)

DEFAULT_MOUNTAIN_SPEC = EnvSpec(
    state_low=-1.2,
    state_high=0.6,
    action_low=-1.0,
    action_high=1.0,
    init_low=-0.6,
    init_high=-0.4,
    gamma=0.97,
    reward_bound=1.0,
    max_steps=999,
)


@dataclass(frozen=True)
class TrappedCar:
    """Car resting in a gravity well, with a large terminal reward past the
    right-hand hill and a small per-step reward inside a misleading region
    near the left wall.

    Geometry (with the default force field -gravity*cos(3x)): the start
    interval [1.15, 2.0] sits in the stable well around pi/2, the true goal
    at 3.6 lies in the next well to the right, and the misleading region
    covers the well around -5pi/6 ~ -2.618.  ``false_start`` is that well's
    bottom, so a misleading-start episode begins with the full barrier
    height between it and the rest of the track.  ``basin_exit`` marks the
    hilltop (-pi/2) separating the misleading basin from the track; an
    episode counts as having left the basin once its position reaches it.
    All constants are overridable.
    """

    spec: EnvSpec = DEFAULT_TRAPPED_SPEC
    thrust_gain: float = 0.001
    gravity: float = 0.0025
    max_speed: float = 0.5
    true_goal: float = 3.6
    true_reward: float = 100.0
    false_low: float = -4.0
    false_high: float = -2.2
    false_reward: float = 0.1
    false_start: float = -2.6
    basin_exit: float = -1.5
    start_at_false_goal: bool = False

    def reset(self, rng, start_at_false_goal: bool | None = None) -> EnvState:
        begin_false = (
            self.start_at_false_goal if start_at_false_goal is None else start_at_false_goal
        )
        if begin_false:
            return EnvState(self.false_start, 0.0)
        span = self.spec.init_high - self.spec.init_low
        return EnvState(self.spec.init_low + span * rng.random(), 0.0)

    def step(self, state: EnvState, action: float) -> StepResult:
        if state.terminal:
            raise EnvUsageError("step() called on a terminal state")
        spec = self.spec
        a = spec.clamp_action(action)
        v = state.velocity + self.thrust_gain * a - self.gravity * math.cos(3.0 * state.position)
        v = min(max(v, -self.max_speed), self.max_speed)
        x = state.position + v
        if x <= spec.state_low:
            x, v = spec.state_low, 0.0
        elif x >= spec.state_high:
            x, v = spec.state_high, 0.0
        at_goal = x >= self.true_goal
        if at_goal:
            reward = self.true_reward
        elif self.false_low <= x <= self.false_high:
            reward = self.false_reward
        else:
            reward = 0.0
        steps = state.step_count + 1
        done = at_goal or steps >= spec.max_steps
        return StepResult(EnvState(x, v, steps, done), reward, done)

    def at_goal(self, state: EnvState) -> bool:
        return state.position >= self.true_goal

    def outside_basin(self, state: EnvState) -> bool:
        return state.position >= self.basin_exit


@dataclass(frozen=True)
class MountainCar:
    """Continuous mountain car: -1 per step while between the hills, episode
    ends on reaching the goal height or on the step budget."""

    spec: EnvSpec = DEFAULT_MOUNTAIN_SPEC
    thrust_gain: float = 0.0015
    gravity: float = 0.0025
    max_speed: float = 0.07
    goal_position: float = 0.45

    def reset(self, rng) -> EnvState:
        span = self.spec.init_high - self.spec.init_low
        return EnvState(self.spec.init_low + span * rng.random(), 0.0)

    def step(self, state: EnvState, action: float) -> StepResult:
        if state.terminal:
            raise EnvUsageError("step() called on a terminal state")
        spec = self.spec
        a = spec.clamp_action(action)
        v = state.velocity + self.thrust_gain * a - self.gravity * math.cos(3.0 * state.position)
        v = min(max(v, -self.max_speed), self.max_speed)
        x = state.position + v
        if x <= spec.state_low:
            x, v = spec.state_low, 0.0
        elif x >= spec.state_high:
            x, v = spec.state_high, 0.0
        at_goal = x >= self.goal_position
        reward = 0.0 if at_goal else -1.0
        steps = state.step_count + 1
        done = at_goal or steps >= spec.max_steps
        return StepResult(EnvState(x, v, steps, done), reward, done)

    def at_goal(self, state: EnvState) -> bool:
        return state.position >= self.goal_position


def rollout(env, policy: PolicyParams, rng, horizon: int) -> Trajectory:
    """Simulate one episode of at most ``horizon`` transitions.

    Actions are sampled from the policy at each visited state, clamped to the
    action bounds, and recorded as executed (post-clamp).
    """
    if horizon < 1:
        raise ParameterError(f"horizon must be at least 1, got {horizon}")
    state = env.reset(rng)
    states: list[EnvState] = []
    actions: list[float] = []
    rewards: list[float] = []
    for _ in range(horizon):
        s = features((state.position, state.velocity))
        a = env.spec.clamp_action(sample_action(policy, s, rng))
        result = env.step(state, a)
        states.append(state)
        actions.append(a)
        rewards.append(result.reward)
        state = result.next_state
        if result.done:
            break
    return Trajectory(tuple(states), tuple(actions), tuple(rewards), state, state.terminal)
