"""Unbiased Monte-Carlo Q estimates over a geometric random horizon.

The estimator truncates a rollout at T ~ Geom(1 - sqrt(gamma)) and weights
the reward at step t by gamma**(t/2).  Since P(T >= t) = gamma**(t/2), the
expectation of the weighted sum telescopes to the ordinary discounted Q.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError
from .policy import PolicyParams, features, sample_action

__all__ = ["QEstimate", "draw_horizon", "estimate_q", "discounted_partial_return"]


@dataclass(frozen=True, slots=True)
class QEstimate:
    """One Q sample and the geometric horizon it was drawn with.

    ``value`` always satisfies |value| <= U_R / (1 - sqrt(gamma)) when every
    reward is bounded by U_R.
    """

    value: float
    horizon_drawn: int


def draw_horizon(gamma: float, rng, size: int | None = None):
    """Draw T with P(T = t) = (1 - sqrt(gamma)) * gamma**(t/2), t = 0, 1, ...

    ``size=None`` returns one int; an integer ``size`` returns an array of
    draws (bulk path for diagnostics).
    """
    if not 0.0 < gamma < 1.0:
        raise ParameterError(f"gamma must lie in (0, 1), got {gamma}")
    p = 1.0 - math.sqrt(gamma)
    if size is None:
        return int(rng.geometric(p)) - 1
    return rng.geometric(p, size=size) - 1


def discounted_partial_return(rewards, gamma: float, horizon: int) -> float:
    """sum_{t=0}^{horizon} gamma**(t/2) * rewards[t], truncated at the data."""
    total = 0.0
    for t, r in enumerate(rewards[: horizon + 1]):
        total += gamma ** (0.5 * t) * r
    return total


def estimate_q(env, policy: PolicyParams, s0, a0: float, gamma: float, rng,
               horizon: int | None = None) -> QEstimate:
    """One unbiased Q sample for (s0, a0) under ``policy``.

    Executes a0 first, then follows the policy until the drawn horizon, a
    terminal state, or the environment step budget, whichever comes first.
    ``horizon`` overrides the geometric draw (test hook).
    """
    drawn = draw_horizon(gamma, rng) if horizon is None else int(horizon)
    if drawn < 0:
        raise ParameterError(f"horizon must be non-negative, got {drawn}")
    spec = env.spec
    last = min(drawn, spec.max_steps)
    state = s0
    action = spec.clamp_action(a0)
    total = 0.0
    for t in range(last + 1):
        result = env.step(state, action)
        total += gamma ** (0.5 * t) * result.reward
        if result.done:
            break
        state = result.next_state
        action = spec.clamp_action(
            sample_action(policy, features((state.position, state.velocity)), rng)
        )
    return QEstimate(total, drawn)
