"""Trainer checks: schedules, update rules, an exact hand-trace of one update
on a single-transition environment, determinism, and the divergence guard."""

import math
from dataclasses import dataclass

import numpy as np
import pytest

from htpg.envs import EnvSpec, EnvState, StepResult, TrappedCar
from htpg.errors import ParameterError, ScheduleError
from htpg.policy import ADAPTIVE, FIXED, PolicyParams, clip_score, features, param_vector, score
from htpg.training import (
    Constant,
    LinearRange,
    LipschitzAware,
    PlainAscent,
    PowerDecay,
    TrainConfig,
    apply_update,
    step_size,
    train,
)


@dataclass(frozen=True)
class OneStepEnv:
    """Single transition, reward v, then terminal."""

    reward: float = 1.0
    start: float = 0.5
    spec: EnvSpec = EnvSpec(-10, 10, -5, 5, 0.5, 0.5, 0.9, 1e9, 1)

    def reset(self, rng) -> EnvState:
        return EnvState(self.start, 0.0)

    def step(self, state, action):
        if state.terminal:
            raise RuntimeError("terminal")
        return StepResult(EnvState(state.position, 0.0, 1, True), self.reward, True)

    def at_goal(self, state) -> bool:
        return False


def test_step_size_power_decay():
    assert step_size(PowerDecay(0.5), 1) == 1.0
    assert step_size(PowerDecay(0.5), 4) == 0.5
    with pytest.raises(ParameterError):
        step_size(PowerDecay(0.5), 0)
    with pytest.raises(ParameterError):
        PowerDecay(1.5)


def test_step_size_linear_range_endpoints():
    rule = LinearRange(0.005, 5e-9, 1000)
    assert step_size(rule, 1) == 0.005
    assert step_size(rule, 1000) == 5e-9
    assert step_size(rule, 5000) == 5e-9
    # Log-linear midpoint: geometric mean of the endpoints at the middle index.
    mid = step_size(rule, 500)
    lo, hi = sorted((step_size(rule, 499), step_size(rule, 501)))
    assert lo < mid < hi
    assert math.log(step_size(rule, 1) / step_size(rule, 2)) == pytest.approx(
        math.log(step_size(rule, 500) / step_size(rule, 501)), rel=1e-6
    )


def test_step_size_constant():
    assert step_size(Constant(0.25), 7) == 0.25


@pytest.mark.parametrize("rule", [PowerDecay(0.75), LinearRange(0.1, 1e-6, 500)])
def test_step_size_non_increasing(rule):
    vals = [step_size(rule, k) for k in range(1, 700)]
    assert all(a >= b for a, b in zip(vals, vals[1:]))


def test_power_decay_series_trends():
    # For b in (0.5, 1): partial sums of alpha_k diverge while partial sums of
    # alpha_k^2 stay bounded by the analytic tail integral.
    b = 0.75
    k = np.arange(1, 100_001, dtype=float)
    alpha = k ** -b
    s1 = np.cumsum(alpha)
    s2 = np.cumsum(alpha ** 2)
    assert s1[-1] / s1[9_999] > 1.5  # keeps growing like N^(1-b)
    tail_bound = 2.0 * (10_000.0) ** -0.5  # integral of x^(-1.5) from 1e4
    assert s2[-1] - s2[9_999] < tail_bound
    assert s2[-1] < 1.0 + 2.0  # 1 + integral of x^(-1.5) from 1


def test_apply_update_plain():
    out = apply_update(np.zeros(2), np.array([1.0, -2.0]), PlainAscent(), 0.1)
    assert np.allclose(out, [0.1, -0.2])


def test_apply_update_lipschitz():
    out = apply_update(np.zeros(1), np.array([1.0]), LipschitzAware(1.0), 0.1)
    assert out[0] == pytest.approx(1.0 / 9.0)
    with pytest.raises(ScheduleError):
        apply_update(np.zeros(1), np.ones(1), LipschitzAware(3.0), 0.5)


def test_apply_update_lipschitz_zero_limit_matches_plain():
    # Power-of-two step keeps both paths exact in floating point.
    theta, g = np.array([0.5, -1.5]), np.array([2.0, 3.0])
    tiny = apply_update(theta, g, LipschitzAware(1e-300), 0.125)
    plain = apply_update(theta, g, PlainAscent(), 0.125)
    assert np.array_equal(tiny, plain)


def test_train_config_validation():
    env = OneStepEnv()
    pol = PolicyParams.zeros(3, alpha=1.0)
    with pytest.raises(ParameterError):
        TrainConfig(env=env, policy_init=pol, episodes=-1, seed=0)
    with pytest.raises(ParameterError):
        TrainConfig(env=env, policy_init=pol, episodes=1, seed=0, gamma=1.0)
    with pytest.raises(ParameterError):
        TrainConfig(env=env, policy_init=pol, episodes=1, seed=0, epsilon_clip=1.0)
    with pytest.raises(ParameterError):
        TrainConfig(env=env, policy_init=pol, episodes=1, seed=0, q_mode="bogus")
    # Lipschitz-aware updates must be feasible at the schedule's maximum.
    with pytest.raises(ScheduleError):
        TrainConfig(env=env, policy_init=pol, episodes=1, seed=0,
                    step_rule=Constant(0.5), update_rule=LipschitzAware(4.0))


def test_train_zero_episodes_empty_metrics():
    cfg = TrainConfig(env=OneStepEnv(), policy_init=PolicyParams.zeros(3, alpha=1.0),
                      episodes=0, seed=0)
    m = train(cfg)
    assert m.returns == [] and m.moving_avg_100 == []
    assert m.wall_updates == 0 and not m.diverged


def test_train_one_step_hand_trace():
    # Single transition, R = 1.  Whatever horizon is drawn, q_hat = 1 and the
    # single update must be exactly theta + alpha_1 * 1 * clip(score).
    env = OneStepEnv(reward=1.0)
    pol = PolicyParams.zeros(3, alpha=1.0, scale_mode=ADAPTIVE)
    alpha_1 = 0.05
    cfg = TrainConfig(env=env, policy_init=pol, episodes=1, seed=42, gamma=0.9,
                      epsilon_clip=0.2, step_rule=Constant(alpha_1))
    m = train(cfg)

    rng = np.random.default_rng(42)
    from htpg.envs import rollout

    traj = rollout(env, pol, rng, env.spec.max_steps)
    s = features((traj.states[0].position, traj.states[0].velocity))
    g = clip_score(score(pol, s, traj.actions[0]), 0.2)
    expected = param_vector(pol) + alpha_1 * 1.0 * g
    assert np.array_equal(param_vector(m.final_policy), expected)
    assert m.wall_updates == 1
    assert m.returns == [1.0]
    assert m.update_counts == [1]


def test_train_unclipped_when_scores_small():
    # With every score component at most 1 + eps the clip is the identity and
    # training matches a reference loop without the clip.
    env = OneStepEnv(reward=0.5)
    pol = PolicyParams.zeros(3, alpha=1.0)
    cfg = TrainConfig(env=env, policy_init=pol, episodes=5, seed=3,
                      step_rule=Constant(0.01))
    m = train(cfg)

    rng = np.random.default_rng(3)
    from htpg.envs import rollout
    from htpg.policy import with_param_vector
    from htpg.qvalue import discounted_partial_return, draw_horizon

    ref_pol = pol
    vec = param_vector(pol)
    for _ in range(5):
        traj = rollout(env, ref_pol, rng, env.spec.max_steps)
        drawn = draw_horizon(0.97, rng)
        q = discounted_partial_return(traj.rewards, 0.97, min(drawn, len(traj) - 1))
        for st, at in zip(traj.states, traj.actions):
            s = features((st.position, st.velocity))
            raw = score(ref_pol, s, at)
            assert np.all(raw <= 1.2)  # precondition of this scenario
            vec = vec + 0.01 * q * raw
            ref_pol = with_param_vector(ref_pol, vec)
    assert np.allclose(param_vector(m.final_policy), vec, rtol=0, atol=0)


def test_train_deterministic():
    env = TrappedCar()
    pol = PolicyParams.zeros(3, alpha=1.0)
    cfg = TrainConfig(env=env, policy_init=pol, episodes=12, seed=7)
    m1, m2 = train(cfg), train(cfg)
    assert m1.returns == m2.returns
    assert m1.moving_avg_100 == m2.moving_avg_100
    assert m1.update_norms == m2.update_norms
    assert np.array_equal(param_vector(m1.final_policy), param_vector(m2.final_policy))


def test_train_fixed_scale_never_touches_sigma():
    env = TrappedCar()
    pol = PolicyParams.zeros(3, alpha=1.0, scale_mode=FIXED, sigma0=1.0)
    cfg = TrainConfig(env=env, policy_init=pol, episodes=15, seed=5)
    m = train(cfg)
    assert np.array_equal(m.final_policy.theta_sigma, pol.theta_sigma)
    assert m.final_policy.scale_mode == FIXED
    assert not np.array_equal(m.final_policy.theta_x0, pol.theta_x0)  # it did learn


def test_train_moving_average_invariant():
    env = TrappedCar()
    cfg = TrainConfig(env=env, policy_init=PolicyParams.zeros(3, alpha=1.0),
                      episodes=130, seed=9)
    m = train(cfg)
    for k in (0, 1, 50, 99, 100, 129):
        window = m.returns[max(0, k - 99): k + 1]
        assert m.moving_avg_100[k] == pytest.approx(sum(window) / len(window))


def test_train_q_fresh_mode_runs():
    env = OneStepEnv(reward=1.0)
    cfg = TrainConfig(env=env, policy_init=PolicyParams.zeros(3, alpha=1.0),
                      episodes=3, seed=1, q_mode="fresh")
    m = train(cfg)
    assert m.wall_updates == 3
    assert not m.diverged


def test_train_divergence_guard():
    # An absurd reward magnitude overflows the parameters; the run must stop
    # and flag itself rather than loop on NaNs.
    env = OneStepEnv(reward=1e308)
    cfg = TrainConfig(env=env, policy_init=PolicyParams.zeros(3, alpha=1.0),
                      episodes=50, seed=0, step_rule=Constant(1e300))
    m = train(cfg)
    assert m.diverged
    assert len(m.returns) < 50


def test_train_first_exit_recorded():
    env = TrappedCar(start_at_false_goal=True)
    cfg = TrainConfig(env=env, policy_init=PolicyParams.zeros(3, alpha=1.0),
                      episodes=40, seed=2)
    m = train(cfg)
    if m.first_exit_episode is not None:
        assert 0 <= m.first_exit_episode < 40
