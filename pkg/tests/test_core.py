"""Episode loop: wrapper identity, traces, caps, determinism."""

import numpy as np
import pytest

from guidedrl.cardgame import CardGameEnv
from guidedrl.core import RandomPolicy, run_episode
from guidedrl.gridworld import GridWorldEnv
from guidedrl.guidance import GuidanceMode, guidance_for


def test_plain_loop_matches_manual_interaction():
    """With no guidance the wrapper must deliver the bare env sequence bit for bit."""
    policy = RandomPolicy(32)
    trace = run_episode(
        CardGameEnv(), policy, seed=11, rng=np.random.default_rng(5), step_cap=50
    )

    env = CardGameEnv()
    obs = env.reset(11)
    rng = np.random.default_rng(5)
    for recorded in trace.transitions:
        action = policy.act(obs, rng=rng)
        outcome = env.step(action)
        assert np.array_equal(recorded.observation, obs)
        assert recorded.action == action
        assert recorded.reward == outcome.reward
        assert recorded.terminated == outcome.terminated
        obs = outcome.observation


def test_total_return_is_exact_reward_sum():
    trace = run_episode(
        CardGameEnv(), RandomPolicy(32), seed=3, rng=np.random.default_rng(1), step_cap=200
    )
    assert trace.total_return == pytest.approx(
        sum(t.reward for t in trace.transitions), abs=1e-12
    )
    assert trace.length == len(trace.transitions)


def test_episode_length_respects_step_cap():
    for cap in (1, 7, 33):
        trace = run_episode(
            CardGameEnv(), RandomPolicy(32), seed=5, rng=np.random.default_rng(0), step_cap=cap
        )
        assert trace.length <= cap
        if trace.length == cap and not trace.transitions[-1].terminated:
            assert trace.truncated


def test_step_cap_must_be_positive():
    with pytest.raises(ValueError):
        run_episode(CardGameEnv(), RandomPolicy(32), step_cap=0)


def test_traces_are_deterministic():
    def roll():
        return run_episode(
            CardGameEnv(),
            RandomPolicy(32),
            guidance=guidance_for(CardGameEnv(), GuidanceMode.ACTION_MASK),
            seed=9,
            rng=np.random.default_rng(2),
            step_cap=300,
        )

    a, b = roll(), roll()
    assert a.total_return == b.total_return and a.length == b.length
    assert [t.action for t in a.transitions] == [t.action for t in b.transitions]


def test_cardgame_action_mask_blocks_every_invalid_action():
    env = CardGameEnv()
    guidance = guidance_for(env, GuidanceMode.ACTION_MASK)
    for seed in range(5):
        trace = run_episode(
            env, RandomPolicy(32), guidance=guidance, seed=seed, rng=np.random.default_rng(seed)
        )
        assert trace.invalid_action_count == 0
        assert trace.transitions[-1].terminated  # valid play always reaches an end


def test_gridworld_action_replacement_blocks_duplicate_pickups():
    env = GridWorldEnv()
    guidance = guidance_for(env, GuidanceMode.ACTION_REPLACEMENT)
    trace = run_episode(
        env, RandomPolicy(4), guidance=guidance, seed=1, rng=np.random.default_rng(3),
        step_cap=3000,
    )
    assert trace.duplicate_pickup_count == 0


def test_guidance_none_mode_object_is_pass_through():
    env = CardGameEnv()
    null = guidance_for(env, "none")
    rng_a, rng_b = np.random.default_rng(4), np.random.default_rng(4)
    with_null = run_episode(env, RandomPolicy(32), guidance=null, seed=2, rng=rng_a, step_cap=80)
    without = run_episode(env, RandomPolicy(32), guidance=None, seed=2, rng=rng_b, step_cap=80)
    assert [t.action for t in with_null.transitions] == [t.action for t in without.transitions]
    assert with_null.total_return == without.total_return
