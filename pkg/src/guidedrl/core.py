"""Environment contract and the guidance-augmented episode loop.

Environments are duck-typed: they expose ``observation_size``,
``action_count``, ``default_step_cap``, ``reset(seed)`` and
``step(action)``, with observations as 1-D float64 arrays.  The wrapper
``run_episode`` owns the interaction loop; environments never call
policies, and the trainable agent stays a black box behind the three
optional guidance hooks (observation masking, action masking, action
replacement).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Protocol

import numpy as np


@dataclass
class StepOutcome:
    """Result of one environment transition."""

    observation: np.ndarray
    reward: float
    terminated: bool = False
    truncated: bool = False
    invalid_action: bool = False
    duplicate_pickup: bool = False

    @property
    def done(self) -> bool:
        return self.terminated or self.truncated


class Transition(NamedTuple):
    observation: np.ndarray  # what the policy saw (after any observation mask)
    action: int              # what the environment executed (after any replacement)
    reward: float
    terminated: bool


@dataclass
class EpisodeTrace:
    transitions: list[Transition] = field(default_factory=list)
    total_return: float = 0.0
    length: int = 0
    truncated: bool = False
    invalid_action_count: int = 0
    duplicate_pickup_count: int = 0


class Env(Protocol):
    """Contract consumed by the episode loop and the rollout collector."""

    observation_size: int
    action_count: int
    default_step_cap: int

    def reset(self, seed: Optional[int] = None) -> np.ndarray: ...

    def step(self, action: int) -> StepOutcome: ...


class Policy(Protocol):
    """Action selection given an observation and an optional action mask."""

    def act(
        self,
        obs: np.ndarray,
        mask: Optional[np.ndarray] = None,
        rng: Optional[np.random.Generator] = None,
        greedy: bool = False,
    ) -> int: ...


class RandomPolicy:
    """Uniform policy over the allowed actions; handy as a test probe."""

    def __init__(self, action_count: int, seed: int = 0):
        self.action_count = action_count
        self._rng = np.random.default_rng(seed)

    def act(self, obs, mask=None, rng=None, greedy=False) -> int:
        gen = rng if rng is not None else self._rng
        if mask is None:
            return int(gen.integers(self.action_count))
        allowed = np.flatnonzero(mask)
        return int(allowed[gen.integers(len(allowed))])


def run_episode(
    env: Env,
    policy: Policy,
    guidance=None,
    step_cap: Optional[int] = None,
    seed: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    greedy: bool = False,
) -> EpisodeTrace:
    """Run one episode through the guidance wrapper and return its trace.

    With ``guidance=None`` this reduces to the plain observe/act/step loop.
    Otherwise the guidance model intercepts the interaction at up to one of
    three points: it may rewrite the observation before the policy sees it,
    restrict the action distribution via a mask, or replace the selected
    action before execution.  ``step_cap`` truncates unfinished episodes
    (default taken from the environment).
    """
    if step_cap is None:
        step_cap = env.default_step_cap
    if step_cap < 1:
        raise ValueError("step_cap must be >= 1")
    if rng is None:
        rng = np.random.default_rng(0)

    obs = env.reset(seed)
    trace = EpisodeTrace()
    while True:
        seen = obs if guidance is None else guidance.mask_observation(obs, env)
        mask = None if guidance is None else guidance.action_mask(env)
        action = policy.act(seen, mask=mask, rng=rng, greedy=greedy)
        if guidance is not None:
            action = guidance.replace_action(seen, action, env)
        outcome = env.step(action)

        trace.transitions.append(
            Transition(seen, action, outcome.reward, outcome.terminated)
        )
        trace.total_return += outcome.reward
        trace.length += 1
        trace.invalid_action_count += int(outcome.invalid_action)
        trace.duplicate_pickup_count += int(outcome.duplicate_pickup)

        if outcome.terminated:
            return trace
        if outcome.truncated or trace.length >= step_cap:
            trace.truncated = True
            return trace
        obs = outcome.observation
