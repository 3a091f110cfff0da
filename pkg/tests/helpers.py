"""Shared fixtures: state generators, a bandit env, and a gradient checker."""

import numpy as np

from guidedrl.cardgame import EMPTY_SLOT, CardGameState
from guidedrl.core import StepOutcome


def random_cardgame_state(rng: np.random.Generator) -> CardGameState:
    """Synthetic mid-game state: random pile tops and a random partial hand.

    Covers more of the validity space than reachable-only states (any pile
    top combination, any hand size), which is what the mask logic actually
    sees as input.
    """
    piles = [
        int(rng.integers(1, 100)),
        int(rng.integers(1, 100)),
        int(rng.integers(2, 101)),
        int(rng.integers(2, 101)),
    ]
    hand_size = int(rng.integers(0, 9))
    cards = sorted(int(c) for c in rng.choice(np.arange(2, 100), hand_size, replace=False))
    hand = [EMPTY_SLOT] * (8 - hand_size) + cards
    return CardGameState(piles=piles, hand=hand, draw_pile=[], played_count=0)


class TwoArmedBandit:
    """One-step episodes, constant observation; arm 0 pays 1, arm 1 pays 0."""

    observation_size = 1
    action_count = 2
    default_step_cap = 1
    family = "bandit"

    def __init__(self, seed: int = 0):
        self._obs = np.zeros(1, dtype=np.float64)

    def reset(self, seed=None):
        return self._obs.copy()

    def step(self, action: int) -> StepOutcome:
        return StepOutcome(
            observation=self._obs.copy(),
            reward=1.0 if action == 0 else 0.0,
            terminated=True,
        )


def train_bandit(seed: int, total_frames: int) -> float:
    """Train PPO on the two-armed bandit; returns the final P(better arm).

    Small net and a hot learning rate: the point is that the update math
    moves probability onto the rewarding arm, not hyperparameter realism.
    """
    from guidedrl.nn import Adam, mlp_actor_critic
    from guidedrl.ppo import (
        PpoConfig,
        RolloutCollector,
        compute_gae,
        log_probs_from_logits,
        ppo_update,
    )

    config = PpoConfig(
        learning_rate=0.01,
        entropy_coef=0.001,
        rollout_len=64,
        num_envs=8,
        minibatches=4,
    )
    rng = np.random.default_rng(seed)
    net = mlp_actor_critic(1, 2, hidden=(16,), activation="tanh", rng=rng)
    envs = [TwoArmedBandit() for _ in range(config.num_envs)]
    collector = RolloutCollector(envs, seed=seed + 1)
    optimizer = Adam(net.params(), lr=config.learning_rate)
    shuffle_rng = np.random.default_rng(seed + 2)

    frames_per_update = config.num_envs * config.rollout_len
    for _ in range(total_frames // frames_per_update):
        buffer = collector.collect(net, config)
        advantages, targets = compute_gae(buffer, config.gamma, config.gae_lambda)
        ppo_update(net, optimizer, buffer, advantages, targets, config, shuffle_rng)

    logits, _ = net.forward(np.zeros(1))
    probs = np.exp(log_probs_from_logits(logits[None, :])[0])
    return float(probs[0])


def randomize_biases(net, rng, scale=0.1):
    """Give every bias a random value, as any trained network would have.

    Zero biases can leave ReLU pre-activations exactly on the kink (a dead
    layer feeds exact zeros forward), where the function is not
    differentiable and finite differences are meaningless.
    """
    for layer in net._layers():
        layer.bias[:] = rng.normal(scale=scale, size=layer.bias.shape)


def max_gradient_mismatch(net, obs_batch, rng, h=1e-5):
    """Worst per-parameter disagreement between backprop and central differences.

    The probe scalar is a random linear functional of logits and value, so
    its parameter gradient exercises every path through both heads.  Returns
    the largest excess of |fd - analytic| over the mixed tolerance
    1e-8 + 1e-4 * max(|fd|, |analytic|); values <= 0 mean full agreement.
    """
    c_logits = rng.normal(size=(obs_batch.shape[0], net.action_count))
    c_value = rng.normal(size=obs_batch.shape[0])

    def probe() -> float:
        logits, values = net.forward(obs_batch)
        return float(np.sum(c_logits * logits) + np.sum(c_value * values))

    net.zero_grads()
    net.forward(obs_batch)
    net.backward(c_logits, c_value)
    analytic = [g.copy() for g in net.grads()]

    worst = -np.inf
    for p, g in zip(net.params(), analytic):
        flat_p, flat_g = p.reshape(-1), g.reshape(-1)
        for i in range(flat_p.size):
            original = flat_p[i]
            flat_p[i] = original + h
            f_plus = probe()
            flat_p[i] = original - h
            f_minus = probe()
            flat_p[i] = original
            fd = (f_plus - f_minus) / (2.0 * h)
            tolerance = 1e-8 + 1e-4 * max(abs(fd), abs(flat_g[i]))
            worst = max(worst, abs(fd - flat_g[i]) - tolerance)
    return worst
