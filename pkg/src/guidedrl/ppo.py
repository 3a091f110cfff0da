"""PPO training loop: vectorized rollouts, GAE, clipped surrogate updates.

The collector drives a set of environments through the guidance wrapper,
sampling actions from the (possibly mask-adjusted) policy distribution
and auto-resetting finished episodes.  Updates normalize advantages per
batch, run shuffled minibatch epochs over the clipped objective with
value and entropy terms, clip the global gradient norm and apply Adam.

Action sampling uses the Gumbel-max trick over masked log-probabilities,
so masked actions (log-probability about -1e30) can never be drawn.  The
sampling stream is separate from the environment seeds, so either side
reproduces independently.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .nn import ActorCritic, Adam, clip_gradients

MASKED_LOGIT = -1e30  # finite stand-in for log(0); exp underflows to exactly 0.0


@dataclass
class PpoConfig:
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_eps: float = 0.2
    epochs: int = 4
    minibatches: int = 8
    learning_rate: float = 2.5e-4
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    rollout_len: int = 128
    num_envs: int = 16
    grad_clip_norm: float = 0.5

    def validate(self) -> None:
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must be in [0, 1), got {self.gamma}")
        if not 0.0 <= self.gae_lambda <= 1.0:
            raise ValueError(f"gae_lambda must be in [0, 1], got {self.gae_lambda}")
        if self.clip_eps <= 0.0:
            raise ValueError(f"clip_eps must be positive, got {self.clip_eps}")
        for name in ("epochs", "minibatches", "rollout_len", "num_envs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("learning_rate", "value_coef", "grad_clip_norm"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.entropy_coef < 0.0:
            raise ValueError(f"entropy_coef must be >= 0, got {self.entropy_coef}")


def log_probs_from_logits(logits: np.ndarray, masks: Optional[np.ndarray] = None) -> np.ndarray:
    """Row-wise log-softmax; masked entries get MASKED_LOGIT-scale log-probs."""
    z = logits if masks is None else np.where(masks > 0.0, logits, MASKED_LOGIT)
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def entropy_from_log_probs(log_probs: np.ndarray) -> np.ndarray:
    """Shannon entropy per row; zero-probability entries contribute nothing."""
    probs = np.exp(log_probs)
    return -(probs * log_probs).sum(axis=-1)


def sample_actions(log_probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Gumbel-max categorical sampling; masked entries are unreachable."""
    noise = rng.gumbel(size=log_probs.shape)
    return np.argmax(log_probs + noise, axis=-1)


class NetworkPolicy:
    """Policy adapter over an actor-critic for the episode loop."""

    def __init__(self, net: ActorCritic, seed: int = 0):
        self.net = net
        self._rng = np.random.default_rng(seed)

    def act(self, obs, mask=None, rng=None, greedy=False) -> int:
        logits, _ = self.net.forward(obs)
        log_probs = log_probs_from_logits(logits[None, :], None if mask is None else mask[None, :])[0]
        if greedy:
            return int(np.argmax(log_probs))
        gen = rng if rng is not None else self._rng
        return int(sample_actions(log_probs[None, :], gen)[0])


@dataclass
class RolloutBuffer:
    """Fixed-size on-policy storage: one slot per (step, environment)."""

    obs: np.ndarray            # (T, N, obs_size)
    actions: np.ndarray        # (T, N) as chosen by the agent
    log_probs: np.ndarray      # (T, N) behavior log-probabilities
    rewards: np.ndarray        # (T, N)
    dones: np.ndarray          # (T, N) episode boundary after this step
    values: np.ndarray         # (T, N) critic estimates
    masks: Optional[np.ndarray]        # (T, N, A) when action-mask guidance is active
    bootstrap_values: np.ndarray       # (N,) critic estimate of the next observation
    episode_returns: list[float] = field(default_factory=list)
    episode_lengths: list[int] = field(default_factory=list)
    invalid_actions: int = 0
    duplicate_pickups: int = 0

    @property
    def frames(self) -> int:
        return self.obs.shape[0] * self.obs.shape[1]


class RolloutCollector:
    """Steps a fleet of environments through the guidance wrapper.

    Episode state persists across collect() calls, so consecutive rollouts
    continue exactly where the previous ones stopped.
    """

    def __init__(self, envs, guidance=None, step_cap: Optional[int] = None, seed: int = 0):
        if not envs:
            raise ValueError("need at least one environment")
        self.envs = list(envs)
        self.guidance = guidance
        self.step_cap = step_cap if step_cap is not None else self.envs[0].default_step_cap
        self.action_count = self.envs[0].action_count
        self._rng = np.random.default_rng(seed)
        self._obs: Optional[np.ndarray] = None
        self._ep_return = np.zeros(len(self.envs))
        self._ep_length = np.zeros(len(self.envs), dtype=np.int64)

    def _guided(self, raw_obs, env):
        if self.guidance is None:
            return raw_obs
        return self.guidance.mask_observation(raw_obs, env)

    def _ensure_started(self) -> None:
        if self._obs is None:
            self._obs = np.stack(
                [self._guided(env.reset(), env) for env in self.envs]
            )

    def _action_masks(self):
        if self.guidance is None:
            return None
        masks = [self.guidance.action_mask(env) for env in self.envs]
        if masks[0] is None:
            return None
        return np.stack(masks)

    def collect(self, net: ActorCritic, config: PpoConfig) -> RolloutBuffer:
        self._ensure_started()
        t_len, n_envs = config.rollout_len, len(self.envs)
        obs_buf = np.empty((t_len, n_envs, self.envs[0].observation_size))
        act_buf = np.empty((t_len, n_envs), dtype=np.int64)
        logp_buf = np.empty((t_len, n_envs))
        rew_buf = np.empty((t_len, n_envs))
        done_buf = np.zeros((t_len, n_envs))
        val_buf = np.empty((t_len, n_envs))
        first_masks = self._action_masks()
        mask_buf = (
            None if first_masks is None else np.empty((t_len, n_envs, self.action_count))
        )
        buffer = RolloutBuffer(
            obs=obs_buf, actions=act_buf, log_probs=logp_buf, rewards=rew_buf,
            dones=done_buf, values=val_buf, masks=mask_buf,
            bootstrap_values=np.zeros(n_envs),
        )

        masks = first_masks
        for t in range(t_len):
            logits, values = net.forward(self._obs)
            log_probs = log_probs_from_logits(logits, masks)
            actions = sample_actions(log_probs, self._rng)

            obs_buf[t] = self._obs
            act_buf[t] = actions
            logp_buf[t] = log_probs[np.arange(n_envs), actions]
            val_buf[t] = values
            if mask_buf is not None:
                mask_buf[t] = masks

            for i, env in enumerate(self.envs):
                action = int(actions[i])
                if self.guidance is not None:
                    action = self.guidance.replace_action(self._obs[i], action, env)
                outcome = env.step(action)
                self._ep_return[i] += outcome.reward
                self._ep_length[i] += 1
                buffer.invalid_actions += int(outcome.invalid_action)
                buffer.duplicate_pickups += int(outcome.duplicate_pickup)
                done = outcome.done or self._ep_length[i] >= self.step_cap
                rew_buf[t, i] = outcome.reward
                done_buf[t, i] = float(done)
                if done:
                    buffer.episode_returns.append(float(self._ep_return[i]))
                    buffer.episode_lengths.append(int(self._ep_length[i]))
                    self._ep_return[i] = 0.0
                    self._ep_length[i] = 0
                    self._obs[i] = self._guided(env.reset(), env)
                else:
                    self._obs[i] = self._guided(outcome.observation, env)
            masks = self._action_masks()

        _, bootstrap = net.forward(self._obs)
        buffer.bootstrap_values[:] = bootstrap
        return buffer


def compute_return(rewards, gamma: float) -> float:
    """Finite-horizon discounted return of a reward sequence."""
    total = 0.0
    discount = 1.0
    for r in rewards:
        total += discount * r
        discount *= gamma
    return total


def compute_gae(buffer: RolloutBuffer, gamma: float, gae_lambda: float):
    """Generalized advantage estimation over the rollout.

    delta_t = r_t + gamma * V(s_{t+1}) * (1 - done_t) - V(s_t)
    A_t     = delta_t + gamma * lambda * (1 - done_t) * A_{t+1}

    Returns (advantages, return_targets), where the targets are A + V.
    """
    rewards, values, dones = buffer.rewards, buffer.values, buffer.dones
    t_len = rewards.shape[0]
    advantages = np.zeros_like(rewards)
    running = np.zeros(rewards.shape[1])
    next_values = buffer.bootstrap_values
    for t in range(t_len - 1, -1, -1):
        keep = 1.0 - dones[t]
        delta = rewards[t] + gamma * next_values * keep - values[t]
        running = delta + gamma * gae_lambda * keep * running
        advantages[t] = running
        next_values = values[t]
    return advantages, advantages + values


def normalize_advantages(advantages: np.ndarray) -> np.ndarray:
    """Zero-mean unit-std rescaling over the whole update batch."""
    std = advantages.std()
    if std == 0.0:
        return np.zeros_like(advantages)
    return (advantages - advantages.mean()) / std


def ppo_update(
    net: ActorCritic,
    optimizer: Adam,
    buffer: RolloutBuffer,
    advantages: np.ndarray,
    return_targets: np.ndarray,
    config: PpoConfig,
    rng: np.random.Generator,
) -> dict:
    """Clipped-surrogate PPO update over shuffled minibatch epochs.

    Returns mean loss statistics across all minibatch steps.
    """
    batch = buffer.frames
    obs = buffer.obs.reshape(batch, -1)
    actions = buffer.actions.reshape(batch)
    old_log_probs = buffer.log_probs.reshape(batch)
    masks = None if buffer.masks is None else buffer.masks.reshape(batch, -1)
    adv = normalize_advantages(advantages).reshape(batch)
    targets = return_targets.reshape(batch)

    eps = config.clip_eps
    stats = {"policy_loss": 0.0, "value_loss": 0.0, "entropy": 0.0, "clip_fraction": 0.0}
    steps = 0

    for _ in range(config.epochs):
        order = rng.permutation(batch)
        for chunk in np.array_split(order, config.minibatches):
            m = len(chunk)
            if m == 0:
                continue
            rows = np.arange(m)
            mb_masks = None if masks is None else masks[chunk]
            logits, values = net.forward(obs[chunk])
            log_probs = log_probs_from_logits(logits, mb_masks)
            probs = np.exp(log_probs)
            taken = log_probs[rows, actions[chunk]]
            ratio = np.exp(taken - old_log_probs[chunk])
            mb_adv = adv[chunk]

            surrogate = ratio * mb_adv
            clipped = np.clip(ratio, 1.0 - eps, 1.0 + eps) * mb_adv
            unclipped_active = surrogate <= clipped
            policy_loss = -np.where(unclipped_active, surrogate, clipped).mean()

            value_error = values - targets[chunk]
            value_loss = np.mean(value_error**2)

            entropy = entropy_from_log_probs(log_probs)
            mean_entropy = entropy.mean()

            # d(total loss)/d logits, assembled analytically.
            d_taken = np.where(unclipped_active, -mb_adv * ratio, 0.0) / m
            d_logits = (probs * -d_taken[:, None])
            d_logits[rows, actions[chunk]] += d_taken
            d_logits += (config.entropy_coef / m) * probs * (
                log_probs + entropy[:, None]
            )
            d_values = config.value_coef * 2.0 * value_error / m

            net.zero_grads()
            net.backward(d_logits, d_values)
            grads = net.grads()
            clip_gradients(grads, config.grad_clip_norm)
            optimizer.step(grads)

            stats["policy_loss"] += policy_loss
            stats["value_loss"] += value_loss
            stats["entropy"] += mean_entropy
            stats["clip_fraction"] += float(np.mean(np.abs(ratio - 1.0) > eps))
            steps += 1

    return {k: v / steps for k, v in stats.items()}
