"""Experiment driver: training runs, greedy evaluation, guidance sweeps.

A training run is fully determined by its configuration: every random
stream (network init, environment seeds, action sampling, minibatch
shuffling) derives from the single experiment seed, and the metrics file
carries no timestamps, so identical configs produce byte-identical CSVs.

Metrics cadence is one row per PPO update.  Return statistics are taken
over a rolling window of the last 100 completed episodes (0.0 before any
episode finishes); safety counters are exact per-update event counts.
"""

from __future__ import annotations

import math
import os
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .cardgame import CardGameEnv
from .core import run_episode
from .gridworld import DEFAULT_DUPLICATE_ITEMS, GridWorldEnv
from .guidance import GuidanceMode, guidance_for
from .nn import Adam, conv_actor_critic, load_checkpoint, mlp_actor_critic, save_checkpoint
from .ppo import NetworkPolicy, PpoConfig, RolloutCollector, compute_gae, ppo_update

ENV_NAMES = ("cardgame", "gridworld")
GUIDANCE_NAMES = tuple(mode.value for mode in GuidanceMode)

METRICS_COLUMNS = (
    "frames",
    "updates",
    "return_mean",
    "return_max",
    "episode_len_mean",
    "invalid_action_count",
    "duplicate_pickup_count",
    "policy_loss",
    "value_loss",
    "entropy",
)


@dataclass
class ExperimentConfig:
    env: str = "cardgame"
    guidance: str = "none"
    total_frames: int = 100_000
    num_envs: int = 16
    seed: int = 0
    out_dir: str = "runs"
    duplicate_items: int = DEFAULT_DUPLICATE_ITEMS  # gridworld only
    ppo: PpoConfig = field(default_factory=PpoConfig)

    def validate(self) -> None:
        if self.env not in ENV_NAMES:
            raise ValueError(f"env must be one of {ENV_NAMES}, got {self.env!r}")
        if self.guidance not in GUIDANCE_NAMES:
            raise ValueError(
                f"guidance must be one of {GUIDANCE_NAMES}, got {self.guidance!r}"
            )
        if self.num_envs < 1:
            raise ValueError(f"num_envs must be >= 1, got {self.num_envs}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")
        if self.duplicate_items < 0:
            raise ValueError(f"duplicate_items must be >= 0, got {self.duplicate_items}")
        self.ppo.validate()
        per_update = self.num_envs * self.ppo.rollout_len
        if self.total_frames < per_update:
            raise ValueError(
                "total_frames must be at least num_envs * rollout_len "
                f"({per_update}), got {self.total_frames}"
            )

    @property
    def run_name(self) -> str:
        return f"{self.env}_{self.guidance}_seed{self.seed}"


@dataclass
class TrainResult:
    metrics_path: str
    checkpoint_path: str
    updates: int
    frames: int
    final_return_mean: float
    final_return_max: float


@dataclass
class EvalSummary:
    episodes: int
    return_mean: float = 0.0
    return_max: float = 0.0
    return_std: float = 0.0
    length_mean: float = 0.0
    invalid_action_count: int = 0
    duplicate_pickup_count: int = 0


def make_env(name: str, seed: int, duplicate_items: int = DEFAULT_DUPLICATE_ITEMS):
    if name == "cardgame":
        return CardGameEnv(seed=seed)
    if name == "gridworld":
        return GridWorldEnv(seed=seed, duplicate_items=duplicate_items)
    raise ValueError(f"unknown environment {name!r}")


def default_network(env_name: str, rng: Optional[np.random.Generator]):
    """The per-environment architecture: dense/tanh trunk for the card game,
    conv/ReLU trunk plus inventory features for the grid world."""
    if env_name == "cardgame":
        net = mlp_actor_critic(12, 32, hidden=(32, 32, 32), activation="tanh", rng=rng)
    elif env_name == "gridworld":
        net = conv_actor_critic(
            image_shape=(20, 7, 7), extra_size=16, action_count=4,
            channels=(16, 32, 64), dense=(64, 64), activation="relu", rng=rng,
        )
    else:
        raise ValueError(f"unknown environment {env_name!r}")
    net.spec["env"] = env_name
    return net


def _format_value(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.10g}"


def train(config: ExperimentConfig, progress: Optional[Callable[[str], None]] = None) -> TrainResult:
    """Run one training cell and write its metrics CSV and final checkpoint."""
    config.validate()
    ppo_cfg = replace(config.ppo, num_envs=config.num_envs)
    root = np.random.SeedSequence(config.seed)
    net_seq, env_parent, sampler_seq, shuffle_seq = root.spawn(4)

    net = default_network(config.env, np.random.default_rng(net_seq))
    optimizer = Adam(net.params(), lr=ppo_cfg.learning_rate)
    envs = [
        make_env(config.env, int(child.generate_state(1)[0]), config.duplicate_items)
        for child in env_parent.spawn(config.num_envs)
    ]
    guidance = guidance_for(envs[0], config.guidance)
    collector = RolloutCollector(
        envs, guidance, seed=int(sampler_seq.generate_state(1)[0])
    )
    shuffle_rng = np.random.default_rng(shuffle_seq)

    frames_per_update = config.num_envs * ppo_cfg.rollout_len
    updates = math.ceil(config.total_frames / frames_per_update)
    recent_returns: deque = deque(maxlen=100)
    recent_lengths: deque = deque(maxlen=100)

    os.makedirs(config.out_dir, exist_ok=True)
    metrics_path = os.path.join(config.out_dir, config.run_name + "_metrics.csv")
    checkpoint_path = os.path.join(config.out_dir, config.run_name + ".ckpt")

    final_mean = final_max = 0.0
    with open(metrics_path, "w", encoding="utf-8", newline="\n") as metrics:
        metrics.write(",".join(METRICS_COLUMNS) + "\n")
        for update in range(1, updates + 1):
            buffer = collector.collect(net, ppo_cfg)
            advantages, targets = compute_gae(buffer, ppo_cfg.gamma, ppo_cfg.gae_lambda)
            stats = ppo_update(net, optimizer, buffer, advantages, targets, ppo_cfg, shuffle_rng)

            recent_returns.extend(buffer.episode_returns)
            recent_lengths.extend(buffer.episode_lengths)
            final_mean = float(np.mean(recent_returns)) if recent_returns else 0.0
            final_max = float(np.max(recent_returns)) if recent_returns else 0.0
            row = (
                update * frames_per_update,
                update,
                final_mean,
                final_max,
                float(np.mean(recent_lengths)) if recent_lengths else 0.0,
                buffer.invalid_actions,
                buffer.duplicate_pickups,
                stats["policy_loss"],
                stats["value_loss"],
                stats["entropy"],
            )
            metrics.write(",".join(_format_value(v) for v in row) + "\n")
            if progress is not None and (
                update == updates or update % max(1, updates // 20) == 0
            ):
                progress(
                    f"[{config.run_name}] update {update}/{updates} "
                    f"return_mean={final_mean:.3f}"
                )

    save_checkpoint(net, checkpoint_path)
    return TrainResult(
        metrics_path=metrics_path,
        checkpoint_path=checkpoint_path,
        updates=updates,
        frames=updates * frames_per_update,
        final_return_mean=final_mean,
        final_return_max=final_max,
    )


def evaluate(
    checkpoint_path: str,
    env_name: str,
    guidance_name: str,
    episodes: int,
    seed: int = 0,
    duplicate_items: int = DEFAULT_DUPLICATE_ITEMS,
) -> EvalSummary:
    """Greedy evaluation episodes for a trained checkpoint."""
    if env_name not in ENV_NAMES:
        raise ValueError(f"env must be one of {ENV_NAMES}, got {env_name!r}")
    if episodes < 0:
        raise ValueError("episodes must be >= 0")
    net = load_checkpoint(checkpoint_path)
    trained_for = net.spec.get("env")
    if trained_for != env_name:
        raise ValueError(
            f"checkpoint {checkpoint_path} was trained for {trained_for!r}, "
            f"not {env_name!r}"
        )
    if episodes == 0:
        return EvalSummary(episodes=0)

    env = make_env(env_name, seed, duplicate_items)
    guidance = guidance_for(env, guidance_name)
    policy = NetworkPolicy(net)
    returns, lengths = [], []
    invalid = duplicates = 0
    for _ in range(episodes):
        trace = run_episode(env, policy, guidance, greedy=True)
        returns.append(trace.total_return)
        lengths.append(trace.length)
        invalid += trace.invalid_action_count
        duplicates += trace.duplicate_pickup_count
    return EvalSummary(
        episodes=episodes,
        return_mean=float(np.mean(returns)),
        return_max=float(np.max(returns)),
        return_std=float(np.std(returns)),
        length_mean=float(np.mean(lengths)),
        invalid_action_count=invalid,
        duplicate_pickup_count=duplicates,
    )


@dataclass
class SweepCell:
    guidance: str
    seed: int
    result: Optional[TrainResult] = None
    error: Optional[str] = None


@dataclass
class SweepSummary:
    cells: list[SweepCell]
    summary_path: str
    final_means: dict[str, float]
    final_stds: dict[str, float]


def sweep(
    base: ExperimentConfig,
    guidance_list,
    seed_list,
    progress: Optional[Callable[[str], None]] = None,
    parallel_cells: bool = False,
    workers: Optional[int] = None,
) -> SweepSummary:
    """Train every (guidance, seed) cell and tabulate final returns.

    A failing cell is recorded and the sweep continues.  The summary CSV
    holds per-guidance mean and standard deviation of the final rolling
    100-episode return.  Cells share no mutable state, so
    ``parallel_cells`` may fan them out over worker processes; results
    are identical either way.
    """
    if not guidance_list or not seed_list:
        raise ValueError("guidance_list and seed_list must be non-empty")
    cells = [
        SweepCell(guidance=guidance, seed=seed)
        for guidance in guidance_list
        for seed in seed_list
    ]
    configs = [replace(base, guidance=c.guidance, seed=c.seed) for c in cells]

    if parallel_cells and len(cells) > 1:
        import concurrent.futures

        max_workers = workers or min(len(cells), os.cpu_count() or 1)
        with concurrent.futures.ProcessPoolExecutor(max_workers=max_workers) as pool:
            futures = [pool.submit(train, config) for config in configs]
            for cell, future in zip(cells, futures):
                try:
                    cell.result = future.result()
                except Exception as exc:
                    cell.error = f"{type(exc).__name__}: {exc}"
                if progress is not None:
                    progress(f"cell guidance={cell.guidance} seed={cell.seed} done")
    else:
        for cell, config in zip(cells, configs):
            try:
                cell.result = train(config, progress)
            except Exception as exc:  # record and continue with the other cells
                cell.error = f"{type(exc).__name__}: {exc}"

    final_means: dict[str, float] = {}
    final_stds: dict[str, float] = {}
    os.makedirs(base.out_dir, exist_ok=True)
    summary_path = os.path.join(base.out_dir, "sweep_summary.csv")
    with open(summary_path, "w", encoding="utf-8", newline="\n") as out:
        out.write("guidance,seeds,final_return_mean,final_return_std\n")
        for guidance in guidance_list:
            finals = [
                c.result.final_return_mean
                for c in cells
                if c.guidance == guidance and c.result is not None
            ]
            if finals:
                final_means[guidance] = float(np.mean(finals))
                final_stds[guidance] = float(np.std(finals))
                out.write(
                    f"{guidance},{len(finals)},"
                    f"{_format_value(final_means[guidance])},"
                    f"{_format_value(final_stds[guidance])}\n"
                )
            else:
                out.write(f"{guidance},0,,\n")
    return SweepSummary(
        cells=cells, summary_path=summary_path,
        final_means=final_means, final_stds=final_stds,
    )
