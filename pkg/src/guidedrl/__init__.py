"""Constraint-guided reinforcement learning toolkit.

A PPO actor-critic agent wrapped by constraint-based guidance models at
three interfaces (observation masking, action replacement, action
masking), two case-study environments (a solitaire card game and a
four-room grid-world puzzle), a minimal finite-domain constraint solver,
and a deterministic experiment harness.
"""

from .cardgame import CardGameEnv
from .constraints import Cop, Csp, all_solutions, solve_minimize, solve_satisfy
from .core import EpisodeTrace, RandomPolicy, StepOutcome, run_episode
from .gridworld import GridWorldEnv
from .guidance import GuidanceMode, apply_mask_to_policy, guidance_for
from .harness import ExperimentConfig, evaluate, make_env, sweep, train
from .nn import ActorCritic, Adam, conv_actor_critic, load_checkpoint, mlp_actor_critic, save_checkpoint
from .ppo import NetworkPolicy, PpoConfig, RolloutCollector, compute_gae, compute_return, ppo_update

__version__ = "0.1.0"

__all__ = [
    "ActorCritic",
    "Adam",
    "CardGameEnv",
    "Cop",
    "Csp",
    "EpisodeTrace",
    "ExperimentConfig",
    "GridWorldEnv",
    "GuidanceMode",
    "NetworkPolicy",
    "PpoConfig",
    "RandomPolicy",
    "RolloutCollector",
    "StepOutcome",
    "all_solutions",
    "apply_mask_to_policy",
    "compute_gae",
    "compute_return",
    "conv_actor_critic",
    "evaluate",
    "guidance_for",
    "load_checkpoint",
    "make_env",
    "mlp_actor_critic",
    "ppo_update",
    "run_episode",
    "save_checkpoint",
    "solve_minimize",
    "solve_satisfy",
    "sweep",
    "train",
]
