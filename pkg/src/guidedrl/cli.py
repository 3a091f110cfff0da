"""Command-line entry points: train | eval | sweep.

Configuration precedence is defaults < config file < command-line flags.
The config file is plain ``key = value`` text (``#`` starts a comment);
recognized keys are the experiment fields (env, guidance, frames,
num_envs, seed, out, duplicate_items) and the PPO hyperparameters
(gamma, gae_lambda, clip_eps, epochs, minibatches, learning_rate,
entropy_coef, value_coef, rollout_len, grad_clip_norm).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import fields

from .harness import ExperimentConfig, EvalSummary, evaluate, sweep, train
from .ppo import PpoConfig

_PPO_FIELD_TYPES = {f.name: f.type for f in fields(PpoConfig)}
_INT_PPO_FIELDS = {"epochs", "minibatches", "rollout_len", "num_envs"}


def parse_config_file(path: str) -> dict[str, str]:
    values: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = line.split("=", 1)
            values[key.strip()] = value.strip()
    return values


def _apply_ppo_setting(ppo: PpoConfig, key: str, value: str) -> None:
    if key not in _PPO_FIELD_TYPES:
        raise ValueError(f"unknown PPO setting {key!r}")
    setattr(ppo, key, int(value) if key in _INT_PPO_FIELDS else float(value))


def build_config(args) -> ExperimentConfig:
    config = ExperimentConfig()
    if args.config:
        for key, value in parse_config_file(args.config).items():
            if key == "env":
                config.env = value
            elif key == "guidance":
                config.guidance = value
            elif key == "frames":
                config.total_frames = int(value)
            elif key == "num_envs":
                config.num_envs = int(value)
            elif key == "seed":
                config.seed = int(value)
            elif key == "out":
                config.out_dir = value
            elif key == "duplicate_items":
                config.duplicate_items = int(value)
            else:
                _apply_ppo_setting(config.ppo, key, value)
    if args.env is not None:
        config.env = args.env
    if args.guidance is not None:
        config.guidance = args.guidance
    if args.frames is not None:
        config.total_frames = args.frames
    if args.num_envs is not None:
        config.num_envs = args.num_envs
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        config.out_dir = args.out
    if getattr(args, "duplicate_items", None) is not None:
        config.duplicate_items = args.duplicate_items
    for setting in getattr(args, "ppo", None) or []:
        if "=" not in setting:
            raise ValueError(f"--ppo expects key=value, got {setting!r}")
        key, value = setting.split("=", 1)
        _apply_ppo_setting(config.ppo, key.strip(), value.strip())
    return config


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--env", choices=("cardgame", "gridworld"))
    parser.add_argument("--frames", type=int, help="total environment frames to train on")
    parser.add_argument("--num-envs", dest="num_envs", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", help="output directory for metrics and checkpoints")
    parser.add_argument("--config", help="key=value config file; flags override it")
    parser.add_argument("--duplicate-items", dest="duplicate_items", type=int,
                        help="extra duplicate items in the grid world (default 8)")
    parser.add_argument("--ppo", action="append", metavar="KEY=VALUE",
                        help="PPO hyperparameter override; repeatable")
    parser.add_argument("--quiet", action="store_true", help="suppress progress lines")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="guidedrl",
        description="Constraint-guided PPO experiments on the card game and grid world.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run one training cell")
    _add_common_flags(p_train)
    p_train.add_argument("--guidance",
                         choices=("none", "obs-mask", "action-replace", "action-mask"))

    p_eval = sub.add_parser("eval", help="greedy evaluation of a checkpoint")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--env", choices=("cardgame", "gridworld"), required=True)
    p_eval.add_argument("--guidance", default="none",
                        choices=("none", "obs-mask", "action-replace", "action-mask"))
    p_eval.add_argument("--episodes", type=int, default=100)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--duplicate-items", dest="duplicate_items", type=int, default=8)

    p_sweep = sub.add_parser("sweep", help="train a (guidance x seed) grid")
    _add_common_flags(p_sweep)
    p_sweep.add_argument("--guidance", help="comma-separated guidance modes")
    p_sweep.add_argument("--seeds", help="comma-separated seeds (overrides --seed)")
    p_sweep.add_argument("--parallel-cells", action="store_true",
                         help="run independent cells in worker processes")

    return parser


def _print_eval_summary(summary: EvalSummary) -> None:
    print(f"episodes            {summary.episodes}")
    if summary.episodes == 0:
        return
    print(f"return_mean         {summary.return_mean:.6g}")
    print(f"return_max          {summary.return_max:.6g}")
    print(f"return_std          {summary.return_std:.6g}")
    print(f"length_mean         {summary.length_mean:.6g}")
    print(f"invalid_actions     {summary.invalid_action_count}")
    print(f"duplicate_pickups   {summary.duplicate_pickup_count}")


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    progress = None if getattr(args, "quiet", True) else print
    try:
        if args.command == "train":
            config = build_config(args)
            result = train(config, progress=progress)
            print(f"metrics     {result.metrics_path}")
            print(f"checkpoint  {result.checkpoint_path}")
            print(f"updates     {result.updates}")
            print(f"final_return_mean {result.final_return_mean:.6g}")
            return 0

        if args.command == "eval":
            summary = evaluate(
                args.checkpoint, args.env, args.guidance, args.episodes,
                seed=args.seed, duplicate_items=args.duplicate_items,
            )
            _print_eval_summary(summary)
            return 0

        if args.command == "sweep":
            config = build_config(args)
            guidance_list = (args.guidance or config.guidance).split(",")
            seed_list = (
                [int(s) for s in args.seeds.split(",")]
                if args.seeds
                else [config.seed]
            )
            summary = sweep(
                config, guidance_list, seed_list, progress=progress,
                parallel_cells=args.parallel_cells,
            )
            print(f"summary  {summary.summary_path}")
            failed = 0
            for guidance in guidance_list:
                if guidance in summary.final_means:
                    print(
                        f"{guidance:15s} final_return "
                        f"{summary.final_means[guidance]:.4g} "
                        f"+- {summary.final_stds[guidance]:.4g}"
                    )
            for cell in summary.cells:
                if cell.error is not None:
                    failed += 1
                    print(
                        f"error: cell guidance={cell.guidance} seed={cell.seed}: {cell.error}",
                        file=sys.stderr,
                    )
            return 1 if failed else 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
