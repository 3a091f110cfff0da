"""A small end-to-end training run with metrics, checkpoint and evaluation.

Equivalent CLI:
  guidedrl train --env cardgame --guidance action-mask --frames 60000 \
      --num-envs 8 --seed 0 --out /tmp/demo_run
  guidedrl eval --checkpoint /tmp/demo_run/cardgame_action-mask_seed0.ckpt \
      --env cardgame --guidance action-mask --episodes 20

Run:  python demos/06_train_and_evaluate.py   (about a minute)
"""

import tempfile

from guidedrl.harness import ExperimentConfig, evaluate, train

with tempfile.TemporaryDirectory() as tmp:
    config = ExperimentConfig(
        env="cardgame",
        guidance="action-mask",
        total_frames=60_000,
        num_envs=8,
        seed=0,
        out_dir=tmp,
    )
    result = train(config, progress=print)
    print(f"\nwrote {result.metrics_path}")
    print(f"final rolling-100 return: mean {result.final_return_mean:.2f}, "
          f"max {result.final_return_max:.2f}")

    print("\nfirst and last metrics rows:")
    with open(result.metrics_path) as fh:
        lines = fh.read().splitlines()
    print(" ", lines[0])
    print(" ", lines[1])
    print(" ", lines[-1])

    summary = evaluate(
        result.checkpoint_path, "cardgame", "action-mask", episodes=20, seed=1
    )
    print("\ngreedy evaluation over 20 episodes:")
    print(f"  return mean {summary.return_mean:.2f} (max {summary.return_max:.2f})")
    print(f"  mean episode length {summary.length_mean:.1f}")
    print(f"  invalid actions executed: {summary.invalid_action_count}")
