"""Compare all four guidance modes on the card game at a small budget.

This mirrors the full experiment protocol (a sweep over guidance modes
and seeds with a mean +- std summary) at a size that finishes in a few
minutes.  Expect the guided modes to separate from plain PPO early, with
action masking and action replacement well ahead.

Run:  python demos/07_guidance_sweep.py
"""

import tempfile

from guidedrl.harness import ExperimentConfig, sweep

with tempfile.TemporaryDirectory() as tmp:
    base = ExperimentConfig(
        env="cardgame",
        guidance="none",
        total_frames=120_000,
        num_envs=8,
        seed=0,
        out_dir=tmp,
    )
    summary = sweep(
        base,
        ["none", "obs-mask", "action-replace", "action-mask"],
        [0, 1],
        parallel_cells=True,
    )

    print("\nfinal rolling-100 returns (mean +- std over 2 seeds):")
    for guidance, mean in summary.final_means.items():
        print(f"  {guidance:15s} {mean:8.2f} +- {summary.final_stds[guidance]:.2f}")
    print(f"\nper-cell metrics files and {summary.summary_path} were written "
          "next to each other; each row of a metrics file is one PPO update.")
