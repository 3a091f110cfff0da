"""The three guidance interfaces, shown on concrete states of both games.

Observation masking rewrites what the agent sees, action replacement
overrides what it does, and action masking reshapes the distribution it
samples from.  Run:  python demos/04_guidance_models.py
"""

import numpy as np

from guidedrl.cardgame import EMPTY_SLOT, CardGameEnv, encode_observation
from guidedrl.constraints import solve_minimize
from guidedrl.gridworld import ITEM_BASE, PICKUP, GridWorldEnv
from guidedrl.gridworld import encode_observation as grid_encode
from guidedrl.guidance import (
    apply_mask_to_policy,
    build_observation_mask_cop,
    guidance_for,
    pickup_mask,
    replacement_action,
    valid_move_mask,
)

print("=== Card game ===")
env = CardGameEnv()
env.reset(0)
env.state.piles = [90, 95, 6, 8]
env.state.hand = [EMPTY_SLOT] * 5 + [7, 50, 96]
print("piles:", env.state.piles, " hand:", env.state.hand)
print("card 50 fits no pile; 7 and 96 are playable\n")

obs = encode_observation(env.state)
masked = guidance_for(env, "obs-mask").mask_observation(obs, env)
print("observation mask hides the dead card (slot values, x100):")
print("  before:", np.round(obs[4:] * 100).astype(int))
print("  after: ", np.round(masked[4:] * 100).astype(int))

assignment, z = solve_minimize(build_observation_mask_cop(env.state))
print(f"the declarative twin agrees: optimal change count z={z}, "
      f"slot6 -> {assignment['slot6']}")

mask = valid_move_mask(env.state)
print(f"\naction mask enables {int(mask.sum())} of 32 (slot, pile) actions")
probs = apply_mask_to_policy(np.zeros(32), mask)
print(f"uniform logits + mask -> probability {probs.max():.3f} on each legal action,"
      " exactly 0 elsewhere")

bad_action = 6 * 4 + 0  # card 50 on pile 0
fixed = replacement_action(env.state, bad_action)
print(f"\naction replacement: playing 50 on pile 0 is invalid; the smallest-"
      f"difference valid move is action {fixed} (card {env.state.hand[fixed // 4]} "
      f"on pile {fixed % 4})")

print("\n=== Grid world ===")
genv = GridWorldEnv(seed=3)
genv.reset()
state = genv.state
x, y = 8, 8
state.grid[y, x] = 0
state.agent_pos, state.agent_dir = (x, y), 1
state.grid[y, x + 1] = ITEM_BASE + 5
state.inventory[5] = True  # the item ahead is a duplicate
print("a duplicate item sits right in front of the agent")

obs = grid_encode(state)
masked = guidance_for(genv, "obs-mask").mask_observation(obs, genv)
cell = slice((5 * 7 + 3) * 20, (5 * 7 + 4) * 20)
print("  cell ahead, channel argmax before/after mask:",
      int(np.argmax(obs[cell])), "->", int(np.argmax(masked[cell])),
      "(item channel becomes the wall channel)")

print("  pickup mask with a duplicate ahead:", pickup_mask(state))
replaced = guidance_for(genv, "action-replace").replace_action(obs, PICKUP, genv)
print(f"  replacement turns pickup ({PICKUP}) into right ({replaced})")

outcome = genv.step(PICKUP)
print(f"  without guidance the pickup would cost {outcome.reward:+.1f} "
      f"and end the episode (terminated={outcome.terminated})")
