"""Tour of the four-room grid world: map, movement, items, the 7x7 view.

Run:  python demos/02_grid_world_tour.py
"""

import numpy as np

from guidedrl.gridworld import (
    EMPTY,
    FORWARD,
    GOAL,
    ITEM_BASE,
    LEFT,
    PICKUP,
    WALL,
    GridWorldEnv,
    front_tile,
    generate,
    grid_step,
    view_codes,
)

AGENT_GLYPHS = "^>v<"  # facing N, E, S, W


def glyph(code: int) -> str:
    if code == EMPTY:
        return "."
    if code == WALL:
        return "#"
    if code == GOAL:
        return "G"
    identity = code - ITEM_BASE
    letter = "k" if identity < 8 else "o"  # keys vs circles
    return letter.upper() if identity % 2 else letter


def render(state) -> str:
    rows = []
    ax, ay = state.agent_pos
    for y in range(32):
        row = []
        for x in range(32):
            if (x, y) == (ax, ay):
                row.append(AGENT_GLYPHS[state.agent_dir])
            else:
                row.append(glyph(int(state.grid[y, x])))
        rows.append("".join(row))
    return "\n".join(rows)


state = generate(seed=4)
print("The full map (agent is the arrow; # wall, G goal, letters are items):")
print(render(state))
inventory = state.inventory
print(f"\nitems on the grid: {(state.grid >= ITEM_BASE).sum()}, "
      f"inventory: {int(inventory.sum())} collected")

print("\nThe agent's egocentric 7x7 window (bottom-center is the agent):")
window = view_codes(state)
for row in window:
    print("  " + "".join(glyph(int(c)) if c != 3 else "?" for c in row))
print("('?' marks cells beyond the grid edge)")

print("\nStepping around:")
for action, name in ((LEFT, "left"), (FORWARD, "forward"), (FORWARD, "forward")):
    outcome = grid_step(state, action)
    print(f"  {name:8s} -> pos {state.agent_pos}, facing {AGENT_GLYPHS[state.agent_dir]}, "
          f"reward {outcome.reward:+.3f}")
print("  tile ahead:", front_tile(state))

print("\nRewards at a glance (driven through the env interface):")
env = GridWorldEnv(seed=11)
env.reset()
st = env.state
# Teleport in front of a fresh item to show the pickup rewards.
ys, xs = np.nonzero(st.grid >= ITEM_BASE)
y, x = int(ys[0]), int(xs[0])
st.grid[y, x - 1] = EMPTY
st.agent_pos, st.agent_dir = (x - 1, y), 1  # just west of it, facing east
outcome = env.step(PICKUP)
print(f"  picking a new item:      reward {outcome.reward:+.4f}  (1/16)")
collected = int(np.argmax(st.inventory))
st.grid[y, x] = ITEM_BASE + collected  # put a copy of it back in front
outcome = env.step(PICKUP)
print(f"  picking it again:        reward {outcome.reward:+.4f}  "
      f"(duplicate ends the episode: terminated={outcome.terminated})")
