"""Four-room grid-world puzzle with item collection and an exit goal.

A 32x32 grid is split into four rooms by a wall cross at index 16, each
half-wall pierced by one randomly placed open door.  Items come in 16
identities (two shapes x eight colors); the default configuration also
scatters extra duplicate-identity items so that duplicate avoidance is
actually exercised.  The agent turns, moves forward (blocked by walls
and items), and picks up whatever sits directly ahead.  Collecting a new
identity pays 1/16, collecting a duplicate pays -1 and ends the episode,
and reaching the goal pays 1 - 0.8 * steps / 8192.  Episodes truncate at
8192 steps.

Observations are egocentric: a 7x7 window in front of the agent (agent
at the bottom-center cell, rotated so "up" is the facing direction),
one-hot over 20 channels, concatenated with the 16-bit inventory.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy import ndimage

from .core import StepOutcome

GRID_SIZE = 32
WALL_INDEX = 16          # internal wall cross position
VIEW_SIZE = 7
PAD = VIEW_SIZE - 1      # window may reach this far past the grid edge
MAX_STEPS = 8192
ITEM_REWARD = 1.0 / 16.0
DUPLICATE_REWARD = -1.0
SHAPE_COUNT = 2          # key, circle
COLOR_COUNT = 8
IDENTITY_COUNT = SHAPE_COUNT * COLOR_COUNT
DEFAULT_DUPLICATE_ITEMS = 8

# Cell codes double as one-hot channels: empty, wall, goal, out-of-bounds,
# then one channel per item identity.
EMPTY = 0
WALL = 1
GOAL = 2
OUT_OF_BOUNDS = 3
ITEM_BASE = 4
CHANNELS = ITEM_BASE + IDENTITY_COUNT  # 20

OBSERVATION_SIZE = VIEW_SIZE * VIEW_SIZE * CHANNELS + IDENTITY_COUNT  # 996

FORWARD, LEFT, RIGHT, PICKUP = 0, 1, 2, 3
ACTION_COUNT = 4

# Facing directions in N, E, S, W order; y grows downward.
DX = (0, 1, 0, -1)
DY = (-1, 0, 1, 0)

SHAPE_NAMES = ("key", "circle")

_EYE = np.eye(CHANNELS, dtype=np.float64)


class Tile(NamedTuple):
    kind: str                      # "empty" | "wall" | "goal" | "item"
    item_shape: Optional[str] = None
    item_color: Optional[int] = None


def identity_of(shape: int, color: int) -> int:
    return shape * COLOR_COUNT + color


def code_to_tile(code: int) -> Tile:
    if code == EMPTY:
        return Tile("empty")
    if code in (WALL, OUT_OF_BOUNDS):
        return Tile("wall")
    if code == GOAL:
        return Tile("goal")
    identity = code - ITEM_BASE
    return Tile("item", SHAPE_NAMES[identity // COLOR_COUNT], identity % COLOR_COUNT)


@dataclass
class GridState:
    padded: np.ndarray          # (32 + 2*PAD)^2 int16 codes; border is OUT_OF_BOUNDS
    agent_pos: tuple[int, int]  # (x, y)
    agent_dir: int              # 0..3 = N, E, S, W
    inventory: np.ndarray       # (16,) bool
    steps: int = 0
    terminated: bool = False

    @property
    def grid(self) -> np.ndarray:
        """32x32 view (indexed [y, x]) backed by the padded array."""
        return self.padded[PAD : PAD + GRID_SIZE, PAD : PAD + GRID_SIZE]

    def code_at(self, x: int, y: int) -> int:
        return int(self.padded[y + PAD, x + PAD])


def _fully_connected(grid: np.ndarray) -> bool:
    """True when every passable cell (empty or goal) is in one component."""
    passable = (grid == EMPTY) | (grid == GOAL)
    _, count = ndimage.label(passable)
    return count == 1


def generate(seed: int, duplicate_items: int = DEFAULT_DUPLICATE_ITEMS) -> GridState:
    """Build a random four-room grid with items, goal and agent placed.

    Each half of the internal wall cross gets exactly one door.  All 16
    item identities appear once, plus ``duplicate_items`` extra items with
    identities drawn at random.  Placement retries until every empty cell
    stays mutually reachable, so items can never seal off a door or a
    corner pocket.
    """
    rng = np.random.default_rng(seed)
    while True:
        padded = np.full((GRID_SIZE + 2 * PAD,) * 2, OUT_OF_BOUNDS, dtype=np.int16)
        grid = padded[PAD : PAD + GRID_SIZE, PAD : PAD + GRID_SIZE]
        grid[:] = EMPTY
        grid[0, :] = grid[-1, :] = WALL
        grid[:, 0] = grid[:, -1] = WALL
        grid[WALL_INDEX, :] = WALL
        grid[:, WALL_INDEX] = WALL

        # One door per half-segment of the wall cross.
        grid[WALL_INDEX, rng.integers(1, WALL_INDEX)] = EMPTY
        grid[WALL_INDEX, rng.integers(WALL_INDEX + 1, GRID_SIZE - 1)] = EMPTY
        grid[rng.integers(1, WALL_INDEX), WALL_INDEX] = EMPTY
        grid[rng.integers(WALL_INDEX + 1, GRID_SIZE - 1), WALL_INDEX] = EMPTY

        identities = list(range(IDENTITY_COUNT)) + [
            int(v) for v in rng.integers(0, IDENTITY_COUNT, size=duplicate_items)
        ]
        empty_cells = np.argwhere(grid == EMPTY)  # (y, x) rows
        chosen = rng.choice(len(empty_cells), size=len(identities) + 2, replace=False)
        spots = empty_cells[chosen]
        for identity, (y, x) in zip(identities, spots):
            grid[y, x] = ITEM_BASE + identity
        gy, gx = spots[len(identities)]
        grid[gy, gx] = GOAL
        ay, ax = spots[len(identities) + 1]
        agent_dir = int(rng.integers(4))

        if _fully_connected(grid):
            return GridState(
                padded=padded,
                agent_pos=(int(ax), int(ay)),
                agent_dir=agent_dir,
                inventory=np.zeros(IDENTITY_COUNT, dtype=bool),
            )


def front_position(state: GridState) -> tuple[int, int]:
    x, y = state.agent_pos
    return x + DX[state.agent_dir], y + DY[state.agent_dir]


def front_code(state: GridState) -> int:
    fx, fy = front_position(state)
    code = state.code_at(fx, fy)
    return WALL if code == OUT_OF_BOUNDS else code


def front_tile(state: GridState) -> Tile:
    """Tile one step ahead of the agent (wall when out of bounds)."""
    return code_to_tile(front_code(state))


def grid_step(state: GridState, action: int) -> StepOutcome:
    """Advance the world by one action, mutating the state in place."""
    if state.terminated:
        raise RuntimeError("episode is over; generate a new grid before stepping")
    if state.steps >= MAX_STEPS:
        raise RuntimeError("episode is truncated; generate a new grid before stepping")
    if not 0 <= action < ACTION_COUNT:
        raise ValueError(f"action {action} outside [0, {ACTION_COUNT})")

    state.steps += 1
    reward = 0.0
    duplicate = False

    if action == LEFT:
        state.agent_dir = (state.agent_dir - 1) % 4
    elif action == RIGHT:
        state.agent_dir = (state.agent_dir + 1) % 4
    elif action == FORWARD:
        fx, fy = front_position(state)
        code = state.code_at(fx, fy)
        if code == EMPTY or code == GOAL:
            state.agent_pos = (fx, fy)
            if code == GOAL:
                state.terminated = True
                reward = 1.0 - 0.8 * state.steps / MAX_STEPS
        # walls, items and the padding block movement
    else:  # PICKUP acts on the tile directly ahead
        fx, fy = front_position(state)
        code = state.code_at(fx, fy)
        if code >= ITEM_BASE:
            identity = code - ITEM_BASE
            if state.inventory[identity]:
                reward = DUPLICATE_REWARD
                state.terminated = True
                duplicate = True
            else:
                state.inventory[identity] = True
                state.padded[fy + PAD, fx + PAD] = EMPTY
                reward = ITEM_REWARD

    truncated = state.steps >= MAX_STEPS and not state.terminated
    return StepOutcome(
        observation=encode_observation(state),
        reward=reward,
        terminated=state.terminated,
        truncated=truncated,
        duplicate_pickup=duplicate,
    )


def view_codes(state: GridState) -> np.ndarray:
    """7x7 cell codes in the agent frame: row 6 col 3 is the agent's own cell.

    The window extends six cells ahead and three to each side, rotated so
    that "up" equals the facing direction; cells past the grid read as
    OUT_OF_BOUNDS.
    """
    x, y = state.agent_pos
    cx, cy = x + PAD, y + PAD
    block = state.padded[cy - PAD : cy + PAD + 1, cx - PAD : cx + PAD + 1]
    oriented = np.rot90(block, k=state.agent_dir)
    return oriented[0:VIEW_SIZE, PAD - 3 : PAD + 4]


def one_hot_cells(codes: np.ndarray) -> np.ndarray:
    """Cell codes -> one-hot channel vectors (adds a trailing axis of 20)."""
    return _EYE[codes]


def encode_observation(state: GridState) -> np.ndarray:
    """Flattened one-hot 7x7x20 window followed by the 16-entry inventory."""
    obs = np.empty(OBSERVATION_SIZE, dtype=np.float64)
    obs[: VIEW_SIZE * VIEW_SIZE * CHANNELS] = one_hot_cells(view_codes(state)).reshape(-1)
    obs[VIEW_SIZE * VIEW_SIZE * CHANNELS :] = state.inventory
    return obs


class GridWorldEnv:
    """Episode-oriented wrapper over the pure grid functions."""

    observation_size = OBSERVATION_SIZE
    action_count = ACTION_COUNT
    default_step_cap = MAX_STEPS
    family = "gridworld"

    def __init__(self, seed: int = 0, duplicate_items: int = DEFAULT_DUPLICATE_ITEMS):
        self._base_seed = seed
        self._episode = 0
        self.duplicate_items = duplicate_items
        self.state: Optional[GridState] = None

    def reset(self, seed: Optional[int] = None) -> np.ndarray:
        if seed is not None:
            self._base_seed = seed
            self._episode = 0
        episode_seed = int(
            np.random.SeedSequence([self._base_seed, self._episode]).generate_state(1)[0]
        )
        self._episode += 1
        self.state = generate(episode_seed, self.duplicate_items)
        return encode_observation(self.state)

    def step(self, action: int) -> StepOutcome:
        if self.state is None:
            raise RuntimeError("reset() must be called before step()")
        return grid_step(self.state, action)
