"""Constraint-guidance models wrapped around a black-box agent.

Three interfaces augment the agent-environment interaction, one active
per model:

* observation mask -- rewrite the observed state, with as few changes as
  possible, so the agent never sees content that would steer it into a
  rule violation;
* action replacement -- let the agent act freely, but substitute a safe
  heuristic action whenever the chosen one violates the rules;
* action mask -- emit a per-state 0/1 vector of allowed actions that is
  multiplied into the policy distribution before selection.

Concrete models exist for both environments.  The card-game observation
mask additionally has a declarative twin built on the constraint solver,
used as an independent minimality oracle for the procedural code.
"""

from __future__ import annotations

import enum

import numpy as np

from . import cardgame, gridworld
from .cardgame import CardGameState, card_fits_pile
from .constraints import Cop, Csp
from .gridworld import ITEM_BASE, PICKUP, RIGHT, WALL


class GuidanceMode(enum.Enum):
    NONE = "none"
    OBSERVATION_MASK = "obs-mask"
    ACTION_REPLACEMENT = "action-replace"
    ACTION_MASK = "action-mask"


class GuidanceModel:
    """Mode-gated pass-through base; environment families override the hooks.

    Exactly one interface is active per model, so the public methods are
    the identity unless their mode is selected.  All hooks are pure
    functions of the observation and the environment's current state.
    """

    def __init__(self, mode: GuidanceMode = GuidanceMode.NONE):
        self.mode = mode

    def mask_observation(self, obs: np.ndarray, env) -> np.ndarray:
        if self.mode is not GuidanceMode.OBSERVATION_MASK:
            return obs
        return self._mask_observation(obs, env)

    def action_mask(self, env):
        if self.mode is not GuidanceMode.ACTION_MASK:
            return None
        return self._action_mask(env)

    def replace_action(self, obs: np.ndarray, action: int, env) -> int:
        if self.mode is not GuidanceMode.ACTION_REPLACEMENT:
            return action
        return self._replace_action(obs, action, env)

    def _mask_observation(self, obs, env):
        return obs

    def _action_mask(self, env):
        return np.ones(env.action_count, dtype=np.float64)

    def _replace_action(self, obs, action, env):
        return action


class CardGameGuidance(GuidanceModel):
    """Validity guidance for the card game.

    Only move validity is enforced; nothing here pushes the backward-ten
    trick or any other strategy onto the agent.
    """

    def _mask_observation(self, obs, env):
        # Hide hand cards that fit no pile by showing their slot as empty.
        # Slot order is preserved so action indices keep their meaning.
        masked = obs.copy()
        for slot in dead_hand_slots(env.state):
            masked[4 + slot] = 0.0
        return masked

    def _action_mask(self, env):
        return valid_move_mask(env.state)

    def _replace_action(self, obs, action, env):
        return replacement_action(env.state, action)


class GridWorldGuidance(GuidanceModel):
    """Duplicate-pickup avoidance for the grid world."""

    def _mask_observation(self, obs, env):
        return mask_duplicates_as_walls(obs, env.state)

    def _action_mask(self, env):
        return pickup_mask(env.state)

    def _replace_action(self, obs, action, env):
        return replacement_action_grid(env.state, action)


def guidance_for(env, mode: GuidanceMode | str) -> GuidanceModel:
    """Build the guidance model matching an environment family and mode."""
    mode = GuidanceMode(mode)
    if mode is GuidanceMode.NONE:
        return GuidanceModel(mode)
    family = getattr(env, "family", None)
    if family == "cardgame":
        return CardGameGuidance(mode)
    if family == "gridworld":
        return GridWorldGuidance(mode)
    raise ValueError(f"no guidance models for environment family {family!r}")


# --- card game -------------------------------------------------------------


def dead_hand_slots(state: CardGameState) -> list[int]:
    """Slots whose card cannot be played on any of the four piles."""
    dead = []
    for slot, card in enumerate(state.hand):
        if card == cardgame.EMPTY_SLOT:
            continue
        if not any(card_fits_pile(card, p, state.piles[p]) for p in range(4)):
            dead.append(slot)
    return dead


def valid_move_mask(state: CardGameState) -> np.ndarray:
    """0/1 vector over the 32 (slot, pile) actions; all-ones when no move is valid.

    The fallback keeps the masked distribution well-defined; the
    environment terminates such episodes before the action matters.
    """
    mask = np.zeros(cardgame.ACTION_COUNT, dtype=np.float64)
    piles = state.piles
    for slot, card in enumerate(state.hand):
        if card == cardgame.EMPTY_SLOT:
            continue
        base = slot * 4
        for pile in range(4):
            if card_fits_pile(card, pile, piles[pile]):
                mask[base + pile] = 1.0
    if not mask.any():
        mask[:] = 1.0
    return mask


def replacement_action(state: CardGameState, action: int) -> int:
    """Pass a valid move through; swap an invalid one for the closest-fit move.

    The substitute minimizes |card - pile top| over all valid moves, ties
    broken by the lowest action index.  With no valid move at all the
    original action is returned and the environment ends the episode.
    """
    move = cardgame.decode_action(action)
    if cardgame.is_valid_move(state, move):
        return action
    best_action = action
    best_diff = None
    for slot, card in enumerate(state.hand):
        if card == cardgame.EMPTY_SLOT:
            continue
        for pile in range(4):
            top = state.piles[pile]
            if card_fits_pile(card, pile, top):
                diff = abs(card - top)
                if best_diff is None or diff < best_diff:
                    best_diff = diff
                    best_action = slot * 4 + pile
    return best_action


def build_observation_mask_cop(state: CardGameState) -> Cop:
    """Declarative twin of the procedural observation mask.

    One decision variable per hand slot, domain {original value, empty};
    every shown card must fit at least one pile; the objective counts
    changed slots.  The optimum therefore hides exactly the dead cards.
    """
    csp = Csp()
    names = []
    piles = list(state.piles)
    for slot, card in enumerate(state.hand):
        name = f"slot{slot}"
        names.append(name)
        if card == cardgame.EMPTY_SLOT:
            csp.add_variable(name, [cardgame.EMPTY_SLOT])
        else:
            csp.add_variable(name, [cardgame.EMPTY_SLOT, card])
        csp.add_constraint(
            (name,),
            lambda v, tops=tuple(piles): v == cardgame.EMPTY_SLOT
            or any(card_fits_pile(v, p, tops[p]) for p in range(4)),
            name=f"playable_{slot}",
        )

    original = tuple(state.hand)

    def changed_count(*values: int) -> int:
        return sum(1 for v, o in zip(values, original) if v != o)

    return Cop(csp, tuple(names), changed_count)


# --- grid world ------------------------------------------------------------


def duplicate_in_front(state: gridworld.GridState) -> bool:
    code = gridworld.front_code(state)
    return code >= ITEM_BASE and bool(state.inventory[code - ITEM_BASE])


def new_item_in_front(state: gridworld.GridState) -> bool:
    code = gridworld.front_code(state)
    return code >= ITEM_BASE and not state.inventory[code - ITEM_BASE]


def mask_duplicates_as_walls(obs: np.ndarray, state: gridworld.GridState) -> np.ndarray:
    """Re-encode every already-collected item in view as a wall cell.

    Only the observation changes; the environment still holds the item,
    so the agent can walk over and collect it regardless.  The inventory
    part of the observation is left untouched.
    """
    codes = gridworld.view_codes(state).copy()
    item_cells = codes >= ITEM_BASE
    if item_cells.any():
        identities = np.where(item_cells, codes - ITEM_BASE, 0)
        codes[item_cells & state.inventory[identities]] = WALL
    image = gridworld.one_hot_cells(codes).reshape(-1)
    masked = obs.copy()
    masked[: image.size] = image
    return masked


def pickup_mask(state: gridworld.GridState) -> np.ndarray:
    """Force pickup when a new item is ahead, forbid it otherwise."""
    if new_item_in_front(state):
        return np.array([0.0, 0.0, 0.0, 1.0])
    return np.array([1.0, 1.0, 1.0, 0.0])


def replacement_action_grid(state: gridworld.GridState, action: int) -> int:
    """Turn right instead of picking up an item that is already collected."""
    if action == PICKUP and duplicate_in_front(state):
        return RIGHT
    return action


# --- policy-side mask application -------------------------------------------


def apply_mask_to_policy(logits: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Masked action distribution: softmax, multiply by the mask, renormalize.

    Masked actions end up with probability exactly zero.  An all-zero
    mask has no valid renormalization and is rejected as a usage error.
    """
    logits = np.asarray(logits, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    if logits.shape != mask.shape:
        raise ValueError("logits and mask lengths differ")
    if not mask.any():
        raise ValueError("mask disables every action")
    shifted = logits - logits.max()
    probs = np.exp(shifted) * (mask != 0.0)
    return probs / probs.sum()
