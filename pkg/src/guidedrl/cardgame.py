"""Single-player solitaire card game: place 98 cards onto four piles.

Cards are valued 2..99.  Piles 0 and 1 grow upward from 1, piles 2 and 3
grow downward from 100.  A card may go on an ascending pile when it is
higher than the top, or exactly ten lower (the backward-ten exception);
descending piles mirror this.  The player holds 8 cards and refills two
from the draw pile after every two cards played.  A valid move earns
+0.1, an invalid attempt costs -0.1 and changes nothing, and the final
move additionally earns one point per card ever played.  The episode
ends when all 98 cards are placed or no move is possible.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .core import StepOutcome

HAND_SIZE = 8
PILE_COUNT = 4
ACTION_COUNT = HAND_SIZE * PILE_COUNT  # one action per (hand slot, pile) pair
OBSERVATION_SIZE = PILE_COUNT + HAND_SIZE
CARD_COUNT = 98
EMPTY_SLOT = -1
VALID_REWARD = 0.1
INVALID_REWARD = -0.1
DEFAULT_STEP_CAP = 1000  # invalid-move loops would otherwise never end


class CardMove(NamedTuple):
    hand_slot: int  # 0..7
    pile: int       # 0..3


def decode_action(index: int) -> CardMove:
    """Fixed bijection: index = slot * 4 + pile."""
    if not 0 <= index < ACTION_COUNT:
        raise ValueError(f"action index {index} outside [0, {ACTION_COUNT})")
    return CardMove(index // PILE_COUNT, index % PILE_COUNT)


def encode_action(move: CardMove) -> int:
    return move.hand_slot * PILE_COUNT + move.pile


@dataclass
class CardGameState:
    piles: list[int]             # tops; [0] and [1] ascending, [2] and [3] descending
    hand: list[int]              # 8 slots, EMPTY_SLOT placeholders first, then ascending
    draw_pile: list[int]         # next card to draw is at index 0
    played_count: int = 0
    plays_since_refill: int = 0  # toggles 0/1; refill happens on the second play
    terminated: bool = False


def new_game(seed: int) -> CardGameState:
    """Shuffle cards 2..99, deal 8 to the hand, leave 90 on the draw pile."""
    rng = np.random.default_rng(seed)
    deck = [int(c) for c in rng.permutation(np.arange(2, 100))]
    return CardGameState(
        piles=[1, 1, 100, 100],
        hand=sorted(deck[:HAND_SIZE]),
        draw_pile=deck[HAND_SIZE:],
    )


def card_fits_pile(card: int, pile: int, top: int) -> bool:
    if pile < 2:  # ascending: higher, or exactly ten lower
        return card > top or card == top - 10
    return card < top or card == top + 10


def is_valid_move(state: CardGameState, move: CardMove) -> bool:
    card = state.hand[move.hand_slot]
    if card == EMPTY_SLOT:
        return False
    return card_fits_pile(card, move.pile, state.piles[move.pile])


def has_any_valid_move(state: CardGameState) -> bool:
    piles = state.piles
    for card in state.hand:
        if card == EMPTY_SLOT:
            continue
        if (
            card > piles[0] or card == piles[0] - 10
            or card > piles[1] or card == piles[1] - 10
            or card < piles[2] or card == piles[2] + 10
            or card < piles[3] or card == piles[3] + 10
        ):
            return True
    return False


def refill_hand(state: CardGameState) -> None:
    """Draw until the hand holds 8 cards or the draw pile runs out."""
    missing = sum(1 for c in state.hand if c == EMPTY_SLOT)
    take = min(missing, len(state.draw_pile))
    if take:
        drawn = state.draw_pile[:take]
        del state.draw_pile[:take]
        kept = [c for c in state.hand if c != EMPTY_SLOT] + drawn
        kept.sort()
        state.hand = [EMPTY_SLOT] * (HAND_SIZE - len(kept)) + kept


def apply_move(state: CardGameState, move: CardMove) -> StepOutcome:
    """Apply one move in place and report reward and flags.

    Invalid moves leave the state untouched apart from the penalty.  A
    valid move places the card, re-sorts the hand (placeholders first),
    refills after every second play, and on reaching a terminal state
    (all cards played, or no move left) adds the played-card count to the
    step reward.
    """
    if state.terminated:
        raise RuntimeError("episode is over; start a new game before moving")

    if not is_valid_move(state, move):
        return StepOutcome(
            observation=encode_observation(state),
            reward=INVALID_REWARD,
            invalid_action=True,
        )

    card = state.hand[move.hand_slot]
    state.piles[move.pile] = card
    state.hand[move.hand_slot] = EMPTY_SLOT
    state.hand.sort()  # EMPTY_SLOT sorts below every card value
    state.played_count += 1
    state.plays_since_refill ^= 1
    if state.plays_since_refill == 0:
        refill_hand(state)

    reward = VALID_REWARD
    if state.played_count == CARD_COUNT or not has_any_valid_move(state):
        reward += state.played_count
        state.terminated = True

    return StepOutcome(
        observation=encode_observation(state),
        reward=reward,
        terminated=state.terminated,
    )


def encode_observation(state: CardGameState) -> np.ndarray:
    """12-dim vector: four pile tops then eight hand slots, scaled by 1/100.

    Empty slots encode as 0.0 so the placeholder never collides with a
    real card value.
    """
    obs = np.empty(OBSERVATION_SIZE, dtype=np.float64)
    obs[0] = state.piles[0]
    obs[1] = state.piles[1]
    obs[2] = state.piles[2]
    obs[3] = state.piles[3]
    for i, card in enumerate(state.hand):
        obs[4 + i] = card if card != EMPTY_SLOT else 0.0
    obs *= 0.01
    return obs


class CardGameEnv:
    """Episode-oriented wrapper over the pure game functions."""

    observation_size = OBSERVATION_SIZE
    action_count = ACTION_COUNT
    default_step_cap = DEFAULT_STEP_CAP
    family = "cardgame"

    def __init__(self, seed: int = 0):
        self._base_seed = seed
        self._episode = 0
        self.state: Optional[CardGameState] = None

    def reset(self, seed: Optional[int] = None) -> np.ndarray:
        if seed is not None:
            self._base_seed = seed
            self._episode = 0
        episode_seed = int(
            np.random.SeedSequence([self._base_seed, self._episode]).generate_state(1)[0]
        )
        self._episode += 1
        self.state = new_game(episode_seed)
        return encode_observation(self.state)

    def step(self, action: int) -> StepOutcome:
        if self.state is None:
            raise RuntimeError("reset() must be called before step()")
        return apply_move(self.state, decode_action(action))
