"""Walk through the card game rules: piles, hands, rewards, episode end.

Run:  python demos/01_card_game_basics.py
"""

import numpy as np

from guidedrl.cardgame import (
    CardGameEnv,
    CardMove,
    apply_move,
    encode_action,
    is_valid_move,
    new_game,
)

state = new_game(seed=7)
print("A fresh game, seed 7")
print("  piles:", state.piles, "(two ascending from 1, two descending from 100)")
print("  hand: ", state.hand)
print("  draw pile size:", len(state.draw_pile))

print("\nValidity of a few moves for this hand:")
for slot in (5, 6, 7):
    for pile in range(4):
        move = CardMove(slot, pile)
        print(
            f"  card {state.hand[slot]:2d} on pile {pile} (top {state.piles[pile]:3d}):",
            "valid" if is_valid_move(state, move) else "invalid",
        )

print("\nThe backward-ten exception: a pile at 42 accepts exactly 32.")
state.piles[0] = 42
state.hand[7] = 32
print("  card 32 on ascending top 42 ->", is_valid_move(state, CardMove(7, 0)))

print("\nPlaying an episode of uniformly random *valid* moves:")
state = new_game(seed=7)
rng = np.random.default_rng(0)
total = 0.0
while not state.terminated:
    options = [
        CardMove(s, p)
        for s in range(8)
        for p in range(4)
        if is_valid_move(state, CardMove(s, p))
    ]
    outcome = apply_move(state, options[rng.integers(len(options))])
    total += outcome.reward
print(f"  cards played: {state.played_count}, total return: {total:.1f}")
print("  (each valid move paid +0.1 and the final move added the played count)")

print("\nThe same game through the environment interface:")
env = CardGameEnv()
obs = env.reset(seed=7)
print("  observation (4 pile tops + 8 hand cards, scaled by 1/100):")
print(" ", np.round(obs, 3))
outcome = env.step(encode_action(CardMove(7, 0)))  # highest card on an ascending pile
print(f"  played the top card: reward {outcome.reward:+.1f}, "
      f"invalid={outcome.invalid_action}")
outcome = env.step(encode_action(CardMove(0, 0)))  # slot 0 is now a placeholder
print(f"  played an empty slot: reward {outcome.reward:+.1f}, "
      f"invalid={outcome.invalid_action}")
print("  pile tops after both:", env.state.piles)
