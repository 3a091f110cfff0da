"""Guidance models: minimal observation masking, safe replacement, action masks."""

import numpy as np
import pytest

from guidedrl import cardgame, gridworld
from guidedrl.cardgame import EMPTY_SLOT, CardGameEnv, CardGameState, CardMove, is_valid_move
from guidedrl.constraints import solve_minimize
from guidedrl.gridworld import ITEM_BASE, PICKUP, RIGHT, WALL, GridWorldEnv
from guidedrl.guidance import (
    CardGameGuidance,
    GridWorldGuidance,
    GuidanceMode,
    apply_mask_to_policy,
    build_observation_mask_cop,
    dead_hand_slots,
    guidance_for,
    mask_duplicates_as_walls,
    pickup_mask,
    replacement_action,
    replacement_action_grid,
    valid_move_mask,
)
from helpers import random_cardgame_state


def card_env_with(piles, hand):
    env = CardGameEnv()
    env.reset(0)
    env.state.piles = list(piles)
    env.state.hand = list(hand)
    return env


def grid_env_with_front(code, inventory=()):
    env = GridWorldEnv()
    env.reset(0)
    state = env.state
    x, y = 8, 8
    state.grid[y, x] = gridworld.EMPTY
    state.agent_pos = (x, y)
    state.agent_dir = 1  # facing east
    state.grid[y, x + 1] = code
    for identity in inventory:
        state.inventory[identity] = True
    return env


# --- observation mask (minimal state changes) --------------------------------


def test_cardgame_mask_identity_when_every_card_fits_somewhere():
    env = card_env_with([97, 96, 4, 5], [EMPTY_SLOT] * 6 + [3, 98])
    guidance = CardGameGuidance(GuidanceMode.OBSERVATION_MASK)
    obs = cardgame.encode_observation(env.state)
    masked = guidance.mask_observation(obs, env)
    assert np.array_equal(masked, obs)


def test_cardgame_mask_hides_dead_card_in_place():
    env = card_env_with([97, 98, 3, 2], [EMPTY_SLOT] * 6 + [50, 97])
    # Oracle: 50 fails all four pile rules, 97 does not (97 == 87+10 fails...
    # 97 > 97? no; 97 == 87? no; but 97 < 3/2? no; 97 == 13/12? no) -> 97 dead too?
    # 97 fits pile 0 only if 97 > 97 or 97 == 87: neither. Recheck each card:
    for card, dead in ((50, True), (97, True)):
        fits = [
            card > 97 or card == 87,
            card > 98 or card == 88,
            card < 3 or card == 13,
            card < 2 or card == 12,
        ]
        assert any(fits) != dead
    guidance = CardGameGuidance(GuidanceMode.OBSERVATION_MASK)
    obs = cardgame.encode_observation(env.state)
    masked = guidance.mask_observation(obs, env)
    assert masked[4 + 6] == 0.0 and masked[4 + 7] == 0.0
    assert np.array_equal(masked[:10], obs[:10])


def test_cardgame_mask_preserves_slot_order():
    env = card_env_with([97, 98, 3, 2], [EMPTY_SLOT] * 5 + [50, 96, 99])
    guidance = CardGameGuidance(GuidanceMode.OBSERVATION_MASK)
    masked = guidance.mask_observation(cardgame.encode_observation(env.state), env)
    # 50 is dead, 99 plays on pile 0 (99 > 97), 96 is dead (96 < 97, != 87; ...).
    assert masked[4 + 5] == 0.0
    assert masked[4 + 6] == 0.0
    assert masked[4 + 7] == pytest.approx(0.99)


def test_gridworld_mask_rewrites_duplicates_as_walls():
    env = grid_env_with_front(ITEM_BASE + 4, inventory=[4])
    obs = gridworld.encode_observation(env.state)
    masked = mask_duplicates_as_walls(obs, env.state)
    cells = masked[: 49 * gridworld.CHANNELS].reshape(7, 7, gridworld.CHANNELS)
    ahead = cells[5, 3]
    wall_cell = np.zeros(gridworld.CHANNELS)
    wall_cell[WALL] = 1.0
    assert np.array_equal(ahead, wall_cell)
    # Inventory tail untouched.
    assert np.array_equal(masked[49 * gridworld.CHANNELS :], obs[49 * gridworld.CHANNELS :])


def test_gridworld_mask_keeps_new_items_visible():
    env = grid_env_with_front(ITEM_BASE + 4)
    obs = gridworld.encode_observation(env.state)
    masked = mask_duplicates_as_walls(obs, env.state)
    assert np.array_equal(masked, obs)


def test_gridworld_mask_changes_observation_but_not_dynamics():
    """Masking is observation-only: the duplicate can still be collected."""
    env = grid_env_with_front(ITEM_BASE + 4, inventory=[4])
    guidance = guidance_for(env, GuidanceMode.OBSERVATION_MASK)
    obs = gridworld.encode_observation(env.state)
    assert not np.array_equal(guidance.mask_observation(obs, env), obs)
    outcome = env.step(PICKUP)
    assert outcome.duplicate_pickup and outcome.reward == pytest.approx(-1.0)


# --- observation-mask COP (declarative twin) ---------------------------------


def test_cop_identity_optimum_when_all_playable():
    state = CardGameState(piles=[1, 1, 100, 100], hand=list(range(10, 18)), draw_pile=[])
    assignment, z = solve_minimize(build_observation_mask_cop(state))
    assert z == 0
    assert [assignment[f"slot{i}"] for i in range(8)] == state.hand


def test_cop_single_dead_card_changes_exactly_that_slot():
    state = CardGameState(
        piles=[90, 95, 6, 8], hand=[EMPTY_SLOT] * 5 + [7, 50, 96], draw_pile=[]
    )
    # 50 fits nothing (>90? ==80? >95? ==85? <6? ==16? <8? ==18? all no);
    # 7 plays under 8, 96 plays over 90.
    assert dead_hand_slots(state) == [6]
    assignment, z = solve_minimize(build_observation_mask_cop(state))
    assert z == 1
    values = [assignment[f"slot{i}"] for i in range(8)]
    assert values[6] == EMPTY_SLOT
    assert values[:6] == state.hand[:6] and values[7] == state.hand[7]


def test_cop_equals_procedural_mask_on_random_states():
    """Cross-oracle: solver optimum == procedural mask, change count == z."""
    rng = np.random.default_rng(123)
    for _ in range(200):
        state = random_cardgame_state(rng)
        dead = dead_hand_slots(state)
        assignment, z = solve_minimize(build_observation_mask_cop(state))
        assert z == len(dead)
        for slot in range(8):
            expect = EMPTY_SLOT if slot in dead else state.hand[slot]
            assert assignment[f"slot{slot}"] == expect


# --- action replacement ------------------------------------------------------


def test_replacement_picks_global_min_difference():
    """Hand {9, 11, 50} vs piles [10, 1, 90, 100]: 9-on-0 becomes 11-on-0."""
    state = CardGameState(
        piles=[10, 1, 90, 100], hand=[EMPTY_SLOT] * 5 + [9, 11, 50], draw_pile=[]
    )
    # Oracle: brute force the difference table over all 32 (slot, pile) pairs.
    best = None
    for slot in range(8):
        card = state.hand[slot]
        if card == EMPTY_SLOT:
            continue
        for pile in range(4):
            if is_valid_move(state, CardMove(slot, pile)):
                diff = abs(card - state.piles[pile])
                key = (diff, slot * 4 + pile)
                if best is None or key < best:
                    best = key
    assert best == (1, 6 * 4 + 0)  # card 11 on pile 0

    chosen = replacement_action(state, 5 * 4 + 0)  # card 9 on pile 0 is invalid
    assert chosen == 6 * 4 + 0


def test_replacement_passes_valid_moves_through():
    rng = np.random.default_rng(5)
    for _ in range(100):
        state = random_cardgame_state(rng)
        for action in range(32):
            if is_valid_move(state, cardgame.decode_action(action)):
                assert replacement_action(state, action) == action


def test_replacement_output_is_valid_whenever_possible():
    """Def-2 safety: the substitute satisfies the rules if any action can."""
    rng = np.random.default_rng(6)
    for _ in range(300):
        state = random_cardgame_state(rng)
        any_valid = any(
            is_valid_move(state, cardgame.decode_action(a)) for a in range(32)
        )
        for action in (0, 13, 31):
            out = replacement_action(state, action)
            if any_valid:
                assert is_valid_move(state, cardgame.decode_action(out))
            else:
                assert out == action  # unchanged; the episode is ending anyway


def test_replacement_tie_breaks_to_lowest_action_index():
    # Cards 20 and 24 both sit 2 away from a pile top: 20->pile0(18), 24->pile2(26)?
    # Use symmetric distances: piles [18, 1, 22, 100]; card 20 on pile 0 diff 2,
    # card 20 on pile 2 diff 2 as well (20 < 22). Lowest action index wins.
    state = CardGameState(
        piles=[18, 1, 22, 100], hand=[EMPTY_SLOT] * 7 + [20], draw_pile=[]
    )
    state.hand[0] = EMPTY_SLOT
    chosen = replacement_action(state, 0)  # slot 0 empty -> invalid
    assert chosen == 7 * 4 + 0  # pile 0 precedes pile 2 at equal difference


def test_grid_replacement_swaps_duplicate_pickup_for_right_turn():
    env = grid_env_with_front(ITEM_BASE + 2, inventory=[2])
    assert replacement_action_grid(env.state, PICKUP) == RIGHT
    guidance = guidance_for(env, GuidanceMode.ACTION_REPLACEMENT)
    obs = gridworld.encode_observation(env.state)
    assert guidance.replace_action(obs, PICKUP, env) == RIGHT


def test_grid_replacement_passes_everything_else():
    env = grid_env_with_front(ITEM_BASE + 2)  # distinct item ahead
    for action in range(4):
        assert replacement_action_grid(env.state, action) == action
    dup = grid_env_with_front(ITEM_BASE + 2, inventory=[2])
    for action in (0, 1, 2):  # only pickup is intercepted
        assert replacement_action_grid(dup.state, action) == action


# --- action masks -------------------------------------------------------------


def test_cardgame_mask_marks_exactly_the_valid_pairs():
    state = CardGameState(
        piles=[4, 50, 60, 10], hand=[EMPTY_SLOT] * 7 + [5], draw_pile=[]
    )
    mask = valid_move_mask(state)
    # Oracle: card 5 plays on piles 0 (5>4), 2 (5<60), 3 (5<10); not 1.
    expected = np.zeros(32)
    expected[7 * 4 + 0] = expected[7 * 4 + 2] = expected[7 * 4 + 3] = 1.0
    assert np.array_equal(mask, expected)
    assert mask.sum() == 3


def test_cardgame_mask_agrees_with_validity_oracle_on_random_states():
    rng = np.random.default_rng(17)
    for _ in range(200):
        state = random_cardgame_state(rng)
        mask = valid_move_mask(state)
        oracle = np.array(
            [
                1.0 if is_valid_move(state, cardgame.decode_action(a)) else 0.0
                for a in range(32)
            ]
        )
        if oracle.any():
            assert np.array_equal(mask, oracle)
        else:
            assert mask.all()  # all-ones fallback on dead states


def test_grid_mask_forces_pickup_on_new_item():
    env = grid_env_with_front(ITEM_BASE + 6)
    assert np.array_equal(pickup_mask(env.state), [0.0, 0.0, 0.0, 1.0])


def test_grid_mask_disables_pickup_otherwise():
    for env in (
        grid_env_with_front(gridworld.EMPTY),
        grid_env_with_front(WALL),
        grid_env_with_front(ITEM_BASE + 6, inventory=[6]),  # duplicate ahead
    ):
        assert np.array_equal(pickup_mask(env.state), [1.0, 1.0, 1.0, 0.0])


# --- mask application into the policy -----------------------------------------


def test_all_ones_mask_is_plain_softmax():
    logits = np.array([0.3, -1.2, 2.0, 0.0])
    probs = apply_mask_to_policy(logits, np.ones(4))
    reference = np.exp(logits - logits.max())
    reference /= reference.sum()
    assert np.allclose(probs, reference)


def test_uniform_logits_with_k_ones_gives_one_over_k():
    mask = np.array([1.0, 0.0, 1.0, 0.0, 1.0])
    probs = apply_mask_to_policy(np.zeros(5), mask)
    assert np.allclose(probs[mask == 1.0], 1.0 / 3.0)
    assert (probs[mask == 0.0] == 0.0).all()


def test_masked_action_never_sampled_in_a_million_draws():
    rng = np.random.default_rng(0)
    logits = rng.normal(size=6)
    mask = np.array([1.0, 0.0, 1.0, 1.0, 0.0, 1.0])
    probs = apply_mask_to_policy(logits, mask)
    draws = rng.choice(6, size=1_000_000, p=probs)
    assert not np.isin(draws, [1, 4]).any()


def test_all_zero_mask_is_rejected():
    with pytest.raises(ValueError):
        apply_mask_to_policy(np.zeros(4), np.zeros(4))


def test_mask_length_mismatch_is_rejected():
    with pytest.raises(ValueError):
        apply_mask_to_policy(np.zeros(4), np.ones(5))


# --- mode gating and pass-through ----------------------------------------------


def test_exactly_one_interface_active_per_mode():
    env = card_env_with([1, 1, 100, 100], [EMPTY_SLOT] * 7 + [50])
    obs = cardgame.encode_observation(env.state)

    replace = guidance_for(env, GuidanceMode.ACTION_REPLACEMENT)
    assert np.array_equal(replace.mask_observation(obs, env), obs)
    assert replace.action_mask(env) is None

    mask = guidance_for(env, GuidanceMode.ACTION_MASK)
    assert mask.action_mask(env) is not None
    assert mask.replace_action(obs, 3, env) == 3

    observe = guidance_for(env, GuidanceMode.OBSERVATION_MASK)
    assert observe.action_mask(env) is None
    assert observe.replace_action(obs, 3, env) == 3


def test_pass_through_when_constraints_already_satisfied():
    """On compliant choices every model is the identity."""
    state = CardGameState(piles=[1, 1, 100, 100], hand=list(range(50, 58)), draw_pile=[])
    env = CardGameEnv()
    env.reset(0)
    env.state = state
    obs = cardgame.encode_observation(state)
    assert np.array_equal(
        CardGameGuidance(GuidanceMode.OBSERVATION_MASK).mask_observation(obs, env), obs
    )
    for action in range(32):  # fresh-style piles accept every card
        assert is_valid_move(state, cardgame.decode_action(action))
        assert (
            CardGameGuidance(GuidanceMode.ACTION_REPLACEMENT).replace_action(obs, action, env)
            == action
        )
    assert CardGameGuidance(GuidanceMode.ACTION_MASK).action_mask(env).all()


def test_guidance_for_unknown_family_fails():
    class Unknown:
        family = "rocketship"
        action_count = 2

    with pytest.raises(ValueError):
        guidance_for(Unknown(), GuidanceMode.ACTION_MASK)
    assert guidance_for(Unknown(), "none").mode is GuidanceMode.NONE


def test_gridworld_guidance_class_dispatch():
    env = GridWorldEnv()
    env.reset(0)
    assert isinstance(guidance_for(env, "action-mask"), GridWorldGuidance)
    assert isinstance(guidance_for(CardGameEnv(), "obs-mask"), CardGameGuidance)
