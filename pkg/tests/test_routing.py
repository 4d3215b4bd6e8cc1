"""Policy tables, rewards, and the main/backup selection pipeline."""

import math
import random
from dataclasses import replace

import pytest

from oracles import closed_form_terminal_q
from wbansim.config import SimConfig
from wbansim.routing import (LinkContext, NoRoute, PolicyTable,
                             backup_candidates, decide_route, eligible_actions,
                             epsilon_for_episode, error_rate, immediate_reward,
                             normalize_context, q_update, score_backup,
                             select_action_eps_greedy, select_main_route)


# --- table mechanics ----------------------------------------------------------

def test_table_default_zero_and_set_get():
    t = PolicyTable(1)
    assert t.get(3, 4) == 0.0
    t.set(3, 4, 2.5)
    assert t.get(3, 4) == 2.5


def test_max_over_and_argmax():
    t = PolicyTable(2)
    t.set(0, 5, 1.0)
    t.set(0, 7, 3.0)
    t.set(0, 9, -2.0)
    assert t.max_over(0, [5, 7, 9]) == 3.0
    assert t.max_over(0, [9]) == -2.0
    assert t.max_over(0, []) == 0.0
    assert t.argmax(0, [5, 7, 9]) == 7
    assert t.argmax(0, []) is None
    # unknown actions read as zero and can win over negative entries
    assert t.argmax(0, [9, 11]) == 11


def test_argmax_tie_breaks_low_id():
    t = PolicyTable(1)
    t.set(0, 4, 1.0)
    t.set(0, 2, 1.0)
    assert t.argmax(0, [4, 2]) == 2


def test_snapshot_hash_order_independent():
    a, b = PolicyTable(1), PolicyTable(1)
    a.set(0, 1, 5.0)
    a.set(2, 3, 7.0)
    b.set(2, 3, 7.0)
    b.set(0, 1, 5.0)
    assert a.snapshot_hash() == b.snapshot_hash()
    b.set(0, 1, 5.1)
    assert a.snapshot_hash() != b.snapshot_hash()


def test_q_update_single_step():
    t = PolicyTable(1)
    t.set(0, 1, 10.0)
    new = q_update(t, 0, 1, 20.0, 8.0, alpha=0.5, gamma=0.5)
    assert new == pytest.approx(0.5 * 10.0 + 0.5 * (20.0 + 0.5 * 8.0))
    assert t.get(0, 1) == new


@pytest.mark.parametrize("alpha,r", [(0.9, 100.0), (0.9, -100.0), (0.3, 42.0)])
def test_repeated_terminal_update_closed_form(alpha, r):
    t = PolicyTable(1)
    for k in range(1, 21):
        q_update(t, 0, 1, r, 0.0, alpha, 0.5)
        assert t.get(0, 1) == pytest.approx(
            closed_form_terminal_q(r, alpha, k), abs=1e-12)


def test_epsilon_schedule():
    cfg = replace(SimConfig(), epsilon_start=0.9, epsilon_decay=0.9,
                  epsilon_min=0.1)
    assert epsilon_for_episode(0, cfg) == pytest.approx(0.9)
    assert epsilon_for_episode(1, cfg) == pytest.approx(0.81)
    assert epsilon_for_episode(500, cfg) == 0.1  # floor


# --- link context -------------------------------------------------------------

def test_error_rate_definition():
    assert error_rate(10, 2, 20, 1) == pytest.approx(0.5 * 0.2 + 0.5 * 0.05)
    assert error_rate(0, 0, 0, 0) == 0.0          # no samples yet
    assert error_rate(4, 4, 0, 0) == pytest.approx(0.5)
    assert error_rate(0, 0, 10, 10) == pytest.approx(0.5)


def test_normalize_context_against_set_maxima():
    raw = {1: (0.2, 0.1, 4.0, 8.0), 2: (0.4, 0.0, 2.0, 4.0)}
    ctx = normalize_context(raw)
    assert ctx[1].Ln == pytest.approx(0.5)
    assert ctx[2].Ln == pytest.approx(1.0)
    assert ctx[1].xin == pytest.approx(1.0)
    assert ctx[2].xin == 0.0
    assert ctx[1].En == pytest.approx(1.0)
    assert ctx[2].Fn == pytest.approx(0.5)
    assert ctx[1].L == 0.2 and ctx[1].F == 8.0   # raw fields preserved


def test_normalize_context_zero_max_normalizes_to_zero():
    ctx = normalize_context({1: (0.0, 0.0, 0.0, 0.0)})
    assert ctx[1].Ln == 0.0 and ctx[1].xin == 0.0
    assert ctx[1].En == 0.0 and ctx[1].Fn == 0.0
    with pytest.raises(ValueError):
        normalize_context({})


# --- rewards ------------------------------------------------------------------

def test_terminal_rewards_exact():
    ctx = LinkContext(L=1, xi=1, E=1, F=1, Ln=0.3, xin=0.3, En=0.3, Fn=0.3)
    for p in (1, 2, 3):
        assert immediate_reward(p, 0.7, ctx, True, False) == 100.0
        assert immediate_reward(p, 0.7, ctx, False, True) == -100.0
        # sink arrival wins over the dead-end flag
        assert immediate_reward(p, 0.7, ctx, True, True) == 100.0


def test_reward_formulas_by_class():
    ctx = LinkContext(L=0, xi=0, E=0, F=0, Ln=0.4, xin=0.6, En=0.2, Fn=0.9)
    u = 0.8
    assert immediate_reward(1, u, ctx, False, False) == pytest.approx(
        100.0 * u * (math.exp(-0.4) + (1.0 - math.exp(-0.9))) / 2.0)
    assert immediate_reward(2, u, ctx, False, False) == pytest.approx(
        100.0 * u * math.exp(-0.6))
    assert immediate_reward(3, u, ctx, False, False) == pytest.approx(
        100.0 * u * (1.0 - math.exp(-0.2)))


def test_reward_bounds_random_sampling():
    rng = random.Random(23)
    for _ in range(5000):
        ctx = LinkContext(L=0, xi=0, E=0, F=0, Ln=rng.random(),
                          xin=rng.random(), En=rng.random(), Fn=rng.random())
        r = immediate_reward(rng.randrange(1, 4), rng.random(), ctx,
                             False, False)
        assert -100.0 <= r <= 100.0


# --- action selection ---------------------------------------------------------

MEMBERS = {1: (0.9, 0.05, 0.05), 2: (0.1, 0.8, 0.1), 3: (0.3, 0.3, 0.4)}


def test_eligible_actions_threshold_and_fallback():
    neigh = [3, 1, 2]
    assert eligible_actions(neigh, MEMBERS, 1, 0.25) == [1, 3]
    assert eligible_actions(neigh, MEMBERS, 2, 0.25) == [2, 3]
    # nobody clears an absurd threshold: fall back to the whole pool
    assert eligible_actions(neigh, MEMBERS, 1, 0.95) == [1, 2, 3]
    assert eligible_actions(neigh, MEMBERS, 1, 0.25, exclude={1}) == [3]
    assert eligible_actions([], MEMBERS, 1, 0.25) == []


def test_eps_greedy_selection():
    t = PolicyTable(1)
    t.set(0, 2, 9.0)
    rng = random.Random(3)
    assert select_action_eps_greedy(t, 0, [1, 2, 3], 0.0, rng) == 2
    picks = {select_action_eps_greedy(t, 0, [1, 2, 3], 1.0, rng)
             for _ in range(100)}
    assert picks == {1, 2, 3}
    with pytest.raises(NoRoute):
        select_action_eps_greedy(t, 0, [], 0.5, rng)
    with pytest.raises(NoRoute):
        select_main_route(t, 0, [])


def make_tables(entries):
    tables = {p: PolicyTable(p) for p in (1, 2, 3)}
    for p, s, a, q in entries:
        tables[p].set(s, a, q)
    return tables


def test_backup_candidates_merges_policies():
    tables = make_tables([
        (1, 0, 1, 9.0), (1, 0, 2, 7.0), (1, 0, 3, 1.0),
        (2, 0, 3, 5.0),
        (3, 0, 1, 4.0),
    ])
    claims = backup_candidates(tables, 1, 0, [1, 2, 3], main=1)
    # class runner-up 2, error-sensitive favorite 3; main excluded even
    # though the normal policy also nominates it
    assert set(claims) == {2, 3}
    assert claims[2] == 7.0
    assert claims[3] == 5.0


def test_backup_candidate_keeps_largest_claim():
    tables = make_tables([
        (1, 0, 1, 9.0), (1, 0, 2, 3.0),
        (2, 0, 2, 8.0),
        (3, 0, 2, 6.0),
    ])
    claims = backup_candidates(tables, 1, 0, [1, 2], main=1)
    assert claims == {2: 8.0}


def test_score_backup_blend_and_flat_pool():
    raw = {2: (0.01, 0.2, 0.5, 3.0), 3: (0.02, 0.1, 0.25, 3.0)}
    claims = {2: 4.0, 3: 2.0}
    scores, backup = score_backup(claims, 1, 0, main=1, main_q=6.0, beta=0.5,
                                  raw_ctx=raw, e_max=1.0)
    # emergency headroom: 1 - L/Lmax; Q normalized against [2, 6]
    assert scores[2] == pytest.approx(0.5 * (1 - 0.01 / 0.02) + 0.5 * 0.5)
    assert scores[3] == pytest.approx(0.5 * (1 - 1.0) + 0.5 * 0.0)
    assert backup == 2

    flat_scores, _ = score_backup({2: 5.0, 3: 5.0}, 3, 0, main=1, main_q=5.0,
                                  beta=0.0, raw_ctx=raw, e_max=1.0)
    assert flat_scores[2] == pytest.approx(0.5)  # flat Q pool scores mid

    assert score_backup({}, 1, 0, 1, 0.0, 0.5, raw, 1.0) == ({}, None)


def test_decide_route_exploit_and_explore():
    tables = make_tables([(1, 0, 2, 9.0), (1, 0, 3, 5.0)])
    raw = {2: (0.01, 0.0, 0.5, 3.0), 3: (0.02, 0.0, 0.25, 3.0)}
    decision = decide_route(tables, 1, 0, [2, 3], 0.0, random.Random(1),
                            raw, (0.5, 0.3, 0.2), e_max=1.0)
    assert decision.main_action == 2
    assert decision.backup_action == 3
    assert not decision.explored

    forced = decide_route(tables, 1, 0, [2, 3], 1.0, random.Random(7),
                          raw, (0.5, 0.3, 0.2), e_max=1.0)
    assert forced.main_action in (2, 3)
    with pytest.raises(NoRoute):
        decide_route(tables, 1, 0, [], 0.0, random.Random(1), raw,
                     (0.5, 0.3, 0.2), 1.0)
