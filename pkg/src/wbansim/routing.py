"""Per-class Q-learning policies and main/backup next-hop selection.

Each node holds three tables, one per packet class, keyed (state, action) =
(current node id, neighbor id); unknown entries read as 0. Rewards combine the
class membership of the forwarding node with the link context of the chosen
next hop: the emergency policy favors low delay and free buffer, the error-
sensitive policy low error rate, the normal policy high residual energy.
Terminal cases pin the reward to +100 (sink reached) or -100 (next hop is a
geographic dead end).

Main route is the class table's argmax (epsilon-greedy during learning); the
backup pool merges the class runner-up with the other policies' favorites and
is ranked by a score blending a class-specific link heuristic with normalized
Q-values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

R_MAX = 100.0
R_MIN = -100.0


class PolicyTable:
    """Q-value store for one class policy."""

    __slots__ = ("policy_id", "entries")

    def __init__(self, policy_id: int):
        self.policy_id = policy_id
        self.entries = {}

    def get(self, state, action) -> float:
        return self.entries.get((state, action), 0.0)

    def set(self, state, action, value: float):
        self.entries[(state, action)] = value

    def max_over(self, state, actions) -> float:
        """max_a Q(state, a) over the given actions; empty set reads 0."""
        best = None
        for a in actions:
            q = self.entries.get((state, a), 0.0)
            if best is None or q > best:
                best = q
        return 0.0 if best is None else best

    def argmax(self, state, actions):
        """Best action by Q, lowest id on ties; None for an empty set."""
        best, best_q = None, None
        for a in sorted(actions):
            q = self.entries.get((state, a), 0.0)
            if best_q is None or q > best_q:
                best, best_q = a, q
        return best

    def snapshot_hash(self) -> int:
        """Order-independent digest; used to prove non-mutation."""
        return hash(tuple(sorted(self.entries.items())))


def q_update(table: PolicyTable, s, a, reward: float, next_max: float,
             alpha: float, gamma: float) -> float:
    """Bellman blend toward reward + gamma * next_max; returns the new value.

    next_max is the successor node's own best Q for this class (0 when the
    successor is the sink or has no actions).
    """
    old = table.get(s, a)
    new = (1.0 - alpha) * old + alpha * (reward + gamma * next_max)
    table.set(s, a, new)
    return new


def epsilon_for_episode(episode: int, cfg) -> float:
    """Exploration rate after `episode` completed episodes (0-based)."""
    return max(cfg.epsilon_min, cfg.epsilon_start * cfg.epsilon_decay ** episode)


# --- link context -------------------------------------------------------------

@dataclass
class LinkContext:
    """Raw and normalized per-neighbor QoS quantities.

    Raw: delay L (seconds), error rate xi, residual energy E (joules), free
    buffer F (packets). Normalized forms divide by the max over the neighbor
    set under evaluation (a zero max normalizes to 0).
    """
    L: float
    xi: float
    E: float
    F: float
    Ln: float = 0.0
    xin: float = 0.0
    En: float = 0.0
    Fn: float = 0.0


def error_rate(p_sent: int, p_lost: int, p_received: int, p_corrupt: int) -> float:
    """xi = (PLR + PER) / 2 with empty-counter terms reading 0."""
    plr = p_lost / p_sent if p_sent > 0 else 0.0
    per = p_corrupt / p_received if p_received > 0 else 0.0
    return 0.5 * plr + 0.5 * per


def normalize_context(raw: dict) -> dict:
    """raw: action id -> (L, xi, E, F). Returns action id -> LinkContext with
    normalized fields filled against the set-wide maxima."""
    if not raw:
        raise ValueError("empty neighbor set")
    max_l = max(v[0] for v in raw.values())
    max_x = max(v[1] for v in raw.values())
    max_e = max(v[2] for v in raw.values())
    max_f = max(v[3] for v in raw.values())
    out = {}
    for a, (L, xi, E, F) in raw.items():
        out[a] = LinkContext(
            L=L, xi=xi, E=E, F=F,
            Ln=L / max_l if max_l > 0 else 0.0,
            xin=xi / max_x if max_x > 0 else 0.0,
            En=E / max_e if max_e > 0 else 0.0,
            Fn=F / max_f if max_f > 0 else 0.0,
        )
    return out


def immediate_reward(p: int, u_state: float, ctx: LinkContext,
                     next_is_sink: bool, next_is_local_min: bool) -> float:
    """Reward for the realized transition, in [-100, 100].

    u_state is the forwarding node's membership in class p; it scales the
    non-terminal reward. The buffer term rewards larger normalized free space,
    exactly as the reward definition reads.
    """
    if next_is_sink:
        return R_MAX
    if next_is_local_min:
        return R_MIN
    if p == 1:
        r = u_state * (math.exp(-ctx.Ln) + (1.0 - math.exp(-ctx.Fn))) / 2.0
    elif p == 2:
        r = u_state * math.exp(-ctx.xin)
    else:
        r = u_state * (1.0 - math.exp(-ctx.En))
    return 100.0 * r


# --- action selection ---------------------------------------------------------

class NoRoute(Exception):
    """Raised when a forwarding decision has no eligible action."""


def eligible_actions(neighbors, memberships, p: int, threshold: float,
                     exclude=()) -> list:
    """Neighbors whose class-p membership clears the threshold, minus any
    excluded ids (already-visited nodes); falls back to the full set when the
    threshold empties it. Sorted by id for deterministic iteration."""
    pool = [a for a in neighbors if a not in exclude]
    strong = [a for a in pool if memberships[a][p - 1] >= threshold]
    return sorted(strong if strong else pool)


def select_action_eps_greedy(table: PolicyTable, s, eligible, eps: float, rng):
    """Uniform random with probability eps, argmax otherwise."""
    if not eligible:
        raise NoRoute("empty eligible action set")
    if eps > 0.0 and rng.random() < eps:
        return eligible[rng.randrange(len(eligible))]
    return table.argmax(s, eligible)


def select_main_route(table: PolicyTable, s, eligible):
    """Pure exploitation pick for the class policy."""
    if not eligible:
        raise NoRoute("empty eligible action set")
    return table.argmax(s, eligible)


def backup_candidates(tables: dict, p: int, s, eligible, main) -> dict:
    """Runner-up of the class policy plus each other policy's favorite,
    excluding the main action. Returns candidate -> Q claim, where a candidate
    arriving from several policies keeps its largest claim (used only for the
    score normalization pool)."""
    claims = {}

    ranked = sorted(eligible, key=lambda a: (-tables[p].get(s, a), a))
    if len(ranked) >= 2:
        second = ranked[1]
        claims[second] = tables[p].get(s, second)

    for p_other in (1, 2, 3):
        if p_other == p:
            continue
        best = tables[p_other].argmax(s, eligible)
        if best is None:
            continue
        q = tables[p_other].get(s, best)
        if best not in claims or q > claims[best]:
            claims[best] = q

    claims.pop(main, None)
    return claims


def score_backup(claims: dict, p: int, s, main, main_q: float, beta: float,
                 raw_ctx: dict, e_max: float):
    """Rank backup candidates: Score = beta * H + (1 - beta) * Qn.

    H depends on the main class: delay headroom for emergency, error headroom
    for error-sensitive, energy fraction for normal. Qn min-max normalizes the
    candidate claims together with the main route's Q; a flat pool scores 0.5
    for everyone. Returns (scores dict, chosen backup or None).
    """
    if not claims:
        return {}, None

    pool = list(claims.values()) + [main_q]
    lo, hi = min(pool), max(pool)
    flat = hi - lo <= 0.0

    max_l = max(v[0] for v in raw_ctx.values())
    max_x = max(v[1] for v in raw_ctx.values())

    scores = {}
    for a, q in claims.items():
        L, xi, E, _F = raw_ctx[a]
        if p == 1:
            h = 1.0 - (L / max_l if max_l > 0 else 0.0)
        elif p == 2:
            h = 1.0 - (xi / max_x if max_x > 0 else 0.0)
        else:
            h = E / e_max if e_max > 0 else 0.0
        qn = 0.5 if flat else (q - lo) / (hi - lo)
        scores[a] = beta * h + (1.0 - beta) * qn

    backup = min(scores, key=lambda a: (-scores[a], a))
    return scores, backup


@dataclass
class RouteDecision:
    main_action: int
    backup_action: int | None
    backup_set: dict
    scores: dict
    explored: bool


def decide_route(tables: dict, p: int, s, eligible, eps: float, rng,
                 raw_ctx: dict, memberships_self, e_max: float) -> RouteDecision:
    """Full per-packet decision: epsilon-greedy main, scored backup."""
    if not eligible:
        raise NoRoute("no eligible next hop")
    exploit = select_main_route(tables[p], s, eligible)
    if eps > 0.0 and rng.random() < eps:
        main = eligible[rng.randrange(len(eligible))]
    else:
        main = exploit
    claims = backup_candidates(tables, p, s, eligible, main)
    beta = memberships_self[p - 1]
    scores, backup = score_backup(claims, p, s, main, tables[p].get(s, main),
                                  beta, raw_ctx, e_max)
    return RouteDecision(main_action=main, backup_action=backup,
                         backup_set=claims, scores=scores,
                         explored=main != exploit)
