"""Offline episode training for the class policies.

Walks packets through a static snapshot of the network, one episode per
packet, updating the class Q-table after every hop. Rewards come from a
caller-supplied function of (class, state, next hop), so the same loop serves
deterministic toy networks, warm-up before a timed run, and convergence
studies. Episodes end at the sink, at a dead end, or when the hop budget runs
out; the per-episode cumulative rewards are returned for convergence
tracking.
"""

from __future__ import annotations

from random import Random

from .routing import PolicyTable, epsilon_for_episode, q_update


class StaticRewardModel:
    """Deterministic reward lookup r(p, s, a) with sink arrival pinned to the
    terminal bonus. Built once from a topology snapshot and reused by both
    training and any independent planner working on the same numbers."""

    __slots__ = ("table", "sink_id")

    def __init__(self, table: dict, sink_id: int):
        self.table = table
        self.sink_id = sink_id

    def reward(self, p: int, s: int, a: int) -> float:
        return self.table[(p, s, a)]


def run_episode(tables: dict, p: int, source: int, adjacency: dict,
                sink_id: int, reward_fn, eps: float, rng: Random,
                alpha: float, gamma: float, max_hops: int) -> float:
    """One packet walk from source toward the sink; returns cumulative reward.

    The walk never revisits a node (loop prevention); the bootstrap max in the
    update is taken over the successor's full neighbor set so the learned
    fixed point matches a planner that knows nothing about walk history.
    """
    total = 0.0
    current = source
    visited = {source}
    table = tables[p]
    for _ in range(max_hops):
        actions = [a for a in adjacency[current] if a not in visited]
        if not actions:
            actions = adjacency[current]
        if not actions:
            # Isolated node: dead-end penalty recorded against nothing
            # forwardable; the episode just ends.
            total -= 100.0
            break
        if eps > 0.0 and rng.random() < eps:
            a = actions[rng.randrange(len(actions))]
        else:
            a = table.argmax(current, actions)
        r = reward_fn(p, current, a)
        if a == sink_id:
            next_max = 0.0
        else:
            next_max = table.max_over(a, adjacency[a])
        q_update(table, current, a, r, next_max, alpha, gamma)
        total += r
        if a == sink_id:
            break
        visited.add(a)
        current = a
    return total


def train(adjacency: dict, sink_id: int, cfg, reward_fn, episodes: int,
          rng: Random, classes=(1, 2, 3), source_mode: str = "round_robin",
          fixed_source: int | None = None, tables: dict | None = None):
    """Run `episodes` walks per class; returns (tables, rewards per class).

    source_mode: "round_robin" cycles every non-sink node (uniform state
    coverage), "random" draws a source per episode, "fixed" always starts at
    fixed_source. Epsilon decays on the per-class episode index.
    """
    if tables is None:
        tables = {p: PolicyTable(p) for p in classes}
    sources = sorted(s for s in adjacency if s != sink_id)
    if not sources:
        raise ValueError("no non-sink states to train from")
    if source_mode == "fixed":
        if fixed_source is None:
            raise ValueError("fixed_source required for source_mode='fixed'")
        sources = [fixed_source]

    rewards = {p: [] for p in classes}
    for p in classes:
        for k in range(episodes):
            if source_mode == "random":
                src = sources[rng.randrange(len(sources))]
            else:
                src = sources[k % len(sources)]
            eps = epsilon_for_episode(k, cfg)
            total = run_episode(tables, p, src, adjacency, sink_id, reward_fn,
                                eps, rng, cfg.alpha, cfg.gamma, cfg.max_hops)
            rewards[p].append(total)
    return tables, rewards


def greedy_policy(table: PolicyTable, adjacency: dict, sink_id: int) -> dict:
    """state -> argmax action for every non-sink state with neighbors."""
    policy = {}
    for s in sorted(adjacency):
        if s == sink_id or not adjacency[s]:
            continue
        policy[s] = table.argmax(s, adjacency[s])
    return policy
