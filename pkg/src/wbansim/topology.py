"""Network graph: node placement, link predicate, and static geometry.

Positions never change after placement (users are uniformly and immovably
distributed), so adjacency, pairwise distances, and distance-to-sink are
computed once and reused by the routing and channel code.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field


@dataclass(frozen=True)
class Position:
    x: float
    y: float


def euclidean_distance(a: Position, b: Position) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


@dataclass
class NodeSite:
    """Static placement record for one node (dynamic state lives in the engine)."""
    id: int
    position: Position
    is_sink: bool = False


@dataclass
class NetworkGraph:
    sites: list
    sink_id: int
    comm_range: float
    area_side: float
    # id -> list of (neighbor id, distance), sorted by id
    adjacency: dict = field(default_factory=dict)
    distance_to_sink: dict = field(default_factory=dict)

    def positions(self):
        return {s.id: s.position for s in self.sites}

    def node_ids(self):
        return [s.id for s in self.sites]

    def link_exists(self, i: int, j: int) -> bool:
        """True iff i != j and the pair sits within communication range."""
        if i == j:
            return False
        pos = {s.id: s.position for s in self.sites}
        if i not in pos or j not in pos:
            raise KeyError("unknown node id %r" % ([k for k in (i, j) if k not in pos][0]))
        return euclidean_distance(pos[i], pos[j]) <= self.comm_range

    def is_local_minimum(self, i: int, alive) -> bool:
        """Geographic void test: no alive neighbor strictly closer to the sink.

        alive: callable id -> bool for the current liveness state.
        """
        if i == self.sink_id:
            return False
        own = self.distance_to_sink[i]
        for j, _d in self.adjacency[i]:
            if alive(j) and self.distance_to_sink[j] < own:
                return False
        return True


def build_topology(config) -> NetworkGraph:
    """Place node_count users uniformly at random (seeded) plus one sink at the
    area center, then precompute adjacency under the d <= R link rule.

    User ids run 0..node_count-1; the sink takes id node_count.
    """
    if config.node_count < 2:
        raise ValueError("node_count must be >= 2")
    if config.comm_range <= 0:
        raise ValueError("comm_range must be > 0")

    rng = random.Random(config.rng_seed)
    side = config.area_side
    sites = [NodeSite(i, Position(rng.uniform(0.0, side), rng.uniform(0.0, side)))
             for i in range(config.node_count)]
    sink = NodeSite(config.node_count, Position(side / 2.0, side / 2.0), is_sink=True)
    sites.append(sink)

    graph = NetworkGraph(sites=sites, sink_id=sink.id,
                         comm_range=config.comm_range, area_side=side)
    pos = graph.positions()
    ids = graph.node_ids()
    for i in ids:
        row = []
        for j in ids:
            if i == j:
                continue
            d = euclidean_distance(pos[i], pos[j])
            if d <= config.comm_range:
                row.append((j, d))
        graph.adjacency[i] = row
        graph.distance_to_sink[i] = euclidean_distance(pos[i], pos[sink.id])
    return graph
