"""Shared builders for the test suite.

The handcrafted graphs bypass random placement so tests can pin exact
geometry; they get injected by monkeypatching the topology builder that the
engine module imported.
"""

from dataclasses import replace

from wbansim.config import SimConfig
from wbansim.topology import (NetworkGraph, NodeSite, Position,
                              euclidean_distance)


def make_graph(positions, sink_id, comm_range, area_side=100.0):
    """NetworkGraph from explicit id -> (x, y) placements."""
    sites = [NodeSite(i, Position(x, y), is_sink=(i == sink_id))
             for i, (x, y) in sorted(positions.items())]
    graph = NetworkGraph(sites=sites, sink_id=sink_id, comm_range=comm_range,
                         area_side=area_side)
    pos = graph.positions()
    for i in pos:
        row = []
        for j in pos:
            if i != j and euclidean_distance(pos[i], pos[j]) <= comm_range:
                row.append((j, euclidean_distance(pos[i], pos[j])))
        graph.adjacency[i] = sorted(row)
        graph.distance_to_sink[i] = euclidean_distance(pos[i], pos[sink_id])
    return graph


# Source 0, upper relay 1, lower relay 2, sink 3. Both relays sit 58.31 m
# from source and sink; range 59 keeps those four links and excludes the
# 100 m source-sink and 60 m relay-relay pairs, so every route is exactly
# source -> relay -> sink and the relays are perfectly interchangeable.
DIAMOND_POSITIONS = {0: (0.0, 50.0), 1: (50.0, 80.0), 2: (50.0, 20.0),
                     3: (100.0, 50.0)}


def diamond_graph():
    return make_graph(DIAMOND_POSITIONS, sink_id=3, comm_range=59.0)


def diamond_config(**overrides):
    """Config for diamond runs: clean channel, no exploration, so the only
    nondeterminism left is the seeded traffic/contention draws."""
    base = dict(node_count=3, area_side=100.0, comm_range=59.0,
                send_rate=4.0, sim_duration=6.0, initial_energy=1.0,
                epsilon_start=0.0, epsilon_min=0.0,
                collision_kappa=0.0, per_bit_error_prob=0.0,
                cluster_interval=100.0, rng_seed=11)
    base.update(overrides)
    return replace(SimConfig(), **base)


def fast_cfg(**overrides):
    """Small random arena that a full engine run crosses in a second or two."""
    base = dict(node_count=25, area_side=200.0, comm_range=70.0,
                sim_duration=2.0, send_rate=2.0, initial_energy=2.0,
                cluster_interval=1.0, metric_interval=0.5, rng_seed=3)
    base.update(overrides)
    return replace(SimConfig(), **base)
