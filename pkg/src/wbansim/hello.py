"""Periodic hello messages and per-node neighbor tables.

Each node broadcasts a fixed-size hello on a fixed interval carrying position,
residual energy, free buffer space, and its current class memberships.
Receivers keep one entry per fresh sender; entries silently expire T_exp after
the last accepted hello. The entry also accumulates the sender-side view of the
link: an exponentially-weighted delay estimate and sent/lost counters.
"""

from __future__ import annotations

from dataclasses import dataclass

from .topology import Position


@dataclass
class HelloMessage:
    hello_id: int
    hello_period: float
    sequence_number: int
    node_id: int
    location: Position
    residual_energy: float
    free_buffer: int
    memberships: tuple


@dataclass
class NeighborEntry:
    neighbor_id: int
    position: Position
    residual_energy: float
    free_buffer: int
    memberships: tuple
    last_update: float
    expiry: float
    last_seq: int
    # sender-side link observations toward this neighbor
    delay_estimate: float = 0.0
    delay_samples: int = 0
    sent: int = 0
    lost: int = 0


class NeighborTable:
    """Single-writer neighbor map for one node."""

    __slots__ = ("owner_id", "expiry", "delay_smoothing", "entries")

    def __init__(self, owner_id: int, expiry: float, delay_smoothing: float):
        self.owner_id = owner_id
        self.expiry = expiry
        self.delay_smoothing = delay_smoothing
        self.entries: dict = {}

    def process_hello(self, msg: HelloMessage, t: float) -> bool:
        """Insert or refresh an entry; stale/duplicate sequence numbers are
        ignored. Returns True when the table changed."""
        if msg.node_id == self.owner_id:
            return False
        entry = self.entries.get(msg.node_id)
        if entry is None:
            self.entries[msg.node_id] = NeighborEntry(
                neighbor_id=msg.node_id,
                position=msg.location,
                residual_energy=msg.residual_energy,
                free_buffer=msg.free_buffer,
                memberships=msg.memberships,
                last_update=t,
                expiry=self.expiry,
                last_seq=msg.sequence_number,
            )
            return True
        if msg.sequence_number <= entry.last_seq:
            return False
        entry.position = msg.location
        entry.residual_energy = msg.residual_energy
        entry.free_buffer = msg.free_buffer
        entry.memberships = msg.memberships
        entry.last_update = t
        entry.last_seq = msg.sequence_number
        return True

    def purge_expired(self, t: float) -> int:
        """Drop entries not refreshed within T_exp; returns how many went."""
        stale = [nid for nid, e in self.entries.items() if t - e.last_update > self.expiry]
        for nid in stale:
            del self.entries[nid]
        return len(stale)

    def record_delay(self, neighbor_id: int, sample: float):
        """Fold one measured link delay into the EW estimate."""
        entry = self.entries.get(neighbor_id)
        if entry is None:
            return
        if entry.delay_samples == 0:
            entry.delay_estimate = sample
        else:
            s = self.delay_smoothing
            entry.delay_estimate = s * sample + (1.0 - s) * entry.delay_estimate
        entry.delay_samples += 1

    def record_attempt(self, neighbor_id: int, delivered: bool):
        entry = self.entries.get(neighbor_id)
        if entry is None:
            return
        entry.sent += 1
        if not delivered:
            entry.lost += 1

    def get(self, neighbor_id: int):
        return self.entries.get(neighbor_id)

    def ids(self):
        return list(self.entries.keys())

    def __len__(self):
        return len(self.entries)


@dataclass
class HelloState:
    """Per-node hello transmit state."""
    next_seq: int = 1


def build_hello(node_id: int, state: HelloState, position: Position, period: float,
                residual_energy: float, free_buffer: int, memberships: tuple,
                t: float) -> HelloMessage:
    """Assemble the next hello for a node; bumps the sequence counter."""
    if residual_energy <= 0.0:
        raise ValueError("dead node cannot send hello")
    msg = HelloMessage(
        hello_id=(node_id << 20) | state.next_seq,
        hello_period=period,
        sequence_number=state.next_seq,
        node_id=node_id,
        location=position,
        residual_energy=residual_energy,
        free_buffer=free_buffer,
        memberships=memberships,
    )
    state.next_seq += 1
    return msg
