"""Adaptive multi-queue buffer: strict-priority service over three class queues
whose capacities are periodically rebalanced toward demand.

Capacities are tracked as reals so the rebalance normalization keeps their sum
exactly at the total C; integer views use largest-remainder rounding. Arrival
and departure rates are exponentially weighted window counts, refreshed on the
periodic tick only (event-triggered rebalances reuse the current estimates).
"""

from __future__ import annotations

import math
from collections import deque

from .packets import PacketClass

ACCEPTED = "accepted"
DROPPED_OVERFLOW = "dropped_overflow"


def buffer_occupancy_step(occupancy: int, arrivals: int, departures: int, capacity: float) -> int:
    """Occupancy recurrence over one window: B + V_in - V_out clamped to [0, C_p]."""
    return max(0, min(int(math.floor(capacity)), occupancy + arrivals - departures))


def largest_remainder_round(values, total: int):
    """Integers summing exactly to `total`, proportional to `values`.

    Floors first, then hands the leftover units to the largest fractional
    parts (ties to the lowest index).
    """
    floors = [int(math.floor(v)) for v in values]
    leftover = total - sum(floors)
    order = sorted(range(len(values)), key=lambda i: (-(values[i] - floors[i]), i))
    for i in order[:leftover]:
        floors[i] += 1
    return floors


class MultiQueueBuffer:
    """Three FIFO queues (emergency, error-sensitive, normal) sharing capacity C."""

    __slots__ = ("total", "cap_min", "cap_max", "caps", "queues", "occupancy",
                 "lam", "mu", "_arrivals_win", "_departures_win",
                 "ell1", "ell2", "rate_smoothing", "drop_counts")

    def __init__(self, cfg):
        self.total = int(cfg.buffer_capacity)
        self.cap_min = math.ceil(cfg.cap_min_frac * self.total)
        self.cap_max = math.floor(cfg.cap_max_frac * self.total)
        self.caps = [self.total / 3.0] * 3
        self.queues = (deque(), deque(), deque())
        self.occupancy = [0, 0, 0]
        self.lam = [0.0, 0.0, 0.0]
        self.mu = [0.0, 0.0, 0.0]
        self._arrivals_win = [0, 0, 0]
        self._departures_win = [0, 0, 0]
        self.ell1 = cfg.ell1
        self.ell2 = cfg.ell2
        self.rate_smoothing = cfg.rate_smoothing
        self.drop_counts = [0, 0, 0]

    # -- occupancy ------------------------------------------------------------

    def free_space(self) -> int:
        """F(t) = C - sum of occupancies."""
        return self.total - sum(self.occupancy)

    def is_full(self, pclass: PacketClass) -> bool:
        # A whole packet has to fit: fractional headroom below 1 counts as full,
        # keeping B_p <= C_p even while capacities are reals. The aggregate
        # check matters after a rebalance shrinks a cap below its occupancy:
        # the overfull class drains only through service, and without the
        # shared bound the other classes could stack the buffer past C.
        p = pclass.value - 1
        return self.occupancy[p] + 1 > self.caps[p] or self.free_space() < 1

    def backlog(self) -> int:
        return sum(self.occupancy)

    # -- queue operations -----------------------------------------------------

    def enqueue(self, packet, pclass: PacketClass) -> str:
        """Admit into the class queue; full queue triggers one rebalance retry.

        Arrival counters record offered load, dropped packets included.
        """
        p = pclass.value - 1
        self._arrivals_win[p] += 1
        if self.is_full(pclass):
            # Queue-full trigger: try to grow this queue out of free space now.
            self.rebalance()
            if self.is_full(pclass):
                self.drop_counts[p] += 1
                return DROPPED_OVERFLOW
        self.queues[p].append(packet)
        self.occupancy[p] += 1
        return ACCEPTED

    def dequeue_next(self):
        """Head of the highest-priority non-empty queue (FIFO inside a class)."""
        for p in range(3):
            if self.queues[p]:
                self.occupancy[p] -= 1
                self._departures_win[p] += 1
                return self.queues[p].popleft()
        return None

    # -- capacity adaptation --------------------------------------------------

    def refresh_rates(self, dt: float):
        """Fold the window's event counts into the EW rate estimators."""
        if dt <= 0:
            return
        s = self.rate_smoothing
        for p in range(3):
            self.lam[p] = s * (self._arrivals_win[p] / dt) + (1.0 - s) * self.lam[p]
            self.mu[p] = s * (self._departures_win[p] / dt) + (1.0 - s) * self.mu[p]
            self._arrivals_win[p] = 0
            self._departures_win[p] = 0

    def rebalance(self):
        """Redistribute free space toward demand, normalize to C, enforce bounds.

        Demand shares mix occupancy pressure (ell1) and arrival rates (ell2).
        When neither signal exists the capacities stay untouched.
        """
        ratios = [self.occupancy[p] / self.caps[p] for p in range(3)]
        ratio_sum = sum(ratios)
        rate_sum = sum(self.lam)
        if ratio_sum == 0.0 and rate_sum == 0.0:
            return
        free = float(self.free_space())
        temp = []
        for p in range(3):
            occ_share = ratios[p] / ratio_sum if ratio_sum > 0.0 else 0.0
            rate_share = self.lam[p] / rate_sum if rate_sum > 0.0 else 0.0
            temp.append(self.caps[p] + free * (self.ell1 * occ_share + self.ell2 * rate_share))
        scale = self.total / sum(temp)
        self.caps = self._clamp_preserving_sum([t * scale for t in temp])

    def _clamp_preserving_sum(self, caps):
        """Pin bound violators and rescale the rest so the sum stays at C.

        Always feasible: 3*cap_min <= C <= 3*cap_max is checked at config time.
        """
        pinned = [None, None, None]
        for _ in range(3):
            moved = False
            for p in range(3):
                if pinned[p] is None and caps[p] < self.cap_min:
                    pinned[p] = float(self.cap_min)
                    moved = True
                elif pinned[p] is None and caps[p] > self.cap_max:
                    pinned[p] = float(self.cap_max)
                    moved = True
            if not moved:
                break
            budget = self.total - sum(v for v in pinned if v is not None)
            loose = [p for p in range(3) if pinned[p] is None]
            if not loose:
                break
            mass = sum(caps[p] for p in loose)
            for p in loose:
                caps[p] = caps[p] / mass * budget if mass > 0 else budget / len(loose)
        return [pinned[p] if pinned[p] is not None else caps[p] for p in range(3)]

    def reported_capacities(self):
        """Integer packet view of the real capacities, summing exactly to C."""
        return largest_remainder_round(self.caps, self.total)
