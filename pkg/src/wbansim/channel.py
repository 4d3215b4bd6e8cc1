"""Stochastic MAC and channel abstraction.

Models the load-dependent behavior of a contention MAC without simulating
frames on air: per-transmission contention delay is exponential with a mean
that scales linearly in local load, collisions lose the frame with
probability proportional to the same load (capped), and a per-bit corruption
process damages frames that do get through, with an error rate that rises as
more neighbors key the medium. All draws come from the generator handed in,
so a run replays exactly.
"""

from __future__ import annotations

from random import Random


def airtime(n_bytes: int, bit_rate: float) -> float:
    """Serialization time in seconds for a frame of n_bytes."""
    if bit_rate <= 0:
        raise ValueError("bit_rate must be positive")
    return n_bytes * 8.0 / bit_rate


class ChannelModel:
    """Per-transmission draws for contention, collision, and corruption."""

    __slots__ = ("contention_base", "collision_kappa", "collision_cap",
                 "per_bit_error_prob", "interference_factor",
                 "ack_loss_prob", "rng")

    def __init__(self, cfg, rng: Random):
        self.contention_base = cfg.contention_base
        self.collision_kappa = cfg.collision_kappa
        self.collision_cap = cfg.collision_cap
        self.per_bit_error_prob = cfg.per_bit_error_prob
        self.interference_factor = cfg.interference_factor
        self.ack_loss_prob = cfg.ack_loss_prob
        self.rng = rng

    def contention_delay(self, load: int) -> float:
        """Exponential wait with mean contention_base * (1 + load)."""
        mean = self.contention_base * (1.0 + load)
        if mean <= 0.0:
            return 0.0
        return self.rng.expovariate(1.0 / mean)

    def collision_probability(self, load: int) -> float:
        return min(self.collision_cap, self.collision_kappa * load)

    def collided(self, load: int) -> bool:
        p = self.collision_probability(load)
        return p > 0.0 and self.rng.random() < p

    def corruption_probability(self, n_bits: int, load: int = 0) -> float:
        """Frame damage probability; interference from concurrently busy
        neighbors multiplies the quiet-medium bit error rate."""
        p_bit = self.per_bit_error_prob * (1.0 + self.interference_factor * load)
        p_bit = min(p_bit, 1.0)
        return 1.0 - (1.0 - p_bit) ** n_bits

    def corrupted(self, n_bits: int, load: int = 0) -> bool:
        p = self.corruption_probability(n_bits, load)
        return p > 0.0 and self.rng.random() < p

    def pick_flip_bit(self, n_bits: int) -> int:
        """Index of the bit damaged in a corrupted frame."""
        return self.rng.randrange(n_bits)

    def ack_lost(self) -> bool:
        return self.ack_loss_prob > 0.0 and self.rng.random() < self.ack_loss_prob
