"""Contention MAC abstraction: closed-form probabilities and seeded replay."""

import math
from dataclasses import replace
from random import Random

import pytest

from wbansim.channel import ChannelModel, airtime
from wbansim.config import SimConfig


def make_channel(seed=1, **over):
    cfg = replace(SimConfig(), **over)
    return ChannelModel(cfg, Random(seed))


def test_airtime():
    assert airtime(512, 512_000.0) == pytest.approx(512 * 8 / 512_000.0)
    assert airtime(0, 1000.0) == 0.0
    with pytest.raises(ValueError):
        airtime(10, 0.0)


def test_collision_probability_scales_and_caps():
    ch = make_channel(collision_kappa=0.1, collision_cap=0.6)
    assert ch.collision_probability(0) == 0.0
    assert ch.collision_probability(3) == pytest.approx(0.3)
    assert ch.collision_probability(50) == 0.6
    quiet = make_channel(collision_kappa=0.0)
    assert not any(quiet.collided(5) for _ in range(100))


def test_corruption_probability_closed_form():
    ch = make_channel(per_bit_error_prob=1e-4, interference_factor=0.5)
    n = 4200
    assert ch.corruption_probability(n, 0) == pytest.approx(
        1.0 - (1.0 - 1e-4) ** n)
    # two busy neighbors double the effective bit error rate at factor 0.5
    assert ch.corruption_probability(n, 2) == pytest.approx(
        1.0 - (1.0 - 2e-4) ** n)
    clean = make_channel(per_bit_error_prob=0.0)
    assert clean.corruption_probability(n, 9) == 0.0
    assert not clean.corrupted(n, 9)
    # saturation clamp
    hot = make_channel(per_bit_error_prob=0.5, interference_factor=10.0)
    assert hot.corruption_probability(100, 5) == 1.0


def test_contention_delay_mean_tracks_load():
    ch = make_channel(seed=4, contention_base=0.002)
    n = 30_000
    for load in (0, 4):
        mean = sum(ch.contention_delay(load) for _ in range(n)) / n
        assert mean == pytest.approx(0.002 * (1 + load), rel=0.05)
    assert make_channel(contention_base=0.0).contention_delay(3) == 0.0


def test_pick_flip_bit_in_range():
    ch = make_channel(seed=2)
    bits = [ch.pick_flip_bit(64) for _ in range(500)]
    assert all(0 <= b < 64 for b in bits)
    assert len(set(bits)) > 30  # actually spreads over the frame


def test_ack_loss():
    assert not make_channel(ack_loss_prob=0.0).ack_lost()
    lossy = make_channel(seed=3, ack_loss_prob=1.0)
    assert lossy.ack_lost()


def test_same_seed_same_draw_sequence():
    a = make_channel(seed=17, per_bit_error_prob=1e-3, collision_kappa=0.02)
    b = make_channel(seed=17, per_bit_error_prob=1e-3, collision_kappa=0.02)
    seq_a = [(a.contention_delay(2), a.collided(3), a.corrupted(4000, 1))
             for _ in range(200)]
    seq_b = [(b.contention_delay(2), b.collided(3), b.corrupted(4000, 1))
             for _ in range(200)]
    assert seq_a == seq_b
