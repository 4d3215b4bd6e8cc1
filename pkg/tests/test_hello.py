"""Neighbor discovery: hello assembly, table freshness, link observations."""

import pytest

from wbansim.hello import HelloState, NeighborTable, build_hello
from wbansim.topology import Position


def hello_at(node_id, state, t, seq_position=Position(1.0, 2.0), energy=0.8,
             free=10):
    return build_hello(node_id, state, seq_position, 1.0, energy, free,
                       (0.2, 0.3, 0.5), t)


def test_build_hello_sequence_and_fields():
    state = HelloState()
    first = hello_at(4, state, 0.0)
    second = hello_at(4, state, 1.0)
    assert first.sequence_number == 1
    assert second.sequence_number == 2
    assert first.hello_id != second.hello_id
    assert first.node_id == 4
    assert first.memberships == (0.2, 0.3, 0.5)


def test_dead_node_cannot_hello():
    with pytest.raises(ValueError):
        build_hello(1, HelloState(), Position(0, 0), 1.0, 0.0, 5, (1, 1, 1), 0.0)


def test_insert_refresh_and_stale_rejection():
    table = NeighborTable(owner_id=0, expiry=2.5, delay_smoothing=0.3)
    state = HelloState()
    msg1 = hello_at(7, state, 0.0, energy=0.9)
    msg2 = hello_at(7, state, 1.0, energy=0.7)

    assert table.process_hello(msg1, 0.0)
    assert len(table) == 1
    assert table.get(7).residual_energy == 0.9

    assert table.process_hello(msg2, 1.0)
    entry = table.get(7)
    assert entry.residual_energy == 0.7
    assert entry.last_update == 1.0

    # replayed old sequence number changes nothing
    assert not table.process_hello(msg1, 1.5)
    assert table.get(7).residual_energy == 0.7


def test_own_hello_ignored():
    table = NeighborTable(owner_id=3, expiry=2.5, delay_smoothing=0.3)
    assert not table.process_hello(hello_at(3, HelloState(), 0.0), 0.0)
    assert len(table) == 0


def test_purge_expired():
    table = NeighborTable(owner_id=0, expiry=2.0, delay_smoothing=0.3)
    table.process_hello(hello_at(1, HelloState(), 0.0), 0.0)
    table.process_hello(hello_at(2, HelloState(), 1.5), 1.5)
    assert table.purge_expired(1.9) == 0
    assert table.purge_expired(2.5) == 1  # entry 1 went stale
    assert table.ids() == [2]


def test_delay_estimate_smoothing():
    table = NeighborTable(owner_id=0, expiry=10.0, delay_smoothing=0.25)
    table.process_hello(hello_at(5, HelloState(), 0.0), 0.0)
    table.record_delay(5, 0.040)
    assert table.get(5).delay_estimate == pytest.approx(0.040)  # first sample
    table.record_delay(5, 0.080)
    assert table.get(5).delay_estimate == pytest.approx(
        0.25 * 0.080 + 0.75 * 0.040)
    assert table.get(5).delay_samples == 2
    table.record_delay(99, 1.0)  # unknown neighbor: silently ignored


def test_attempt_counters():
    table = NeighborTable(owner_id=0, expiry=10.0, delay_smoothing=0.3)
    table.process_hello(hello_at(5, HelloState(), 0.0), 0.0)
    table.record_attempt(5, True)
    table.record_attempt(5, False)
    table.record_attempt(5, True)
    entry = table.get(5)
    assert entry.sent == 3
    assert entry.lost == 1
