"""First-order radio energy model and per-node energy accounting.

Transmission cost is l*E_elec + l*eps_amp*d^exp, reception l*E_elec. The ledger
is the single owner of residual energy: every join/leave of energy goes through
debit(), so consumed + residual always equals the initial endowment exactly.
A debit that would overdraw is refused; the node dies and its remaining charge
is written off into the consumed column to keep the closure exact.
"""

from __future__ import annotations


def tx_energy(bits: int, distance: float, cfg) -> float:
    """Energy to transmit `bits` over `distance` meters (Eq. of the radio model)."""
    if bits < 0 or distance < 0:
        raise ValueError("bits and distance must be nonnegative")
    return bits * cfg.e_elec + bits * cfg.eps_amp * distance ** cfg.path_loss_exponent


def rx_energy(bits: int, cfg) -> float:
    """Energy to receive `bits`; the electronics term only."""
    if bits < 0:
        raise ValueError("bits must be nonnegative")
    return bits * cfg.e_elec


class EnergyLedger:
    """Residual/consumed bookkeeping for every node in one run."""

    __slots__ = ("initial", "residual", "consumed", "tx_count", "rx_count",
                 "trace", "trace_enabled")

    def __init__(self, node_ids, initial_energy, trace=False):
        self.initial = float(initial_energy)
        self.residual = {i: float(initial_energy) for i in node_ids}
        self.consumed = {i: 0.0 for i in node_ids}
        self.tx_count = {i: 0 for i in node_ids}
        self.rx_count = {i: 0 for i in node_ids}
        self.trace_enabled = trace
        self.trace = []

    def alive(self, node_id) -> bool:
        return self.residual[node_id] > 0.0

    def debit(self, node_id, amount: float, kind: str, time: float = 0.0) -> bool:
        """Withdraw `amount` joules; returns False (refused) on overdraw.

        kind is 'tx' or 'rx' for counter purposes; anything else counts neither.
        On refusal the node's remaining charge moves to the consumed column and
        the node is dead from this instant on.
        """
        if amount < 0:
            raise ValueError("negative energy debit")
        res = self.residual[node_id]
        if amount > res:
            self.consumed[node_id] += res
            self.residual[node_id] = 0.0
            return False
        self.residual[node_id] = res - amount
        self.consumed[node_id] += amount
        if kind == "tx":
            self.tx_count[node_id] += 1
        elif kind == "rx":
            self.rx_count[node_id] += 1
        if self.trace_enabled:
            self.trace.append((time, node_id, kind, amount))
        return True

    def total_consumed(self) -> float:
        return sum(self.consumed.values())

    def total_residual(self) -> float:
        return sum(self.residual.values())

    def conservation_gap(self) -> float:
        """|sum consumed + sum residual - nodes * initial|; zero up to float error."""
        expected = len(self.residual) * self.initial
        return abs(self.total_consumed() + self.total_residual() - expected)


def total_consumption(trace, t0: float, t1: float) -> float:
    """Sum of traced debits with t0 <= time <= t1 (requires a traced ledger)."""
    return sum(amount for (time, _node, _kind, amount) in trace if t0 <= time <= t1)
