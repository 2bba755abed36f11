"""First-order radio energy arithmetic and the per-round event ledger.

Every joule leaving a node is recorded under one of six event classes, so
initial energy minus residual energy always equals the ledger total. A node
that cannot afford an action spends its remaining energy, dies, and the
action fails; the ledger records only what was actually spent.
"""
from __future__ import annotations

import math

import numpy as np

from .config import NetworkConfig
from .netmodel import CoverageField

EVENT_CLASSES = (
    "route_tx",
    "route_rx",
    "fusion",
    "cb_tx",
    "sync_rx",
    "sync_broadcast",
)
_CLASS_INDEX = {name: k for k, name in enumerate(EVENT_CLASSES)}


def tx_energy(bits: float, distance_m: float, config: NetworkConfig) -> float:
    """Energy to transmit `bits` over `distance_m`: free-space amplification
    below the crossover distance, multipath above it."""
    if bits <= 0:
        raise ValueError("bits must be positive")
    if distance_m < 0:
        raise ValueError("distance must be non-negative")
    elec = bits * config.elec_energy
    if distance_m < config.crossover_distance:
        return elec + bits * config.fs_amp_energy * distance_m ** 2
    return elec + bits * config.mp_amp_energy * distance_m ** 4


def rx_energy(bits: float, config: NetworkConfig) -> float:
    """Energy to receive `bits` (circuitry only)."""
    if bits < 0:
        raise ValueError("bits must be non-negative")
    return bits * config.elec_energy


def fusion_energy(c1_bits: float, c2_bits: float, config: NetworkConfig) -> float:
    """Energy to scan and fuse two packets of the given sizes."""
    if c1_bits < 0 or c2_bits < 0:
        raise ValueError("packet sizes must be non-negative")
    return config.fusion_cost * (c1_bits + c2_bits)


def wire_bits(bits: float) -> int:
    """Fused sizes are real-valued; transmissions round up to whole bits."""
    return math.ceil(bits)


class EnergyLedger:
    """Per-node, per-event-class energy accounting for one simulation.

    `charge` debits a node's residual energy with the floor-at-zero death
    rule and returns whether the action could be fully paid for. Newly dead
    node ids accumulate in `pending_deaths` for the round loop to process
    (SLP notifications, overlap-degree refresh).
    """

    def __init__(self, field: CoverageField):
        self.field = field
        self.totals = np.zeros((len(EVENT_CLASSES), field.n))
        self.round_totals = np.zeros(len(EVENT_CLASSES))
        self.pending_deaths: list[int] = []
        self._round_start = self.totals.copy()

    def start_round(self) -> None:
        self.round_totals[:] = 0.0
        self._round_start[:] = self.totals

    def charge(self, node_id: int, event_class: str, joules: float) -> bool:
        """Debit one node; True iff the node could afford the full amount."""
        if joules < 0:
            raise ValueError("charge must be non-negative")
        if not self.field.alive[node_id]:
            raise ValueError(f"node {node_id} is dead")
        k = _CLASS_INDEX[event_class]
        residual = self.field.residual[node_id]
        spent = joules if joules <= residual else residual
        after = residual - spent
        self.totals[k, node_id] += spent
        self.round_totals[k] += spent
        if after <= 0.0 or spent < joules:
            self.field.residual[node_id] = 0.0
            self.pending_deaths.append(node_id)
            return bool(spent == joules)
        self.field.residual[node_id] = after
        return True

    def charge_many(self, node_ids: np.ndarray, event_class: str, joules: float) -> None:
        """Debit the same amount from many alive nodes at once."""
        if len(node_ids) == 0:
            return
        k = _CLASS_INDEX[event_class]
        residual = self.field.residual[node_ids]
        spent = np.minimum(joules, residual)
        self.totals[k, node_ids] += spent
        self.round_totals[k] += spent.sum()
        after = residual - spent
        dead = (after <= 0.0) | (spent < joules)
        after[dead] = 0.0
        self.field.residual[node_ids] = after
        if dead.any():
            self.pending_deaths.extend(np.asarray(node_ids)[dead].tolist())

    def grand_total(self) -> float:
        return float(self.totals.sum())

    def round_summary(self) -> dict[str, float]:
        return {name: float(self.round_totals[k]) for k, name in enumerate(EVENT_CLASSES)}

    def node_rows(self):
        """Yield (node_id, event_class, joules) for all nonzero entries."""
        for k, name in enumerate(EVENT_CLASSES):
            for i in np.flatnonzero(self.totals[k] > 0):
                yield int(i), name, float(self.totals[k, i])

    def round_rows(self):
        """Per-node charges of the current round (since `start_round`)."""
        delta = self.totals - self._round_start
        for k, name in enumerate(EVENT_CLASSES):
            for i in np.flatnonzero(delta[k] > 0):
                yield int(i), name, float(delta[k, i])

    def write_round_csv(self, fh, round_index: int, header: bool = False) -> None:
        """Append the current round's charges as `round,node_id,event_class,joules`."""
        if header:
            fh.write("round,node_id,event_class,joules\n")
        for node_id, name, joules in self.round_rows():
            fh.write(f"{round_index},{node_id},{name},{joules!r}\n")


def process_deaths(ledger: EnergyLedger) -> list[int]:
    """Finalize queued deaths: mark nodes dead, bill the SLP notification to
    each alive neighbor, refresh their overlap degrees. Notification charges
    can push neighbors over the edge, so the queue drains iteratively.
    Returns all node ids that died."""
    field = ledger.field
    config = field.config
    slp_rx = rx_energy(config.control_packet_bits, config)
    died: list[int] = []
    while ledger.pending_deaths:
        node_id = ledger.pending_deaths.pop()
        if not field.alive[node_id]:
            continue
        notified = field.mark_dead(node_id)
        died.append(node_id)
        for j in notified:
            ledger.charge(j, "route_rx", slp_rx)
    return died
