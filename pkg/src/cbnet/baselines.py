"""Reference routing protocols sharing the simulator's physics.

The random-rotation cluster baseline is the round engine with every overlap
feature switched off: flat election threshold, id-order slots, heads
transmitting straight to the sink. The chain baseline strings all alive
nodes on a greedy nearest-neighbour chain from the node farthest from the
sink and fuses hop by hop toward it.
"""
from __future__ import annotations

import numpy as np

from .config import NetworkConfig
from .energy import EnergyLedger, fusion_energy, process_deaths, rx_energy, tx_energy, wire_bits
from .netmodel import CoverageField, FusedPacket
from .omrp import LINK_FUSE, RoundOutcome, TopologyGraph, link_allowed, run_round


def leach_round(
    field: CoverageField,
    sink: int,
    config: NetworkConfig,
    rng: np.random.Generator,
    ledger: EnergyLedger,
    round_r: int = 0,
) -> tuple[TopologyGraph, RoundOutcome]:
    return run_round(
        field, sink, config, rng, ledger, round_r,
        amplify=False, overlap_order=False, use_relay=False,
    )


def build_chain(field: CoverageField, sink: int) -> list[int]:
    """Greedy nearest-neighbour chain over the alive nodes, starting from the
    one farthest from the sink."""
    alive = field.alive_ids()
    d = field.distances
    start = int(alive[np.argmax(d[alive, sink])])
    chain = [start]
    remaining = set(alive.tolist())
    remaining.discard(start)
    pool = np.array(sorted(remaining))
    current = start
    while pool.size:
        nxt = int(pool[np.argmin(d[current, pool])])
        chain.append(nxt)
        pool = pool[pool != nxt]
        current = nxt
    return chain


def pegasis_round(
    field: CoverageField,
    sink: int,
    config: NetworkConfig,
    ledger: EnergyLedger,
    round_r: int = 0,
) -> tuple[TopologyGraph, RoundOutcome]:
    """Chain aggregation round: both chain ends stream toward the sink, each
    node fusing its own packet into the passing bundle. A death mid-flow
    drops the accumulated bundle; the flow restarts from the next node."""
    if not field.alive[sink]:
        raise ValueError("sink is dead; reselect before running a round")
    ledger.start_round()
    alive_before = field.alive.copy()
    chain = build_chain(field, sink)
    sink_at = chain.index(sink)

    topo = TopologyGraph(round_r, sink, [], {}, {})
    sink_packet = FusedPacket.single(field, sink)

    def flow(sequence: list[int]) -> None:
        carry: FusedPacket | None = None
        for v, nxt in zip(sequence, sequence[1:]):
            if not field.alive[v]:
                carry = None
                continue
            bundle = carry if carry is not None else FusedPacket.single(field, v)
            carry = None
            if not link_allowed(config, field.distances[v, nxt]):
                continue
            bits = wire_bits(bundle.bits)
            ok = ledger.charge(v, "route_tx",
                               tx_energy(bits, field.distances[v, nxt], config))
            process_deaths(ledger)
            if not ok or not field.alive[nxt]:
                continue
            if not ledger.charge(nxt, "route_rx", rx_energy(bits, config)):
                process_deaths(ledger)
                continue
            process_deaths(ledger)
            if not field.alive[nxt]:
                continue
            acc = sink_packet if nxt == sink else FusedPacket.single(field, nxt)
            if not ledger.charge(nxt, "fusion",
                                 fusion_energy(acc.bits, bundle.bits, config)):
                process_deaths(ledger)
                continue
            process_deaths(ledger)
            acc.absorb(bundle)
            topo.edges.append((v, nxt, LINK_FUSE))
            if nxt != sink:
                carry = acc

    flow(chain[: sink_at + 1])
    flow(chain[sink_at:][::-1])

    sink_alive = bool(field.alive[sink])
    outcome = RoundOutcome(
        sink_packet_bits=sink_packet.bits if sink_alive else 0.0,
        contributing=len(sink_packet.support) if sink_alive else 0,
        sink_alive=sink_alive,
        ch_count=0,
        deaths=np.flatnonzero(alive_before & ~field.alive).tolist(),
        energy_by_class=ledger.round_summary(),
    )
    return topo, outcome
