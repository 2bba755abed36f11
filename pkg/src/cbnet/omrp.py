"""Overlap-aware hierarchical routing: cluster-head election biased by
overlap degree, nearest-head clustering, overlap-sorted TDMA fusion, and
squared-distance relay selection between heads.

One call to `run_round` performs a full aggregation round: every alive
node's packet travels member -> cluster head -> (optional relay head) ->
sink, fused at each receiver, with every transmission, reception, fusion and
control message billed to the energy ledger. The same engine with the
overlap features disabled is the classic random-rotation cluster protocol
used as a baseline.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .config import NetworkConfig
from .energy import EnergyLedger, fusion_energy, process_deaths, rx_energy, tx_energy, wire_bits
from .netmodel import CoverageField, FusedPacket

# directed link states: 0 none, 1 forward unfused, 2 receiver fuses
LINK_NONE, LINK_FORWARD, LINK_FUSE = 0, 1, 2


@dataclass
class TopologyGraph:
    round_index: int
    sink: int
    cluster_heads: list[int]
    clusters: dict[int, list[int]]          # head -> members in fusion order
    relays: dict[int, int]                  # head -> agreed relay head
    edges: list[tuple[int, int, int]] = dc_field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps({
            "round": self.round_index,
            "sink": self.sink,
            "chs": sorted(self.cluster_heads),
            "edges": [
                {"from": a, "to": b, "state": s} for a, b, s in self.edges
            ],
            "relays": [
                {"from": a, "to": b} for a, b in sorted(self.relays.items())
            ],
        })


@dataclass
class RoundOutcome:
    sink_packet_bits: float
    contributing: int                       # nodes whose data reached the sink
    sink_alive: bool
    ch_count: int
    deaths: list[int]
    energy_by_class: dict[str, float]


def epoch_length(config: NetworkConfig) -> int:
    return math.ceil(1.0 / config.ch_ratio)


def link_allowed(config: NetworkConfig, distance: float) -> bool:
    """Data hops may be capped in length; an over-long link is infeasible
    and its packet is lost rather than transmitted."""
    return config.max_link_distance is None or distance <= config.max_link_distance


def ch_threshold(
    field: CoverageField, node_id: int, round_r: int | None = None,
    config: NetworkConfig | None = None, amplify: bool = True,
) -> float:
    """Election probability: zero outside the candidate set; inside it the
    rotation base rate, rising through the epoch and amplified
    exponentially in overlap degree. `round_r` is the position within the
    current rotation epoch and defaults to the field's epoch clock."""
    config = config or field.config
    if not field.in_candidate_set[node_id] or not field.alive[node_id]:
        return 0.0
    epoch = epoch_length(config)
    if round_r is None:
        phase = min(int(field.epoch_round), epoch - 1)
    else:
        phase = round_r % epoch
    p = config.ch_ratio
    base = p / (1.0 - p * phase)
    if amplify:
        base *= config.ch_amplification ** field.rho[node_id]
    return min(1.0, base)


def elect_cluster_heads(
    field: CoverageField, round_r: int, rng: np.random.Generator,
    config: NetworkConfig | None = None, amplify: bool = True,
) -> list[int]:
    """Draw this round's cluster heads.

    Elected nodes leave the candidate set; an epoch ends (set refilled with
    every alive node, phase reset) once the set is too depleted to supply a
    full complement of heads. Ending the epoch on depletion rather than on
    a fixed count keeps pool size and threshold balanced, so the expected
    head count stays near node_count * ch_ratio every single round even
    when overlap amplification drains the pool faster than the nominal
    schedule. If nobody wins the draw, the alive node with the highest
    threshold serves (lowest id on ties).
    """
    config = config or field.config
    n = field.n
    epoch = epoch_length(config)
    alive = field.alive
    pool = alive & field.in_candidate_set
    if pool.sum() < alive.sum() * config.ch_ratio:
        field.in_candidate_set[alive] = True
        field.epoch_round = 0
        pool = alive & field.in_candidate_set
    p = config.ch_ratio
    phase = min(int(field.epoch_round), epoch - 1)
    base = p / (1.0 - p * phase)
    thresholds = np.zeros(n)
    if amplify:
        thresholds[pool] = base * config.ch_amplification ** field.rho[pool]
    else:
        thresholds[pool] = base
    np.minimum(thresholds, 1.0, out=thresholds)
    draws = rng.random(n)
    heads = np.flatnonzero(pool & (draws < thresholds))
    if heads.size == 0:
        alive_ids = field.alive_ids()
        if alive_ids.size == 0:
            return []
        heads = np.array([alive_ids[np.argmax(thresholds[alive_ids])]])
    field.in_candidate_set[heads] = False
    field.epoch_round += 1
    field.rounds_since_ch[field.alive] += 1
    field.rounds_since_ch[heads] = 0
    return heads.tolist()


def form_clusters(
    field: CoverageField, heads: list[int], sink: int, ledger: EnergyLedger,
) -> dict[int, list[int]]:
    """Attach every alive non-head node (except the sink, which keeps its
    data locally) to its nearest head; bills the join messages."""
    config = field.config
    head_arr = np.array(sorted(heads))
    members = [
        i for i in field.alive_ids().tolist()
        if i not in set(heads) and i != sink
    ]
    clusters: dict[int, list[int]] = {h: [] for h in head_arr.tolist()}
    if not members:
        return clusters
    sub = field.distances[np.ix_(members, head_arr)]
    nearest = head_arr[np.argmin(sub, axis=1)]  # ties: lowest head id wins
    ctrl = config.control_packet_bits
    joined: list[tuple[int, int]] = []
    for m, h in zip(members, nearest.tolist()):
        ok = ledger.charge(m, "route_tx", tx_energy(ctrl, field.distances[m, h], config))
        if ok:
            joined.append((m, h))
    process_deaths(ledger)
    join_rx = rx_energy(ctrl, config)
    for h in head_arr.tolist():
        count = sum(1 for _, hh in joined if hh == h)
        if count and field.alive[h]:
            ledger.charge(h, "route_rx", count * join_rx)
    process_deaths(ledger)
    for m, h in joined:
        clusters[h].append(m)
    return clusters


def tdma_fusion_order(field: CoverageField, members: list[int]) -> list[int]:
    """Slot order within a cluster: highest overlap degree first so the most
    redundant packets fuse while the accumulated packet is still small."""
    return sorted(members, key=lambda i: (-field.rho[i], i))


def relay_decision(
    field: CoverageField, ch: int, heads: list[int], sink: int,
    config: NetworkConfig | None = None,
) -> int:
    """Next hop for a head's bundle: the head maximizing the squared-distance
    saving, if that saving clears the circuitry break-even; otherwise the
    sink directly."""
    config = config or field.config
    d = field.distances
    d_is2 = d[ch, sink] ** 2
    best_beta = -math.inf
    best = sink
    for j in sorted(heads):
        if j == ch or j == sink or not field.alive[j]:
            continue
        beta = d_is2 - (d[ch, j] ** 2 + d[j, sink] ** 2)
        if beta > best_beta:
            best_beta = beta
            best = j
    if best_beta > 2.0 * config.elec_energy / config.fs_amp_energy:
        return best
    return sink


def _broadcast(
    field: CoverageField, ledger: EnergyLedger, sender: int,
    recipients: np.ndarray, bits: float, tx_class: str, rx_class: str,
) -> None:
    """One transmission at the farthest recipient's distance; every recipient
    pays reception."""
    if recipients.size == 0 or not field.alive[sender]:
        return
    config = field.config
    far = float(field.distances[sender, recipients].max())
    ledger.charge(sender, tx_class, tx_energy(bits, far, config))
    process_deaths(ledger)
    recipients = recipients[field.alive[recipients]]
    if recipients.size:
        ledger.charge_many(recipients, rx_class, rx_energy(bits, config))
    process_deaths(ledger)


def run_round(
    field: CoverageField,
    sink: int,
    config: NetworkConfig,
    rng: np.random.Generator,
    ledger: EnergyLedger,
    round_r: int = 0,
    *,
    amplify: bool = True,
    overlap_order: bool = True,
    use_relay: bool = True,
) -> tuple[TopologyGraph, RoundOutcome]:
    """Execute one aggregation round and return its topology and outcome.

    The overlap switches select the protocol variant: all three on is the
    overlap-aware protocol; election without amplification, id-order slots
    and no relaying is the classic baseline.
    """
    if not field.alive[sink]:
        raise ValueError("sink is dead; reselect before running a round")
    ledger.start_round()
    alive_before = field.alive.copy()
    ctrl = config.control_packet_bits
    data_bits = wire_bits(config.data_packet_bits)

    heads = elect_cluster_heads(field, round_r, rng, config, amplify=amplify)
    # announce headship network-wide (position knowledge for joins and relays)
    for h in sorted(heads):
        others = field.alive_ids()
        others = others[others != h]
        _broadcast(field, ledger, h, others, ctrl, "route_tx", "route_rx")
    heads = [h for h in heads if field.alive[h]]
    if not field.alive[sink]:
        return _aborted(field, sink, ledger, round_r, heads, alive_before)
    if not heads:
        heads = [sink]

    clusters = form_clusters(field, heads, sink, ledger)
    if not field.alive[sink]:
        return _aborted(field, sink, ledger, round_r, heads, alive_before)

    ordered: dict[int, list[int]] = {}
    for h, members in clusters.items():
        members = [m for m in members if field.alive[m]]
        if overlap_order:
            ordered[h] = tdma_fusion_order(field, members)
        else:
            ordered[h] = sorted(members)
        if ordered[h] and field.alive[h]:
            _broadcast(field, ledger, h, np.array(ordered[h]), ctrl,
                       "route_tx", "route_rx")
            ordered[h] = [m for m in ordered[h] if field.alive[m]]
    if not field.alive[sink]:
        return _aborted(field, sink, ledger, round_r, heads, alive_before)

    relays: dict[int, int] = {}
    if use_relay:
        for h in sorted(heads):
            if h == sink or not field.alive[h]:
                continue
            target = relay_decision(field, h, heads, sink, config)
            if target != sink and field.alive[target]:
                ok = ledger.charge(h, "route_tx",
                                   tx_energy(ctrl, field.distances[h, target], config))
                process_deaths(ledger)
                if ok and field.alive[target]:
                    ledger.charge(target, "route_rx", rx_energy(ctrl, config))
                    process_deaths(ledger)
                    relays[h] = target

    topo = TopologyGraph(round_r, sink, list(heads), ordered, relays)
    sink_packet = FusedPacket.single(field, sink)

    # intra-cluster slots: members stream to their head, head fuses on receipt
    bundles: dict[int, FusedPacket] = {}
    for h in sorted(ordered):
        if not field.alive[h]:
            continue
        bundle = sink_packet if h == sink else FusedPacket.single(field, h)
        for m in ordered[h]:
            if not field.alive[m]:
                continue
            if not link_allowed(config, field.distances[m, h]):
                continue
            ok = ledger.charge(m, "route_tx",
                               tx_energy(data_bits, field.distances[m, h], config))
            process_deaths(ledger)
            if not ok or not field.alive[h]:
                continue
            if not ledger.charge(h, "route_rx", rx_energy(data_bits, config)):
                process_deaths(ledger)
                continue
            process_deaths(ledger)
            if not field.alive[h]:
                continue
            if not ledger.charge(h, "fusion",
                                 fusion_energy(bundle.bits, config.data_packet_bits, config)):
                process_deaths(ledger)
                continue
            process_deaths(ledger)
            bundle.absorb_node(m)
            topo.edges.append((m, h, LINK_FUSE))
        if h != sink:
            bundles[h] = bundle

    if not field.alive[sink]:
        return _aborted(field, sink, ledger, round_r, heads, alive_before, topo)

    # inter-cluster hops, farthest head first; a head that already relayed
    # for someone forwards straight to the sink (single relay hop per packet)
    got_relay: set[int] = set()
    transmitted: set[int] = set()
    order = sorted(bundles, key=lambda h: (-field.distances[h, sink], h))
    for h in order:
        transmitted.add(h)
        if not field.alive[h]:
            continue
        bundle = bundles[h]
        target = relays.get(h, sink)
        if (h in got_relay or target in transmitted or target == h
                or target not in bundles or not field.alive[target]
                or not link_allowed(config, field.distances[h, target])):
            target = sink
        if not field.alive[target]:
            continue
        if not link_allowed(config, field.distances[h, target]):
            continue
        bits = wire_bits(bundle.bits)
        ok = ledger.charge(h, "route_tx",
                           tx_energy(bits, field.distances[h, target], config))
        process_deaths(ledger)
        if not ok or not field.alive[target]:
            continue
        if not ledger.charge(target, "route_rx", rx_energy(bits, config)):
            process_deaths(ledger)
            continue
        process_deaths(ledger)
        if not field.alive[target]:
            continue
        acc = sink_packet if target == sink else bundles[target]
        if not ledger.charge(target, "fusion",
                             fusion_energy(acc.bits, bundle.bits, config)):
            process_deaths(ledger)
            continue
        process_deaths(ledger)
        acc.absorb(bundle)
        topo.edges.append((h, target, LINK_FUSE))
        if target != sink:
            got_relay.add(target)

    sink_alive = bool(field.alive[sink])
    outcome = RoundOutcome(
        sink_packet_bits=sink_packet.bits if sink_alive else 0.0,
        contributing=len(sink_packet.support) if sink_alive else 0,
        sink_alive=sink_alive,
        ch_count=len(heads),
        deaths=np.flatnonzero(alive_before & ~field.alive).tolist(),
        energy_by_class=ledger.round_summary(),
    )
    return topo, outcome


def _aborted(field, sink, ledger, round_r, heads, alive_before, topo=None):
    """Sink died of control traffic mid-round: the round yields no data."""
    topo = topo or TopologyGraph(round_r, sink, list(heads), {}, {})
    outcome = RoundOutcome(
        sink_packet_bits=0.0,
        contributing=0,
        sink_alive=False,
        ch_count=len(heads),
        deaths=np.flatnonzero(alive_before & ~field.alive).tolist(),
        energy_by_class=ledger.round_summary(),
    )
    return topo, outcome
