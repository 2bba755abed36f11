"""Mission-round orchestration over the whole network lifetime.

Each round: the base station names a sink; the routing protocol aggregates
and fuses all sensed data at that sink; a beamforming group is selected,
synchronized (the sink broadcasts the fused packet plus its strategy), and
the group uplinks the packet. The trace of per-round records is the raw
material for all lifetime and throughput metrics.

Routing-only mode skips the beamforming steps and counts the sink packet as
delivered, matching how routing protocols are compared with the uplink
treated as free and perfect.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .beamforming import CbSelection, LinkBudget, cb_energy, received_power, sample_phase_errors
from .baselines import leach_round, pegasis_round
from .config import NetworkConfig
from .energy import EVENT_CLASSES, EnergyLedger, process_deaths, rx_energy, tx_energy, wire_bits
from .netmodel import CoverageField, generate_field
from .omrp import run_round

ROUTINGS = ("omrp", "leach", "pegasis")
CB_POLICIES = ("none", "random", "energy_greedy", "distance_greedy", "external")
DEAD_DISTANCE = -1.0


def select_sink(
    field: CoverageField,
    policy: str = "max_energy",
    rng: np.random.Generator | None = None,
    fixed_id: int = 0,
) -> int | None:
    """Pick this round's sink among alive nodes; None ends the episode."""
    alive = field.alive_ids()
    if alive.size == 0:
        return None
    if policy == "max_energy":
        return int(alive[np.argmax(field.residual[alive])])
    if policy == "random":
        if rng is None:
            raise ValueError("random sink policy needs an rng")
        return int(rng.choice(alive))
    if policy == "fixed":
        if field.alive[fixed_id]:
            return fixed_id
        return int(alive[np.argmax(field.residual[alive])])
    raise ValueError(f"unknown sink policy {policy!r}")


def observe(field: CoverageField, sink: int) -> np.ndarray:
    """Observation vector: (residual energy, distance to sink) per node id,
    interleaved; dead nodes report zero energy and a -1 distance sentinel.
    Raw coordinates are appended when the config asks for them."""
    n = field.n
    obs = np.empty(2 * n)
    obs[0::2] = field.residual
    dist = field.distances[:, sink].copy()
    dist[~field.alive] = DEAD_DISTANCE
    obs[1::2] = dist
    if field.config.observe_positions:
        obs = np.concatenate([obs, field.positions.reshape(-1)])
    return obs


def observation_size(config: NetworkConfig) -> int:
    return (4 if config.observe_positions else 2) * config.node_count


def scripted_policy(
    kind: str, observation: np.ndarray, seed, node_count: int | None = None,
) -> np.ndarray:
    """Score vector of one of the reference selection strategies.

    Scores are normalized ranks, so deterministic top-k selection yields
    exactly the documented behaviour: highest residual energy first, or
    nearest to the sink first, or a seeded uniform shuffle. `node_count` is
    only needed when positions are appended to the observation.
    """
    n = node_count if node_count is not None else observation.size // 2
    energies = observation[0 : 2 * n : 2]
    distances = observation[1 : 2 * n : 2].copy()
    if kind == "random":
        return np.random.default_rng(seed).random(n)
    if kind == "energy_greedy":
        order = np.argsort(energies, kind="stable")          # ascending
    elif kind == "distance_greedy":
        distances[distances < 0] = np.inf                    # dead last
        order = np.argsort(-distances, kind="stable")        # farthest first
    else:
        raise ValueError(f"unknown scripted policy {kind!r}")
    ranks = np.empty(n)
    ranks[order] = np.arange(n)
    return ranks / max(n - 1, 1)


def select_cb_group(
    scores: np.ndarray,
    field: CoverageField,
    sink: int,
    config: NetworkConfig,
    rng: np.random.Generator | None = None,
    deterministic: bool = False,
) -> list[int] | None:
    """Turn a score vector into the beamforming group for this round.

    The sink is force-included (it holds the data) unless configured out.
    Remaining slots are filled from alive nodes either by deterministic
    top-score ranking or by sampling without replacement proportional to
    softmax(score / temperature); both return ids in ranked order, sink
    first. None when too few alive nodes remain.
    """
    scores = np.clip(np.asarray(scores, dtype=float), 0.0, 1.0)
    if scores.shape != (field.n,):
        raise ValueError(f"action must have length {field.n}")
    include_sink = config.include_sink_in_cb
    candidates = field.alive.copy()
    k = config.cb_node_count
    if include_sink:
        candidates[sink] = False
        k -= 1
    ids = np.flatnonzero(candidates)
    if ids.size < k:
        return None
    if k == 0:
        return [sink]
    if deterministic:
        ranked = ids[np.lexsort((ids, -scores[ids]))][:k]
    else:
        if rng is None:
            raise ValueError("sampled selection needs an rng")
        logits = scores[ids] / config.softmax_temperature
        perturbed = logits + rng.gumbel(size=ids.size)
        ranked = ids[np.argsort(-perturbed, kind="stable")][:k]
    chosen = ranked.tolist()
    return [sink] + chosen if include_sink else chosen


def cb_phase(
    field: CoverageField,
    config: NetworkConfig,
    ledger: EnergyLedger,
    sink: int,
    c_sink_bits: float,
    selection: list[int],
    phase_rng: np.random.Generator,
) -> tuple[float, LinkBudget | None]:
    """Synchronize and beamform: the sink broadcasts the fused packet plus a
    strategy message to the group, survivors uplink it together. Returns the
    delivered bits (zero below the receive threshold, though the energy is
    spent regardless) and the link budget."""
    group = [i for i in selection if field.alive[i]]
    if sink not in group:
        return 0.0, None
    others = np.array([i for i in group if i != sink], dtype=int)
    data_bits = wire_bits(c_sink_bits)
    ctrl = config.control_packet_bits
    if others.size:
        far = float(field.distances[sink, others].max())
        ok = ledger.charge(sink, "sync_broadcast", tx_energy(data_bits, far, config))
        if ok:
            ok = ledger.charge(sink, "sync_broadcast", tx_energy(ctrl, far, config))
        process_deaths(ledger)
        if not ok or not field.alive[sink]:
            return 0.0, None
        others = others[field.alive[others]]
        if others.size:
            ledger.charge_many(others, "sync_rx",
                               rx_energy(data_bits, config) + rx_energy(ctrl, config))
        process_deaths(ledger)
    group = [i for i in group if field.alive[i]]
    if sink not in group:
        return 0.0, None

    kappa = config.phase_error_kappa
    if kappa is None or math.isinf(kappa):
        errors = np.zeros(len(group))
    else:
        errors = sample_phase_errors(len(group), kappa, phase_rng)
    cb_sel = CbSelection(
        node_ids=group,
        weights=np.ones(len(group)),
        sink_id=sink,
        positions=field.positions[group],
    )
    budget = received_power(cb_sel, config, errors)
    if budget.rate_bps > 0:
        per_node, _total = cb_energy(cb_sel, c_sink_bits, budget.rate_bps, config)
        for node, joules in zip(group, per_node.tolist()):
            if field.alive[node]:
                ledger.charge(node, "cb_tx", joules)
        process_deaths(ledger)
    delivered = c_sink_bits if budget.delivered else 0.0
    return delivered, budget


@dataclass
class EpisodeTrace:
    """Per-round records of one full simulation."""

    node_count: int
    config: NetworkConfig
    routing: str
    cb_policy: str
    seed: int
    rounds: list[int] = dc_field(default_factory=list)
    alive: list[int] = dc_field(default_factory=list)
    c_sink: list[float] = dc_field(default_factory=list)
    delivered: list[float] = dc_field(default_factory=list)
    energy: list[dict[str, float]] = dc_field(default_factory=list)
    ch_count: list[int] = dc_field(default_factory=list)
    sink: list[int] = dc_field(default_factory=list)
    selections: list[list[int] | None] = dc_field(default_factory=list)
    terminal_round: int = 0
    final_residual: float = 0.0
    ledger_total: float = 0.0

    def record(self, round_index, alive, c_sink, delivered, energy, chs, sink, selection):
        self.rounds.append(round_index)
        self.alive.append(alive)
        self.c_sink.append(c_sink)
        self.delivered.append(delivered)
        self.energy.append(energy)
        self.ch_count.append(chs)
        self.sink.append(sink)
        self.selections.append(selection)
        self.terminal_round = round_index

    def write_csv(self, path) -> None:
        header = ("round,alive,c_sink_bits,delivered_bits,"
                  + ",".join(EVENT_CLASSES) + ",sink,chs")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            for k in range(len(self.rounds)):
                row = [
                    str(self.rounds[k]),
                    str(self.alive[k]),
                    repr(self.c_sink[k]),
                    repr(self.delivered[k]),
                    *[repr(self.energy[k][c]) for c in EVENT_CLASSES],
                    str(self.sink[k]),
                    str(self.ch_count[k]),
                ]
                fh.write(",".join(row) + "\n")


def simulate_lifetime(
    config: NetworkConfig,
    routing: str = "omrp",
    cb_policy: str = "none",
    seed: int = 0,
    max_rounds: int | None = None,
) -> EpisodeTrace:
    """Run rounds until the network terminates: all nodes dead in
    routing-only mode, or too few alive to form a beamforming group."""
    if routing not in ROUTINGS:
        raise ValueError(f"unknown routing {routing!r}")
    if cb_policy not in CB_POLICIES:
        raise ValueError(f"unknown cb policy {cb_policy!r}")
    if cb_policy == "external":
        raise ValueError("external policy runs through the environment server")
    field, _ = generate_field(config, seed)
    ledger = EnergyLedger(field)
    election_rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
    policy_rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
    sink_rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
    phase_rng = np.random.default_rng(np.random.SeedSequence([seed, 4]))
    trace = EpisodeTrace(field.n, config, routing, cb_policy, seed)

    round_index = 0
    while max_rounds is None or round_index < max_rounds:
        sink = select_sink(field, config.sink_policy, sink_rng, config.fixed_sink_id)
        if sink is None:
            break
        if routing == "omrp":
            topo, out = run_round(field, sink, config, election_rng, ledger, round_index)
        elif routing == "leach":
            topo, out = leach_round(field, sink, config, election_rng, ledger, round_index)
        else:
            topo, out = pegasis_round(field, sink, config, ledger, round_index)

        selection = None
        if cb_policy == "none":
            delivered = out.sink_packet_bits
        else:
            delivered = 0.0
            feasible = (out.sink_alive
                        and field.alive.sum() >= config.cb_node_count)
            if feasible:
                obs = observe(field, sink)
                scores = scripted_policy(cb_policy, obs,
                                         policy_rng.integers(0, 2 ** 32),
                                         node_count=field.n)
                selection = select_cb_group(scores, field, sink, config,
                                            deterministic=True)
                if selection is not None:
                    delivered, _budget = cb_phase(
                        field, config, ledger, sink,
                        out.sink_packet_bits, selection, phase_rng,
                    )

        round_index += 1
        trace.record(
            round_index,
            int(field.alive.sum()),
            out.sink_packet_bits,
            delivered,
            ledger.round_summary(),
            out.ch_count,
            sink,
            selection,
        )
        alive_now = int(field.alive.sum())
        if alive_now == 0:
            break
        if cb_policy == "none":
            # a lone survivor exchanges no traffic: nothing can change again
            if alive_now <= 1 or ledger.round_totals.sum() == 0.0:
                break
        elif alive_now < config.cb_node_count:
            break
    trace.final_residual = float(field.residual.sum())
    trace.ledger_total = ledger.grand_total()
    return trace


def lifetime_metrics(trace: EpisodeTrace) -> dict:
    """Lifetime and throughput summary of a completed trace. Thresholds never
    crossed are reported at the terminal round and flagged undefined."""
    n = trace.node_count
    alive = trace.alive
    rounds = trace.rounds

    def first_round(pred) -> tuple[int, bool]:
        for r, a in zip(rounds, alive):
            if pred(a):
                return r, True
        return trace.terminal_round, False

    fnd, fnd_def = first_round(lambda a: a < n)
    hnd, hnd_def = first_round(lambda a: a <= n / 2)
    and_, and_def = first_round(lambda a: a == 0)
    p = trace.config.death_fraction
    quantile_deaths = math.ceil(p * (n - 1)) + 1
    f1, f1_def = first_round(lambda a: n - a >= quantile_deaths)
    return {
        "fnd": fnd, "fnd_defined": fnd_def,
        "hnd": hnd, "hnd_defined": hnd_def,
        "and": and_, "and_defined": and_def,
        "lifetime_quantile": f1, "lifetime_quantile_defined": f1_def,
        "total_delivered_bits": float(sum(trace.delivered)),
        "mean_c_sink_bits": float(np.mean(trace.c_sink)) if trace.c_sink else 0.0,
        "rounds": trace.terminal_round,
        "throughput_series": list(trace.delivered),
    }
