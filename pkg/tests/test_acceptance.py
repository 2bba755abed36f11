"""Acceptance suite: one test per release criterion, at pinned tolerances.

Run with `pytest tests/test_acceptance.py -v -s` to see one line per
criterion. The lifetime-ranking experiments are the slow part (a few
minutes); everything else completes in seconds.
"""
import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pytest

from cbnet.beamforming import CbSelection, received_power
from cbnet.cli import _run_one
from cbnet.config import NetworkConfig
from cbnet.energy import EnergyLedger, fusion_energy, rx_energy, tx_energy
from cbnet.env import EnvServer
from cbnet.lifecycle import lifetime_metrics, simulate_lifetime
from cbnet.netmodel import build_packet, generate_field
from cbnet.omrp import relay_decision, run_round

from conftest import place_nodes

WORKERS = 2


def _report(name: str, detail: str):
    print(f"\nACCEPT {name}: {detail}")


def _run_many(tasks):
    with ProcessPoolExecutor(max_workers=WORKERS) as pool:
        return list(pool.map(_run_one, tasks))


def _center_group(k):
    return CbSelection(node_ids=list(range(k)), weights=np.ones(k), sink_id=0,
                       positions=np.tile([100.0, 100.0], (k, 1)))


def test_criterion_01_link_budget_reproduction():
    """10 unit-weight nodes at the region center, 1100 m from the BS."""
    start = time.time()
    cfg = NetworkConfig()
    budget = received_power(_center_group(10), cfg)
    assert budget.distance_m == pytest.approx(1100.0)
    assert budget.received_power_dbm == pytest.approx(-52.1, abs=0.2)
    elapsed = time.time() - start
    assert elapsed < 1.0
    _report("01 link budget",
            f"{budget.received_power_dbm:.2f} dBm at 1100 m ({elapsed * 1e3:.0f} ms)")


def test_criterion_02_n_squared_law_exact():
    cfg = NetworkConfig()
    base = received_power(_center_group(1), cfg).received_power_w
    for n in range(1, 17):
        ratio = received_power(_center_group(n), cfg).received_power_w / base
        assert ratio == n * n
    _report("02 quadratic power law", "exact for group sizes 1..16")


def test_criterion_03_radio_model_anchors():
    cfg = NetworkConfig()
    assert cfg.crossover_distance == pytest.approx(87.706, abs=1e-3)
    assert tx_energy(10000, 50, cfg) == pytest.approx(7.5e-4, rel=1e-12)
    assert tx_energy(10000, 100, cfg) == pytest.approx(1.8e-3, rel=1e-12)
    assert fusion_energy(10000, 10000, cfg) == pytest.approx(4.0e-4, rel=1e-12)
    _report("03 radio anchors",
            "crossover 87.706 m; tx 7.5e-4 / 1.8e-3 J; fusion 4.0e-4 J")


def test_criterion_04_relay_rule_oracle():
    cfg = NetworkConfig(node_count=3, mc_samples=1000)
    assert 2 * cfg.elec_energy / cfg.fs_amp_energy == pytest.approx(1.0e4, rel=1e-12)
    rng = np.random.default_rng(2024)
    agree = 0
    trials = 10 ** 4
    for _ in range(trials):
        pts = rng.uniform(0, 60, size=(3, 2))  # every pair below crossover
        field = place_nodes(pts, cfg)
        d = field.distances
        relay_cost = (4 * cfg.elec_energy
                      + cfg.fs_amp_energy * (d[0, 1] ** 2 + d[1, 2] ** 2))
        direct_cost = 2 * cfg.elec_energy + cfg.fs_amp_energy * d[0, 2] ** 2
        decision = relay_decision(field, 0, [0, 1], sink=2)
        if (decision == 1) == (relay_cost < direct_cost):
            agree += 1
    assert agree == trials
    _report("04 relay rule", f"{agree}/{trials} decisions match energy oracle; "
            "break-even 1.0e4 m^2")


def test_criterion_05_fusion_order_invariance():
    cfg = NetworkConfig(node_count=400, mc_samples=20000)
    field, _ = generate_field(cfg, 0)
    from shapely.geometry import Point
    from shapely.ops import unary_union

    rng = np.random.default_rng(7)
    disk = math.pi * field.radius ** 2
    checked = 0
    for _ in range(100):
        size = int(rng.integers(2, 9))
        ids = rng.choice(field.n, size=size, replace=False).tolist()
        perms = [tuple(ids), tuple(ids[::-1]), tuple(sorted(ids))]
        perms += [tuple(rng.permutation(ids)) for _ in range(5)]
        values = {build_packet(field, list(p)).bits for p in perms}
        assert len(values) == 1, f"order-dependent size for {ids}"
        bits = values.pop()
        union = unary_union([
            Point(*field.positions[i]).buffer(field.radius, quad_segs=256)
            for i in ids
        ]).area
        oracle = cfg.data_packet_bits * union / disk
        se = cfg.data_packet_bits * math.sqrt(size * 0.25 / cfg.mc_samples)
        assert abs(bits - oracle) <= 3 * se
        checked += 1
    _report("05 fusion order invariance",
            f"{checked} subsets exactly permutation-invariant, "
            "within 3 SE of the union-area oracle")


def test_criterion_06_energy_conservation():
    for routing, cb in (("omrp", "none"), ("leach", "none"),
                        ("omrp", "distance_greedy")):
        cfg = NetworkConfig(node_count=60, mc_samples=1000, initial_energy=0.5)
        trace = simulate_lifetime(cfg, routing, cb, seed=3)
        budget = cfg.node_count * cfg.initial_energy
        spent = budget - trace.final_residual
        assert trace.ledger_total == pytest.approx(spent, rel=1e-9)
    _report("06 energy conservation",
            "ledger equals initial-minus-residual to 1e-9 relative "
            "(both routings, with and without beamforming)")


def test_criterion_07_lifetime_ranking():
    start = time.time()
    cfg = NetworkConfig(node_count=400, mc_samples=1000, initial_energy=4.0)
    seeds = range(20)
    tasks = [(routing, cfg, routing, "none", seed, None)
             for routing in ("omrp", "leach", "pegasis") for seed in seeds]
    results = _run_many(tasks)
    fnd = {r: [] for r in ("omrp", "leach", "pegasis")}
    and_ = {r: [] for r in ("omrp", "leach", "pegasis")}
    for label, _seed, _trace, metrics in results:
        fnd[label].append(metrics["fnd"])
        and_[label].append(metrics["and"])
    med = {r: (np.median(fnd[r]), np.median(and_[r])) for r in fnd}
    elapsed = time.time() - start
    assert med["omrp"][0] > med["leach"][0]
    assert med["omrp"][1] > med["leach"][1]
    improvement = (med["omrp"][1] - med["leach"][1]) / med["leach"][1]
    assert 0.05 <= improvement <= 0.35
    assert med["pegasis"][0] < med["leach"][0]
    assert med["pegasis"][0] < med["omrp"][0]
    assert elapsed < 600
    _report("07 lifetime ranking",
            f"median FND omrp {med['omrp'][0]:.0f} > leach {med['leach'][0]:.0f}; "
            f"median AND +{improvement:.1%}; pegasis FND {med['pegasis'][0]:.0f} "
            f"smallest ({elapsed:.0f}s, 60 traces)")


def test_criterion_08_overlap_sweep():
    base = NetworkConfig(node_count=200, mc_samples=1000, initial_energy=2.0)
    seeds = range(10)
    tasks = []
    for radius in (4.0, 6.0, 8.0):
        cfg = base.replace(monitor_radius=radius)
        for routing in ("omrp", "leach"):
            for seed in seeds:
                tasks.append((f"{routing}:{radius}", cfg, routing, "none",
                              seed, None))
    results = _run_many(tasks)
    delivered: dict[str, list[float]] = {}
    for label, _seed, _trace, metrics in results:
        delivered.setdefault(label, []).append(metrics["total_delivered_bits"])
    lines = []
    for radius in (4.0, 6.0, 8.0):
        omrp = np.median(delivered[f"omrp:{radius}"])
        leach = np.median(delivered[f"leach:{radius}"])
        assert omrp >= leach, f"radius {radius}: {omrp:.3e} < {leach:.3e}"
        lines.append(f"r={radius:g}: {omrp / leach:.2f}x")
    _report("08 overlap sweep", "delivered bits vs baseline " + ", ".join(lines))


def test_criterion_09_environment_determinism():
    import pathlib
    from record_golden import golden_config

    golden = pathlib.Path(__file__).parent / "data" / "golden_session.ndjson"
    lines = golden.read_text().splitlines()
    server = EnvServer(golden_config())
    frames = 0
    for request, expected in zip(lines[0::2], lines[1::2]):
        reply, _ = server.handle_line(request[2:])
        assert reply.decode("utf-8").rstrip("\n") == expected[2:]
        frames += 1
    _report("09 environment determinism",
            f"golden transcript of {frames} frames replays byte-identically")


def test_criterion_10_phase_error_robustness():
    base = dict(node_count=200, mc_samples=1000, initial_energy=6.0)
    seeds = range(10)
    tasks = []
    for kappa in (None, 10.0):
        cfg = NetworkConfig(**base, phase_error_kappa=kappa)
        for seed in seeds:
            tasks.append((f"k:{kappa}", cfg, "omrp", "distance_greedy",
                          seed, None))
    results = _run_many(tasks)
    f2: dict[str, dict[int, float]] = {"k:None": {}, "k:10.0": {}}
    for label, seed, _trace, metrics in results:
        f2[label][seed] = metrics["total_delivered_bits"]
    degradation = np.median([
        (f2["k:None"][s] - f2["k:10.0"][s]) / f2["k:None"][s] for s in seeds
    ])
    assert degradation < 0.10
    _report("10 phase-error robustness",
            f"median delivered-bits loss at kappa=10: {degradation:.1%}")


def test_criterion_11_scripted_policy_ranking():
    cfg = NetworkConfig(node_count=200, mc_samples=1000, initial_energy=6.0)
    seeds = range(10)
    tasks = [(policy, cfg, "omrp", policy, seed, None)
             for policy in ("distance_greedy", "random", "energy_greedy")
             for seed in seeds]
    results = _run_many(tasks)
    rounds: dict[str, list[int]] = {}
    for label, _seed, _trace, metrics in results:
        rounds.setdefault(label, []).append(metrics["rounds"])
    med = {k: np.median(v) for k, v in rounds.items()}
    assert med["distance_greedy"] > med["random"]
    assert med["distance_greedy"] > med["energy_greedy"]
    _report("11 scripted policies",
            f"median lifetime rounds: distance {med['distance_greedy']:.0f} > "
            f"energy {med['energy_greedy']:.0f}, random {med['random']:.0f}")
