"""Node field generation and the disk-overlap geometry behind data fusion.

Every node monitors a disk of radius r. Spatial redundancy between nodes is
the overlap of those disks, estimated with a per-node seeded sample pool:
mc_samples points drawn uniformly inside each node's disk. Coverage of each
pool point by each neighbouring disk is precomputed once per field, so all
overlap quantities derived later (overlap degree, fusion rates, fused packet
sizes) are deterministic functions of (config, seed).

Fused packet sizes use the id-ordered union decomposition: a pool point of
node i counts toward the union iff no lower-id contributor's disk covers it.
That makes the fused size of a contributor set a pure set function, so any
fusion order (or merge tree) over the same nodes yields bit-identical sizes.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .config import NetworkConfig


def lens_area(d: float, r: float) -> float:
    """Intersection area of two radius-r disks with centers d apart."""
    if d < 0:
        raise ValueError("distance must be non-negative")
    if r <= 0:
        raise ValueError("radius must be positive")
    if d >= 2 * r:
        return 0.0
    return 2 * r * r * math.acos(d / (2 * r)) - (d / 2) * math.sqrt(4 * r * r - d * d)


@dataclass
class NodeState:
    """Snapshot of one node's state; built on demand from the field arrays."""

    id: int
    position: tuple[float, float]
    residual_energy: float
    alive: bool
    neighbor_ids: frozenset[int]
    overlap_degree: float
    rounds_since_ch: int
    in_candidate_set: bool


class CoverageField:
    """Static geometry plus mutable per-node simulation state.

    Geometry (positions, pairwise distances, neighbor lists, pool coverage)
    is fixed at construction. Residual energy, aliveness, candidate-set
    membership and the cached overlap degrees evolve during simulation.
    """

    def __init__(self, positions: np.ndarray, config: NetworkConfig, seed: int):
        n = positions.shape[0]
        self.config = config
        self.seed = seed
        self.n = n
        self.positions = np.asarray(positions, dtype=float)
        self.radius = float(config.monitor_radius)

        diff = self.positions[:, None, :] - self.positions[None, :, :]
        self.distances = np.sqrt((diff ** 2).sum(axis=2))

        # strict inequality: disks tangent at exactly 2r share no interior
        close = self.distances < 2 * self.radius
        np.fill_diagonal(close, False)
        self.neighbors = [np.flatnonzero(close[i]).tolist() for i in range(n)]
        self._neighbor_row = [
            {j: k for k, j in enumerate(self.neighbors[i])} for i in range(n)
        ]

        self._pool_seeds = np.random.SeedSequence(seed).spawn(n + 1)[1:]
        self._cover = [self._coverage_rows(i) for i in range(n)]

        # mutable state; fresh nodes start eligible for head duty
        self.residual = np.full(n, float(config.initial_energy))
        self.alive = np.ones(n, dtype=bool)
        self.rounds_since_ch = np.zeros(n, dtype=int)
        self.in_candidate_set = np.ones(n, dtype=bool)
        self.epoch_round = 0
        self.rho = np.array([self._compute_rho(i) for i in range(n)])

    # -- geometry ---------------------------------------------------------

    def sample_pool(self, node_id: int) -> np.ndarray:
        """Regenerate the node's seeded sample pool, shape (mc_samples, 2)."""
        rng = np.random.default_rng(self._pool_seeds[node_id])
        mc = self.config.mc_samples
        rad = self.radius * np.sqrt(rng.random(mc))
        ang = 2 * np.pi * rng.random(mc)
        pts = np.empty((mc, 2))
        pts[:, 0] = self.positions[node_id, 0] + rad * np.cos(ang)
        pts[:, 1] = self.positions[node_id, 1] + rad * np.sin(ang)
        return pts

    def _coverage_rows(self, node_id: int) -> np.ndarray:
        """Boolean (deg, mc) matrix: row k marks pool points of `node_id`
        lying inside the disk of its k-th neighbor."""
        nbrs = self.neighbors[node_id]
        mc = self.config.mc_samples
        if not nbrs:
            return np.zeros((0, mc), dtype=bool)
        pts = self.sample_pool(node_id)
        centers = self.positions[nbrs]
        d2 = ((pts[None, :, :] - centers[:, None, :]) ** 2).sum(axis=2)
        return d2 < self.radius ** 2

    def _compute_rho(self, node_id: int) -> float:
        rows = [
            self._neighbor_row[node_id][j]
            for j in self.neighbors[node_id]
            if self.alive[j]
        ]
        if not rows:
            return 0.0
        covered = self._cover[node_id][rows].any(axis=0)
        return float(covered.sum()) / self.config.mc_samples

    # -- state ------------------------------------------------------------

    def alive_ids(self) -> np.ndarray:
        return np.flatnonzero(self.alive)

    def mark_dead(self, node_id: int) -> list[int]:
        """Record a node death; returns the alive former neighbors whose
        overlap degrees were refreshed (SLP_notify recipients)."""
        self.alive[node_id] = False
        self.residual[node_id] = 0.0
        notified = [j for j in self.neighbors[node_id] if self.alive[j]]
        for j in notified:
            self.rho[j] = self._compute_rho(j)
        return notified

    def node_state(self, node_id: int) -> NodeState:
        return NodeState(
            id=node_id,
            position=tuple(self.positions[node_id]),
            residual_energy=float(self.residual[node_id]),
            alive=bool(self.alive[node_id]),
            neighbor_ids=frozenset(
                j for j in self.neighbors[node_id] if self.alive[j]
            ),
            overlap_degree=float(self.rho[node_id]),
            rounds_since_ch=int(self.rounds_since_ch[node_id]),
            in_candidate_set=bool(self.in_candidate_set[node_id]),
        )


def generate_field(
    config: NetworkConfig, seed: int
) -> tuple[CoverageField, list[NodeState]]:
    """Deploy the node field: uniform placement unless positions come from
    a CSV file; neighbor lists, pools and overlap degrees ready to use."""
    if config.positions_file:
        positions = load_positions_csv(config.positions_file)
        if positions.shape[0] != config.node_count:
            config = config.replace(node_count=positions.shape[0])
    else:
        rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(1)[0])
        positions = np.empty((config.node_count, 2))
        positions[:, 0] = rng.random(config.node_count) * config.region_width
        positions[:, 1] = rng.random(config.node_count) * config.region_height
    field = CoverageField(positions, config, seed)
    return field, [field.node_state(i) for i in range(field.n)]


def load_positions_csv(path: str) -> np.ndarray:
    """Read node positions from a CSV with header `id,x,y` (meters)."""
    rows: list[tuple[int, float, float]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames[:3]] != ["id", "x", "y"]:
            raise ValueError(f"{path}: expected header 'id,x,y'")
        for rec in reader:
            rows.append((int(rec["id"]), float(rec["x"]), float(rec["y"])))
    if not rows:
        raise ValueError(f"{path}: no position rows")
    ids = [r[0] for r in rows]
    if len(set(ids)) != len(ids):
        raise ValueError(f"{path}: duplicate node ids")
    rows.sort()
    pts = np.array([[x, y] for _, x, y in rows])
    if not np.isfinite(pts).all():
        raise ValueError(f"{path}: non-finite coordinate")
    return pts


def overlap_degree(field: CoverageField, node_id: int) -> float:
    """Fraction of the node's disk covered by the union of its alive
    neighbors' disks (0 when it has none)."""
    return field._compute_rho(node_id)


class FusedPacket:
    """A data packet and the set of nodes whose readings it carries.

    Size is the id-ordered union estimate over the support set, in units of
    one full disk = one data packet. `uncovered[i]` marks pool points of
    member i not covered by any lower-id member, so `sum(counts)/mc` is the
    union area in disk units regardless of how the packet was assembled.
    """

    __slots__ = ("field", "support", "uncovered", "counts", "total")

    def __init__(self, field: CoverageField):
        self.field = field
        self.support: set[int] = set()
        self.uncovered: dict[int, np.ndarray] = {}
        self.counts: dict[int, int] = {}
        self.total = 0

    @classmethod
    def single(cls, field: CoverageField, node_id: int) -> "FusedPacket":
        pkt = cls(field)
        mc = field.config.mc_samples
        pkt.support.add(node_id)
        pkt.uncovered[node_id] = np.ones(mc, dtype=bool)
        pkt.counts[node_id] = mc
        pkt.total = mc
        return pkt

    @property
    def bits(self) -> float:
        return self.field.config.data_packet_bits * self.total / self.field.config.mc_samples

    def copy(self) -> "FusedPacket":
        pkt = FusedPacket(self.field)
        pkt.support = set(self.support)
        pkt.uncovered = {i: m.copy() for i, m in self.uncovered.items()}
        pkt.counts = dict(self.counts)
        pkt.total = self.total
        return pkt

    def absorb(self, other: "FusedPacket") -> None:
        """Fuse another packet's contents into this one (supports disjoint)."""
        fld = self.field
        for y in other.support:
            row_of = fld._neighbor_row[y]
            for x in fld.neighbors[y]:
                if x not in self.support:
                    continue
                if x > y:
                    self.total += _exclude(self.uncovered, self.counts, x,
                                           fld._cover[x][fld._neighbor_row[x][y]])
                else:
                    other.total += _exclude(other.uncovered, other.counts, y,
                                            fld._cover[y][row_of[x]])
        self.support |= other.support
        self.uncovered.update(other.uncovered)
        self.counts.update(other.counts)
        self.total += other.total

    def absorb_node(self, node_id: int) -> None:
        self.absorb(FusedPacket.single(self.field, node_id))


def _exclude(uncovered: dict, counts: dict, member: int, cover_row: np.ndarray) -> int:
    """Drop covered points from a member's mask; returns the count delta."""
    mask = uncovered[member]
    before = counts[member]
    np.logical_and(mask, ~cover_row, out=mask)
    after = int(mask.sum())
    counts[member] = after
    return after - before


def build_packet(field: CoverageField, node_ids) -> FusedPacket:
    """Fused packet over a node set (canonical: order does not matter)."""
    ids = list(node_ids)
    if not ids:
        return FusedPacket(field)
    pkt = FusedPacket.single(field, ids[0])
    for i in ids[1:]:
        pkt.absorb_node(i)
    return pkt


def fusion_rate(field: CoverageField, fused_set, incoming: int) -> float:
    """Redundancy fraction of an incoming node's packet against the packets
    already fused (0 = fully novel, 1 = fully redundant)."""
    fused = set(fused_set)
    if incoming in fused:
        raise ValueError("incoming node already in fused set")
    if not fused:
        return 0.0
    base = build_packet(field, fused)
    grown = base.copy()
    grown.absorb_node(incoming)
    alpha = 1.0 - (grown.total - base.total) / field.config.mc_samples
    return min(1.0, max(0.0, alpha))


def fused_size_update(current_bits: float, alpha: float, packet_bits: float) -> float:
    """Packet size after fusing one more node's packet at redundancy alpha."""
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    if current_bits < 0:
        raise ValueError("current size must be non-negative")
    return current_bits + (1.0 - alpha) * packet_bits
