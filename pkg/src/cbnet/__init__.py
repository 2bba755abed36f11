"""Correlated-data IoT network simulator with collaborative beamforming.

A deterministic round-based model of a sensor field that aggregates
spatially redundant data over hierarchical routing, fuses it along the way,
and uplinks the result to a remote base station through a virtual antenna
array, plus the node-selection decision process built on top of it.
"""

from .beamforming import (
    CbSelection,
    LinkBudget,
    array_factor,
    cb_energy,
    received_power,
    sample_phase_errors,
)
from .config import ConfigError, NetworkConfig
from .energy import EnergyLedger, fusion_energy, rx_energy, tx_energy
from .env import CbEnv, EnvProtocolError, EnvServer
from .lifecycle import (
    EpisodeTrace,
    lifetime_metrics,
    observe,
    scripted_policy,
    select_cb_group,
    select_sink,
    simulate_lifetime,
)
from .netmodel import (
    CoverageField,
    FusedPacket,
    NodeState,
    build_packet,
    fused_size_update,
    fusion_rate,
    generate_field,
    lens_area,
    load_positions_csv,
    overlap_degree,
)
from .omrp import (
    RoundOutcome,
    TopologyGraph,
    ch_threshold,
    elect_cluster_heads,
    form_clusters,
    relay_decision,
    run_round,
    tdma_fusion_order,
)
from .baselines import build_chain, leach_round, pegasis_round

__version__ = "0.1.0"
