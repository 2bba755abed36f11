"""Network configuration: physical constants, protocol knobs, and RL weights.

Defaults correspond to the reference 400-node deployment: a 200 m x 200 m
field monitored by 6 m-radius sensors, reporting to a base station 1000 m
outside the region through collaborative uplink beamforming.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass


class ConfigError(ValueError):
    """Raised when a configuration value violates its documented range."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"config field '{field}': {message}")


@dataclass
class NetworkConfig:
    # -- deployment geometry --
    node_count: int = 400
    region_width: float = 200.0          # m
    region_height: float = 200.0         # m
    bs_x: float = 100.0                  # m
    bs_y: float = 1200.0                 # m
    monitor_radius: float = 6.0          # m, sensing disk radius
    node_height: float = 1.5             # m, radio height of a node
    bs_height: float = 20.0              # m, radio height of the BS

    # -- radio / energy model --
    initial_energy: float = 4.0          # J per node
    elec_energy: float = 50e-9           # J/bit, transceiver circuitry
    fs_amp_energy: float = 10e-12        # J/bit/m^2, free-space amplifier
    mp_amp_energy: float = 0.0013e-12    # J/bit/m^4, multipath amplifier
    fusion_cost: float = 20e-9           # J/bit processed during fusion
    data_packet_bits: int = 10000
    control_packet_bits: int = 200
    bandwidth_hz: float = 1e5
    noise_dbm_per_hz: float = -174.0
    tx_power_w: float = 0.1              # rated power at unit excitation
    min_rx_dbm: float = -52.0            # delivery threshold at the BS
    wavelength_m: float = 0.125          # 2.4 GHz carrier

    # -- routing protocol --
    ch_ratio: float = 0.07               # lower-bound fraction of cluster heads
    ch_amplification: float = 1.2        # overlap-degree amplification base
    # beamforming group size (sink included); sized so the link clears the
    # receive threshold from every sink position with phase-noise margin
    cb_node_count: int = 14

    # -- lifetime / reward bookkeeping --
    death_fraction: float = 0.5          # quantile for the lifetime objective
    throughput_weight: float | None = None   # reward weight, default 1/packet
    energy_weight: float | None = None       # reward weight, default 1/E0
    softmax_temperature: float = 0.1     # selection sampling temperature

    # -- geometry Monte Carlo / reproducibility --
    mc_samples: int = 20000              # points per monitoring disk
    master_seed: int = 0

    # -- optional behaviour switches --
    sink_policy: str = "max_energy"      # max_energy | random | fixed
    fixed_sink_id: int = 0
    include_sink_in_cb: bool = True
    observe_positions: bool = False      # append raw (x, y) to observations
    phase_error_kappa: float | None = None   # None = perfect synchronization
    max_link_distance: float | None = None   # optional hop-length cap
    positions_file: str | None = None    # CSV `id,x,y` overriding placement

    def __post_init__(self):
        if self.throughput_weight is None:
            self.throughput_weight = 1.0 / self.data_packet_bits
        if self.energy_weight is None:
            self.energy_weight = 1.0 / self.initial_energy
        self.validate()

    def validate(self):
        positive = [
            "node_count", "region_width", "region_height", "monitor_radius",
            "node_height", "bs_height", "initial_energy", "elec_energy",
            "fs_amp_energy", "mp_amp_energy", "fusion_cost",
            "data_packet_bits", "control_packet_bits", "bandwidth_hz",
            "tx_power_w", "wavelength_m", "softmax_temperature",
        ]
        for name in positive:
            if not getattr(self, name) > 0:
                raise ConfigError(name, "must be strictly positive")
        if not 0 < self.ch_ratio <= 1:
            raise ConfigError("ch_ratio", "must lie in (0, 1]")
        if self.ch_amplification < 1:
            raise ConfigError("ch_amplification", "must be >= 1")
        if not 0 < self.death_fraction <= 1:
            raise ConfigError("death_fraction", "must lie in (0, 1]")
        if self.throughput_weight < 0:
            raise ConfigError("throughput_weight", "must be >= 0")
        if self.energy_weight < 0:
            raise ConfigError("energy_weight", "must be >= 0")
        if self.cb_node_count < 1:
            raise ConfigError("cb_node_count", "must be >= 1")
        if self.mc_samples < 1000:
            raise ConfigError("mc_samples", "must be >= 1000")
        if self.sink_policy not in ("max_energy", "random", "fixed"):
            raise ConfigError("sink_policy", "unknown policy")
        if self.phase_error_kappa is not None and self.phase_error_kappa < 0:
            raise ConfigError("phase_error_kappa", "must be >= 0 or null")

    @property
    def bs_position(self) -> tuple[float, float]:
        return (self.bs_x, self.bs_y)

    @property
    def crossover_distance(self) -> float:
        """Distance where the free-space and multipath amplifier costs meet."""
        return math.sqrt(self.fs_amp_energy / self.mp_amp_energy)

    @property
    def noise_power_w(self) -> float:
        return 10 ** ((self.noise_dbm_per_hz - 30.0) / 10.0) * self.bandwidth_hz

    def replace(self, **overrides) -> "NetworkConfig":
        """New config with the given fields overridden and re-validated."""
        values = dataclasses.asdict(self)
        # weights were resolved in __post_init__; keep them unless re-derived
        if "initial_energy" in overrides and "energy_weight" not in overrides:
            values["energy_weight"] = None
        if "data_packet_bits" in overrides and "throughput_weight" not in overrides:
            values["throughput_weight"] = None
        values.update(overrides)
        return NetworkConfig(**values)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(unknown[0], "unknown config field")
        return cls(**data)

    @classmethod
    def from_file(cls, path: str) -> "NetworkConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))
