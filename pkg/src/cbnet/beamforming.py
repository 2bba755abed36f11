"""Collaborative-beamforming physics: array factor, link budget, CB energy.

The selected nodes act as a virtual antenna array. Each element's initial
phase is set to cancel its path delay toward the base station, so under
perfect synchronization the field contributions add coherently there and the
array factor magnitude equals the sum of excitation weights. Received power
follows the two-ray ground model with effective radiated power equal to the
rated element power scaled by the squared array factor.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import NetworkConfig


@dataclass
class CbSelection:
    """A beamforming group: node ids, excitation weights, and the sink."""

    node_ids: list[int]
    weights: np.ndarray
    sink_id: int
    positions: np.ndarray  # (k, 2) ground coordinates of the selected nodes

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.node_ids) == 0:
            raise ValueError("selection must not be empty")
        if self.weights.shape != (len(self.node_ids),):
            raise ValueError("one excitation weight per selected node")
        if ((self.weights < 0) | (self.weights > 1)).any():
            raise ValueError("excitation weights must lie in [0, 1]")
        if self.sink_id not in self.node_ids:
            raise ValueError("sink must be part of the selection")

    @property
    def centroid(self) -> np.ndarray:
        return self.positions.mean(axis=0)


@dataclass
class LinkBudget:
    received_power_w: float
    received_power_dbm: float
    snr_db: float
    rate_bps: float
    distance_m: float
    delivered: bool


def array_factor(
    positions: np.ndarray,
    weights: np.ndarray,
    phase_errors: np.ndarray,
    target: np.ndarray,
    wavelength: float,
    observation: np.ndarray | None = None,
) -> float:
    """Array factor magnitude at an observation point.

    `positions` are 3-D element coordinates and `target` the 3-D point the
    initial phases are matched to; with zero phase errors and observation at
    the target the magnitude is exactly the sum of the weights. Observation
    defaults to the target.
    """
    positions = np.asarray(positions, dtype=float)
    weights = np.asarray(weights, dtype=float)
    phase_errors = np.asarray(phase_errors, dtype=float)
    if positions.shape[0] == 0:
        raise ValueError("selection must not be empty")
    if phase_errors.shape != (positions.shape[0],):
        raise ValueError("one phase error per element")
    if observation is None:
        observation = target
    k = 2 * np.pi / wavelength
    d_target = np.linalg.norm(positions - np.asarray(target, dtype=float), axis=1)
    d_obs = np.linalg.norm(positions - np.asarray(observation, dtype=float), axis=1)
    if observation is target:
        phases = phase_errors  # geometric terms cancel identically
    else:
        phases = -k * d_target + k * d_obs + phase_errors
    return float(abs(np.sum(weights * np.exp(1j * phases))))


def sample_phase_errors(n: int, kappa: float, seed) -> np.ndarray:
    """Draw n phase errors from the Tikhonov (von Mises) distribution with
    mean zero; kappa = 0 degenerates to uniform over the circle."""
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    rng = np.random.default_rng(seed)
    if kappa == 0:
        return rng.random(n) * 2 * np.pi - np.pi
    return rng.vonmises(0.0, kappa, size=n)


def received_power(
    selection: CbSelection,
    config: NetworkConfig,
    phase_errors: np.ndarray | None = None,
) -> LinkBudget:
    """Two-ray link budget from the beamforming group to the base station.

    Distance is measured from the BS to the ground centroid of the group;
    element and BS gains are unity, so radiated power is the rated node
    power scaled by |AF|^2.
    """
    k = len(selection.node_ids)
    if phase_errors is None:
        phase_errors = np.zeros(k)
    centroid = selection.centroid
    bs = np.array(config.bs_position)
    distance = float(np.linalg.norm(bs - centroid))
    elements = np.column_stack(
        [selection.positions, np.full(k, config.node_height)]
    )
    target = np.array([bs[0], bs[1], config.bs_height])
    af = array_factor(
        elements, selection.weights, phase_errors, target, config.wavelength_m
    )
    geometry = (
        config.tx_power_w
        * config.node_height ** 2
        * config.bs_height ** 2
        / distance ** 4
    )
    p_r = (af * af) * geometry
    if p_r > 0:
        p_dbm = 10 * math.log10(p_r * 1000.0)
        snr = p_r / config.noise_power_w
        snr_db = 10 * math.log10(snr)
        rate = config.bandwidth_hz * math.log2(1 + snr)
    else:
        p_dbm = -math.inf
        snr_db = -math.inf
        rate = 0.0
    delivered = p_dbm >= config.min_rx_dbm
    return LinkBudget(p_r, p_dbm, snr_db, rate, distance, delivered)


def cb_energy(
    selection: CbSelection,
    final_packet_bits: float,
    rate_bps: float,
    config: NetworkConfig,
) -> tuple[np.ndarray, float]:
    """Per-node and total energy for transmitting the fused packet: each
    element radiates at its squared weight times rated power for the full
    packet airtime."""
    if rate_bps <= 0:
        raise ValueError("rate must be positive")
    airtime = math.ceil(final_packet_bits) / rate_bps
    per_node = (selection.weights ** 2) * config.tx_power_w * airtime
    return per_node, float(per_node.sum())
