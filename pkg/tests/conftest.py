import numpy as np
import pytest

from cbnet.config import NetworkConfig
from cbnet.netmodel import CoverageField, generate_field


@pytest.fixture(scope="session")
def small_config():
    return NetworkConfig(node_count=40, mc_samples=2000, initial_energy=0.5,
                         master_seed=7)


@pytest.fixture(scope="session")
def small_field(small_config):
    field, _ = generate_field(small_config, 7)
    return field


def fresh_field(config: NetworkConfig, seed: int) -> CoverageField:
    field, _ = generate_field(config, seed)
    return field


def place_nodes(points, config: NetworkConfig, seed: int = 0) -> CoverageField:
    """Field with hand-picked positions (bypasses the uniform generator)."""
    return CoverageField(np.asarray(points, dtype=float), config, seed)
