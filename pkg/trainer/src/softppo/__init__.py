"""Recurrent clipped-policy-gradient trainer for the beamforming
node-selection environment, speaking its wire protocol."""

from .agent import AgentConfig, SoftPpoAgent, TrajectoryBuffer
from .client import EnvClient, EnvConnectionError
from .nets import (
    ActorHead,
    CriticHead,
    FeatureNet,
    LstmCell,
    parse_observation,
    selection_entropy,
    selection_log_prob,
)
from .train import load_checkpoint, run_episode, save_checkpoint, train

__version__ = "0.1.0"
