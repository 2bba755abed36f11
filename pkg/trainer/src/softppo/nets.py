"""Policy networks: recurrent feature extractor with explicit gate
arithmetic, a bounded scoring head, and a state-value head.

The scoring head emits the environment action directly. Selection happens
server-side by softmax sampling without replacement over the emitted
scores, so the log-probability of the returned ranked selection is the
sequential-softmax form computed here; it is differentiable through the
scores and exactly matches the server's sampling distribution.
"""
from __future__ import annotations

import torch
import torch.nn as nn


class LstmCell(nn.Module):
    """Standard forget/input/output-gate recurrence, gates exposed."""

    def __init__(self, input_size: int, hidden_size: int):
        super().__init__()
        self.hidden_size = hidden_size
        self.w_f = nn.Linear(input_size + hidden_size, hidden_size)
        self.w_i = nn.Linear(input_size + hidden_size, hidden_size)
        self.w_c = nn.Linear(input_size + hidden_size, hidden_size)
        self.w_o = nn.Linear(input_size + hidden_size, hidden_size)

    def forward(self, x, state):
        h_prev, c_prev = state
        joint = torch.cat([h_prev, x], dim=-1)
        forget = torch.sigmoid(self.w_f(joint))
        ingate = torch.sigmoid(self.w_i(joint))
        candidate = torch.tanh(self.w_c(joint))
        cell = forget * c_prev + ingate * candidate
        out = torch.sigmoid(self.w_o(joint))
        hidden = out * torch.tanh(cell)
        return hidden, (hidden, cell), (forget, ingate, out)

    def initial_state(self, batch: int = 1):
        zeros = torch.zeros(batch, self.hidden_size)
        return zeros, zeros.clone()


class FeatureNet(nn.Module):
    """Observation encoder: linear embedding plus the recurrent cell, or a
    plain feedforward stack when recurrence is ablated."""

    def __init__(self, obs_dim: int, hidden_size: int, recurrent: bool = True):
        super().__init__()
        self.recurrent = recurrent
        self.embed = nn.Linear(obs_dim, hidden_size)
        if recurrent:
            self.cell = LstmCell(hidden_size, hidden_size)
        else:
            self.ff = nn.Linear(hidden_size, hidden_size)

    def initial_state(self, batch: int = 1):
        if self.recurrent:
            return self.cell.initial_state(batch)
        return None

    def forward(self, obs_seq: torch.Tensor, state=None):
        """obs_seq: (T, obs_dim) -> features (T, hidden), final state."""
        x = torch.tanh(self.embed(obs_seq))
        if not self.recurrent:
            return torch.tanh(self.ff(x)), None
        if state is None:
            state = self.cell.initial_state(1)
        outputs = []
        for t in range(x.shape[0]):
            hidden, state, _gates = self.cell(x[t : t + 1], state)
            outputs.append(hidden)
        return torch.cat(outputs, dim=0), state


class ActorHead(nn.Module):
    """Scores in [0, 1] per node: a softmax over node logits (the smoothing
    control) or an independent sigmoid when that control is ablated."""

    def __init__(self, hidden_size: int, n_nodes: int, softmax_control: bool = True):
        super().__init__()
        self.softmax_control = softmax_control
        self.logits = nn.Linear(hidden_size, n_nodes)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        raw = self.logits(features)
        if self.softmax_control:
            return torch.softmax(raw, dim=-1)
        return torch.sigmoid(raw)


class CriticHead(nn.Module):
    def __init__(self, hidden_size: int):
        super().__init__()
        self.value = nn.Linear(hidden_size, 1)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        return self.value(features).squeeze(-1)


def selection_log_prob(
    scores: torch.Tensor,
    selection: list[int],
    candidates: torch.Tensor,
    temperature: float,
) -> torch.Tensor:
    """Log-probability of the server's ranked selection under sequential
    softmax sampling without replacement over `candidates` (a boolean node
    mask excluding the sink and the dead)."""
    logits = scores / temperature
    neg_inf = torch.tensor(float("-inf"), dtype=logits.dtype)
    masked = torch.where(candidates, logits, neg_inf)
    total = torch.tensor(0.0, dtype=logits.dtype)
    remaining = masked.clone()
    for node in selection:
        total = total + remaining[node] - torch.logsumexp(remaining, dim=-1)
        remaining = remaining.clone()
        remaining[node] = neg_inf
    return total


def selection_entropy(
    scores: torch.Tensor, candidates: torch.Tensor, temperature: float,
) -> torch.Tensor:
    """Entropy of the first-pick distribution; a cheap exploration proxy."""
    logits = torch.where(candidates, scores / temperature,
                         torch.tensor(float("-inf"), dtype=scores.dtype))
    log_p = logits - torch.logsumexp(logits, dim=-1)
    p = torch.exp(log_p)
    return -(p[candidates] * log_p[candidates]).sum()


def parse_observation(obs, node_count: int):
    """Split the interleaved observation into (energies, distances) and
    derive the alive mask and sink id (alive node at distance zero)."""
    import numpy as np

    obs = np.asarray(obs)
    energies = obs[0 : 2 * node_count : 2]
    distances = obs[1 : 2 * node_count : 2]
    alive = energies > 0
    sink_candidates = np.flatnonzero(alive & (distances == 0.0))
    sink = int(sink_candidates[0]) if sink_candidates.size else -1
    return energies, distances, alive, sink
