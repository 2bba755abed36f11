"""Clipped-policy-gradient agent over the selection environment.

Collection uses the live actor; updates run several epochs over the whole
episode sequence with generalized advantage estimation, a clipped
importance-ratio surrogate against a frozen old actor, a value regression
and an entropy bonus. The old actor re-syncs every `old_update_interval`
update steps.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field as dc_field

import numpy as np
import torch

from .nets import (
    ActorHead,
    CriticHead,
    FeatureNet,
    parse_observation,
    selection_entropy,
    selection_log_prob,
)


@dataclass
class AgentConfig:
    discount: float = 0.5
    learning_rate: float = 1e-3
    clip_epsilon: float = 0.2
    old_update_interval: int = 4
    episodes: int = 200
    steps_per_episode: int = 24
    hidden_size: int = 64
    gae_lambda: float = 0.95
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    update_epochs: int = 4
    temperature: float = 0.1
    seed: int = 0
    recurrent: bool = True
    softmax_control: bool = True

    def __post_init__(self):
        if not 0 < self.discount <= 1:
            raise ValueError("discount must lie in (0, 1]")
        if self.clip_epsilon <= 0:
            raise ValueError("clip epsilon must be positive")
        if self.old_update_interval < 1:
            raise ValueError("old-actor interval must be >= 1")


@dataclass
class TrajectoryBuffer:
    observations: list = dc_field(default_factory=list)
    selections: list = dc_field(default_factory=list)   # ranked non-sink ids
    candidates: list = dc_field(default_factory=list)   # bool masks
    rewards: list = dc_field(default_factory=list)
    values: list = dc_field(default_factory=list)
    dones: list = dc_field(default_factory=list)
    behaviour_log_probs: list = dc_field(default_factory=list)

    def __len__(self):
        return len(self.rewards)

    def clear(self):
        for name in ("observations", "selections", "candidates", "rewards",
                     "values", "dones", "behaviour_log_probs"):
            getattr(self, name).clear()


class SoftPpoAgent:
    def __init__(self, obs_dim: int, node_count: int, config: AgentConfig):
        torch.manual_seed(config.seed)
        self.config = config
        self.node_count = node_count
        self.obs_dim = obs_dim
        self.feature = FeatureNet(obs_dim, config.hidden_size,
                                  recurrent=config.recurrent)
        self.actor = ActorHead(config.hidden_size, node_count,
                               softmax_control=config.softmax_control)
        self.critic = CriticHead(config.hidden_size)
        self.old_actor = copy.deepcopy(self.actor)
        self.optimizer = torch.optim.Adam(
            list(self.feature.parameters())
            + list(self.actor.parameters())
            + list(self.critic.parameters()),
            lr=config.learning_rate,
        )
        self._hidden = None
        self._updates = 0
        self.obs_scale: np.ndarray | None = None

    # -- acting -----------------------------------------------------------

    def begin_episode(self, first_obs: np.ndarray | None = None):
        self._hidden = self.feature.initial_state()
        if first_obs is not None and self.obs_scale is None:
            # raw energies and distances span orders of magnitude; scale by
            # the initial observation so the embedding stays unsaturated
            obs = np.asarray(first_obs, dtype=np.float64)
            scale = np.ones_like(obs)
            scale[0::2] = max(float(obs[0::2].max()), 1e-9)
            scale[1::2] = max(float(obs[1::2].max()), 1e-9)
            self.obs_scale = scale

    def normalize(self, obs: np.ndarray) -> np.ndarray:
        if self.obs_scale is None:
            return np.asarray(obs, dtype=np.float64)
        return np.asarray(obs, dtype=np.float64) / self.obs_scale

    def act(self, obs: np.ndarray) -> tuple[np.ndarray, float]:
        """Scores for one observation plus the critic's value estimate."""
        with torch.no_grad():
            x = torch.as_tensor(self.normalize(obs),
                                dtype=torch.float32).unsqueeze(0)
            features, self._hidden = self.feature(x, self._hidden)
            scores = self.actor(features)[0]
            value = self.critic(features)[0]
        return scores.numpy(), float(value)

    def record(self, buffer: TrajectoryBuffer, obs, info_selection, reward,
               value, done):
        obs = self.normalize(obs)
        _e, _d, alive, sink = parse_observation(obs, self.node_count)
        candidates = alive.copy()
        if sink >= 0:
            candidates[sink] = False
        ranked = [i for i in info_selection if i != sink]
        buffer.observations.append(np.asarray(obs, dtype=np.float32))
        buffer.selections.append(ranked)
        buffer.candidates.append(candidates)
        buffer.rewards.append(float(reward))
        buffer.values.append(float(value))
        buffer.dones.append(bool(done))

    # -- learning ---------------------------------------------------------

    def compute_advantages(self, buffer: TrajectoryBuffer,
                           bootstrap_value: float = 0.0):
        cfg = self.config
        n = len(buffer)
        advantages = np.zeros(n)
        running = 0.0
        next_value = bootstrap_value
        for t in reversed(range(n)):
            not_done = 0.0 if buffer.dones[t] else 1.0
            delta = (buffer.rewards[t] + cfg.discount * next_value * not_done
                     - buffer.values[t])
            running = delta + cfg.discount * cfg.gae_lambda * not_done * running
            advantages[t] = running
            next_value = buffer.values[t]
        returns = advantages + np.asarray(buffer.values)
        return advantages, returns

    def _sequence_log_probs(self, actor, buffer: TrajectoryBuffer):
        obs = torch.as_tensor(np.stack(buffer.observations))
        features, _ = self.feature(obs, self.feature.initial_state())
        scores = actor(features)
        log_probs = []
        entropies = []
        for t in range(len(buffer)):
            cand = torch.as_tensor(buffer.candidates[t])
            log_probs.append(selection_log_prob(
                scores[t], buffer.selections[t], cand, self.config.temperature))
            entropies.append(selection_entropy(
                scores[t], cand, self.config.temperature))
        return torch.stack(log_probs), torch.stack(entropies)

    def update(self, buffer: TrajectoryBuffer,
               bootstrap_value: float = 0.0) -> dict:
        """One training update over a finished episode; returns statistics."""
        cfg = self.config
        advantages, returns = self.compute_advantages(buffer, bootstrap_value)
        adv = torch.as_tensor(advantages, dtype=torch.float32)
        if adv.numel() > 1 and adv.std() > 0:
            adv = (adv - adv.mean()) / (adv.std() + 1e-8)
        ret = torch.as_tensor(returns, dtype=torch.float32)

        stats = {"ratio_mean": 0.0, "clip_fraction": 0.0,
                 "actor_loss": 0.0, "critic_loss": 0.0, "entropy": 0.0}
        for _epoch in range(cfg.update_epochs):
            with torch.no_grad():
                old_log_probs, _ = self._sequence_log_probs(self.old_actor, buffer)
            new_log_probs, entropies = self._sequence_log_probs(self.actor, buffer)
            ratio = torch.exp(new_log_probs - old_log_probs)
            clipped = torch.clamp(ratio, 1 - cfg.clip_epsilon, 1 + cfg.clip_epsilon)
            surrogate = torch.min(ratio * adv, clipped * adv)
            actor_loss = -surrogate.mean() - cfg.entropy_coef * entropies.mean()

            obs = torch.as_tensor(np.stack(buffer.observations))
            features, _ = self.feature(obs, self.feature.initial_state())
            values = self.critic(features)
            critic_loss = torch.nn.functional.mse_loss(values, ret)

            loss = actor_loss + cfg.value_coef * critic_loss
            if not torch.isfinite(loss):
                raise FloatingPointError(
                    f"non-finite loss: actor {actor_loss}, critic {critic_loss}")
            self.optimizer.zero_grad()
            loss.backward()
            self.optimizer.step()

            self._updates += 1
            if self._updates % cfg.old_update_interval == 0:
                self.old_actor.load_state_dict(self.actor.state_dict())

            with torch.no_grad():
                stats["ratio_mean"] = float(ratio.mean())
                stats["clip_fraction"] = float(
                    ((ratio < 1 - cfg.clip_epsilon)
                     | (ratio > 1 + cfg.clip_epsilon)).float().mean())
                stats["actor_loss"] = float(actor_loss)
                stats["critic_loss"] = float(critic_loss)
                stats["entropy"] = float(entropies.mean())
        return stats

    # -- persistence ------------------------------------------------------

    def state_dict(self) -> dict:
        return {
            "feature": self.feature.state_dict(),
            "actor": self.actor.state_dict(),
            "critic": self.critic.state_dict(),
            "old_actor": self.old_actor.state_dict(),
            "optimizer": self.optimizer.state_dict(),
        }

    def load_state_dict(self, state: dict) -> None:
        self.feature.load_state_dict(state["feature"])
        self.actor.load_state_dict(state["actor"])
        self.critic.load_state_dict(state["critic"])
        self.old_actor.load_state_dict(state["old_actor"])
        self.optimizer.load_state_dict(state["optimizer"])
