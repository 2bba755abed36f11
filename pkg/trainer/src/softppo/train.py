"""Training loop against a running environment server, with evaluation,
checkpointing, learning curves, and the ablation harness."""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np
import torch

from .agent import AgentConfig, SoftPpoAgent, TrajectoryBuffer
from .client import EnvClient, EnvConnectionError

CHECKPOINT_FORMAT = "softppo-checkpoint-v1"


def run_episode(client: EnvClient, agent: SoftPpoAgent, steps: int,
                seed: int, buffer: TrajectoryBuffer | None = None) -> dict:
    """One episode (training when a buffer is given, evaluation otherwise)."""
    obs = client.reset(seed)
    agent.begin_episode(obs)
    total_reward = 0.0
    delivered = 0.0
    bootstrap = 0.0
    rounds = 0
    for _step in range(steps):
        scores, value = agent.act(obs)
        next_obs, reward, done, info = client.step(scores)
        if buffer is not None:
            agent.record(buffer, obs, info["selection"], reward, value, done)
        total_reward += reward
        delivered += info["delivered_bits"]
        rounds = info["round"]
        obs = next_obs
        if done:
            bootstrap = 0.0
            break
    else:
        _scores, bootstrap = agent.act(obs)
    return {"reward": total_reward, "delivered": delivered,
            "rounds": rounds, "bootstrap": bootstrap}


def random_policy_episode(client: EnvClient, steps: int, seed: int,
                          rng: np.random.Generator) -> dict:
    obs = client.reset(seed)
    total_reward = 0.0
    delivered = 0.0
    for _step in range(steps):
        obs, reward, done, info = client.step(rng.random(client.node_count))
        total_reward += reward
        delivered += info["delivered_bits"]
        if done:
            break
    return {"reward": total_reward, "delivered": delivered}


def save_checkpoint(path: Path, agent: SoftPpoAgent, episode: int) -> None:
    torch.save({
        "format": CHECKPOINT_FORMAT,
        "agent_config": dataclasses.asdict(agent.config),
        "obs_dim": agent.obs_dim,
        "node_count": agent.node_count,
        "episode": episode,
        "state": agent.state_dict(),
    }, path)


def load_checkpoint(path: Path) -> tuple[SoftPpoAgent, int]:
    blob = torch.load(path, weights_only=False)
    if blob.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path} is not a {CHECKPOINT_FORMAT} file")
    agent = SoftPpoAgent(blob["obs_dim"], blob["node_count"],
                         AgentConfig(**blob["agent_config"]))
    agent.load_state_dict(blob["state"])
    return agent, blob["episode"]


def train(client: EnvClient, config: AgentConfig, out_dir: Path,
          env_seed: int = 0, log=print) -> dict:
    """Train for the configured number of episodes; write the reward curve
    (CSV and PNG), checkpoints, and return the per-episode history. On a
    lost connection the latest state is checkpointed before returning."""
    out_dir.mkdir(parents=True, exist_ok=True)
    agent = SoftPpoAgent(client.obs_dim, client.node_count, config)
    history = {"episode": [], "reward": [], "delivered": [], "rounds": [],
               "ratio_mean": [], "clip_fraction": [], "entropy": []}
    buffer = TrajectoryBuffer()
    start = time.time()
    try:
        for episode in range(config.episodes):
            buffer.clear()
            outcome = run_episode(client, agent, config.steps_per_episode,
                                  env_seed, buffer)
            stats = agent.update(buffer, outcome["bootstrap"])
            history["episode"].append(episode)
            history["reward"].append(outcome["reward"])
            history["delivered"].append(outcome["delivered"])
            history["rounds"].append(outcome["rounds"])
            history["ratio_mean"].append(stats["ratio_mean"])
            history["clip_fraction"].append(stats["clip_fraction"])
            history["entropy"].append(stats["entropy"])
            if (episode + 1) % 50 == 0 or episode == config.episodes - 1:
                save_checkpoint(out_dir / "checkpoint.pt", agent, episode)
                log(f"episode {episode + 1}/{config.episodes} "
                    f"reward {outcome['reward']:.2f} "
                    f"delivered {outcome['delivered']:.3e} "
                    f"({time.time() - start:.0f}s)")
    except EnvConnectionError as exc:
        log(f"connection lost ({exc}); checkpointing and stopping")
        save_checkpoint(out_dir / "checkpoint.pt", agent,
                        len(history["episode"]))
    _write_curves(history, out_dir)
    history["agent"] = agent
    return history


def _write_curves(history: dict, out_dir: Path) -> None:
    columns = ["episode", "reward", "delivered", "rounds",
               "ratio_mean", "clip_fraction", "entropy"]
    with open(out_dir / "reward_curve.csv", "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in zip(*[history[c] for c in columns]):
            writer.writerow(row)
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        return
    if not history["episode"]:
        return
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    ax1.plot(history["episode"], history["reward"])
    ax1.set_xlabel("episode")
    ax1.set_ylabel("episode reward")
    ax2.plot(history["episode"], history["delivered"], color="tab:green")
    ax2.set_xlabel("episode")
    ax2.set_ylabel("delivered bits")
    fig.tight_layout()
    fig.savefig(out_dir / "reward_curve.png", dpi=120)
    plt.close(fig)


def run_ablations(make_client, config: AgentConfig, out_dir: Path,
                  env_seed: int = 0, log=print) -> dict:
    """Train the full agent and both ablations (no recurrence, no softmax
    smoothing) plus the plain variant, logging each curve side by side."""
    variants = {
        "softppo_lstm": {},
        "no_lstm": {"recurrent": False},
        "no_softmax": {"softmax_control": False},
        "plain_ppo": {"recurrent": False, "softmax_control": False},
    }
    summary = {}
    for name, overrides in variants.items():
        log(f"--- ablation variant: {name}")
        cfg = dataclasses.replace(config, **overrides)
        with make_client() as client:
            history = train(client, cfg, out_dir / name, env_seed, log=log)
        rewards = history["reward"]
        summary[name] = {
            "episodes": len(rewards),
            "mean_reward_last_decile": float(np.mean(
                rewards[-max(1, len(rewards) // 10):])),
            "total_delivered": float(np.sum(history["delivered"])),
        }
    with open(out_dir / "ablations.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="softppo-train",
        description="train the selection policy against an environment server")
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--env-cmd", help="command that serves stdio frames")
    group.add_argument("--connect", metavar="HOST:PORT", help="TCP endpoint")
    parser.add_argument("--out", default="runs/softppo")
    parser.add_argument("--env-seed", type=int, default=0)
    parser.add_argument("--ablations", action="store_true")
    defaults = AgentConfig()
    parser.add_argument("--episodes", type=int, default=defaults.episodes)
    parser.add_argument("--steps", type=int, default=defaults.steps_per_episode)
    parser.add_argument("--discount", type=float, default=defaults.discount)
    parser.add_argument("--lr", type=float, default=defaults.learning_rate)
    parser.add_argument("--clip", type=float, default=defaults.clip_epsilon)
    parser.add_argument("--old-interval", type=int,
                        default=defaults.old_update_interval)
    parser.add_argument("--hidden", type=int, default=defaults.hidden_size)
    parser.add_argument("--gae-lambda", type=float, default=defaults.gae_lambda)
    parser.add_argument("--entropy-coef", type=float,
                        default=defaults.entropy_coef)
    parser.add_argument("--temperature", type=float,
                        default=defaults.temperature)
    parser.add_argument("--seed", type=int, default=defaults.seed)
    parser.add_argument("--no-lstm", action="store_true")
    parser.add_argument("--no-softmax", action="store_true")
    args = parser.parse_args(argv)

    config = AgentConfig(
        discount=args.discount,
        learning_rate=args.lr,
        clip_epsilon=args.clip,
        old_update_interval=args.old_interval,
        episodes=args.episodes,
        steps_per_episode=args.steps,
        hidden_size=args.hidden,
        gae_lambda=args.gae_lambda,
        entropy_coef=args.entropy_coef,
        temperature=args.temperature,
        seed=args.seed,
        recurrent=not args.no_lstm,
        softmax_control=not args.no_softmax,
    )

    def make_client():
        if args.env_cmd:
            return EnvClient(command=args.env_cmd)
        return EnvClient(address=args.connect)

    out = Path(args.out)
    if args.ablations:
        summary = run_ablations(make_client, config, out, args.env_seed)
        print(json.dumps(summary, indent=2, sort_keys=True))
        return 0
    with make_client() as client:
        history = train(client, config, out, args.env_seed)
    print(f"trained {len(history['episode'])} episodes; "
          f"curves and checkpoint in {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
