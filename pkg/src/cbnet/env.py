"""Beamforming node selection exposed as a reset/step environment.

One step: clamp the submitted score vector, sample the beamforming group
(softmax over alive non-sink scores, without replacement), run the
synchronize-and-uplink phase for the packet aggregated last round, then the
next full routing round to produce the following observation. Reward trades
delivered bits against the network-wide energy drop.

A newline-delimited JSON protocol serves the environment to external
trainers over stdio or TCP; floats travel with 17 significant digits so
replays are byte-identical.
"""
from __future__ import annotations

import json
import socket
import sys

import numpy as np

from .baselines import leach_round, pegasis_round
from .config import NetworkConfig
from .energy import EnergyLedger
from .lifecycle import (
    cb_phase,
    observation_size,
    observe,
    scripted_policy,
    select_cb_group,
    select_sink,
)
from .netmodel import generate_field
from .omrp import run_round


class EnvProtocolError(Exception):
    """Client-side misuse (bad frame, step after done); state is unchanged."""


class CbEnv:
    """The node-selection decision process over the round simulator."""

    def __init__(self, config: NetworkConfig, routing: str = "omrp",
                 sample_actions: bool = True):
        if routing not in ("omrp", "leach", "pegasis"):
            raise ValueError(f"unknown routing {routing!r}")
        self.config = config
        self.routing = routing
        self.sample_actions = sample_actions
        self.field = None
        self.ledger = None
        self.done = True
        self.round_index = 0
        self.sink = None
        self.pending_bits = 0.0
        self._initial_energy_vec = None
        self._prev_energy = None

    # -- episode control ----------------------------------------------------

    def reset(self, seed: int = 0) -> np.ndarray:
        """Fresh field from the seed, plus the first routing round."""
        self.field, _ = generate_field(self.config, seed)
        self.ledger = EnergyLedger(self.field)
        self._election_rng = np.random.default_rng(np.random.SeedSequence([seed, 1]))
        self._select_rng = np.random.default_rng(np.random.SeedSequence([seed, 2]))
        self._sink_rng = np.random.default_rng(np.random.SeedSequence([seed, 3]))
        self._phase_rng = np.random.default_rng(np.random.SeedSequence([seed, 4]))
        self.round_index = 0
        self.done = False
        self._initial_energy_vec = self.field.residual.copy()
        self._route_round()
        self._prev_energy = self._initial_energy_vec
        obs = observe(self.field, self.sink)
        self._check_done()
        return obs

    def _route_round(self) -> None:
        self.sink = select_sink(self.field, self.config.sink_policy,
                                self._sink_rng, self.config.fixed_sink_id)
        if self.sink is None:
            self.pending_bits = 0.0
            self.done = True
            return
        if self.routing == "omrp":
            _, out = run_round(self.field, self.sink, self.config,
                               self._election_rng, self.ledger, self.round_index)
        elif self.routing == "leach":
            _, out = leach_round(self.field, self.sink, self.config,
                                 self._election_rng, self.ledger, self.round_index)
        else:
            _, out = pegasis_round(self.field, self.sink, self.config,
                                   self.ledger, self.round_index)
        self.round_index += 1
        self.pending_bits = out.sink_packet_bits if out.sink_alive else 0.0
        if not out.sink_alive:
            self.sink = None

    def _check_done(self) -> None:
        alive = int(self.field.alive.sum())
        if (self.sink is None or alive < self.config.cb_node_count
                or not self.field.alive.any()):
            self.done = True

    def step(self, action) -> tuple[np.ndarray, float, bool, dict]:
        if self.done or self.field is None:
            raise EnvProtocolError("episode is done; reset first")
        action = np.asarray(action, dtype=float)
        if action.shape != (self.field.n,):
            raise EnvProtocolError(
                f"action must have length {self.field.n}, got {action.shape}")
        if not np.isfinite(action).all():
            raise EnvProtocolError("action contains non-finite values")

        selection = select_cb_group(
            action, self.field, self.sink, self.config,
            rng=self._select_rng,
            deterministic=not self.sample_actions,
        )
        delivered = 0.0
        if selection is not None:
            delivered, _budget = cb_phase(
                self.field, self.config, self.ledger, self.sink,
                self.pending_bits, selection, self._phase_rng,
            )
        round_of_report = self.round_index
        self._route_round()
        if self.sink is not None:
            obs = observe(self.field, self.sink)
        else:
            obs = observe(self.field, 0)
        energy_now = self.field.residual.copy()
        reward = (self.config.throughput_weight * delivered
                  - self.config.energy_weight
                  * float((self._prev_energy - energy_now).sum()))
        self._prev_energy = energy_now
        self._check_done()
        info = {
            "delivered_bits": delivered,
            "selection": selection if selection is not None else [],
            "alive": int(self.field.alive.sum()),
            "round": round_of_report,
        }
        return obs, reward, self.done, info


# -- wire protocol -----------------------------------------------------------


def _format_float(x: float) -> str:
    if x != x or x in (float("inf"), float("-inf")):
        raise ValueError("non-finite float in frame")
    return format(x, ".17g")


def _encode(value) -> str:
    """JSON with floats at 17 significant digits (ints stay ints)."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return "null"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _format_float(float(value))
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        items = (f"{json.dumps(str(k))}:{_encode(v)}" for k, v in value.items())
        return "{" + ",".join(items) + "}"
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ",".join(_encode(v) for v in value) + "]"
    raise TypeError(f"cannot encode {type(value)!r}")


def encode_frame(frame: dict) -> bytes:
    return (_encode(frame) + "\n").encode("utf-8")


class EnvServer:
    """Serves one client session of newline-delimited JSON frames.

    Commands: hello, reset {seed}, step {action}, close. Malformed frames
    are answered with an error frame and leave the simulator untouched.
    """

    def __init__(self, config: NetworkConfig, routing: str = "omrp",
                 sample_actions: bool = True):
        self.env = CbEnv(config, routing, sample_actions=sample_actions)

    def handle_line(self, line: str) -> tuple[bytes, bool]:
        """Process one frame; returns (reply bytes, keep_going)."""
        try:
            frame = json.loads(line)
            if not isinstance(frame, dict) or "cmd" not in frame:
                raise EnvProtocolError("frame must be an object with 'cmd'")
            cmd = frame["cmd"]
            if cmd == "hello":
                return encode_frame({
                    "n": self.env.config.node_count,
                    "obs_dim": observation_size(self.env.config),
                    "n_cb": self.env.config.cb_node_count,
                }), True
            if cmd == "reset":
                seed = frame.get("seed", self.env.config.master_seed)
                if not isinstance(seed, int) or seed < 0:
                    raise EnvProtocolError("seed must be a non-negative integer")
                obs = self.env.reset(seed)
                return encode_frame({"obs": obs.tolist()}), True
            if cmd == "step":
                if "action" not in frame or not isinstance(frame["action"], list):
                    raise EnvProtocolError("step needs an 'action' array")
                obs, reward, done, info = self.env.step(frame["action"])
                return encode_frame({
                    "obs": obs.tolist(),
                    "reward": reward,
                    "done": done,
                    "info": info,
                }), True
            if cmd == "close":
                return encode_frame({"ok": True}), False
            raise EnvProtocolError(f"unknown command {cmd!r}")
        except EnvProtocolError as exc:
            return encode_frame({"error": str(exc)}), True
        except (json.JSONDecodeError, TypeError, ValueError) as exc:
            return encode_frame({"error": f"malformed frame: {exc}"}), True

    def serve_stream(self, reader, writer) -> None:
        for raw in reader:
            line = raw.decode("utf-8") if isinstance(raw, bytes) else raw
            line = line.strip()
            if not line:
                continue
            reply, keep_going = self.handle_line(line)
            writer.write(reply)
            writer.flush()
            if not keep_going:
                break

    def serve_stdio(self) -> None:
        self.serve_stream(sys.stdin.buffer, sys.stdout.buffer)

    def serve_tcp(self, host: str, port: int, announce=None) -> None:
        with socket.create_server((host, port)) as server:
            if announce is not None:
                announce(server.getsockname())
            conn, _addr = server.accept()
            with conn, conn.makefile("rb") as reader, conn.makefile("wb") as writer:
                self.serve_stream(reader, writer)
