"""Client for the node-selection environment's newline-delimited JSON
protocol, over a spawned subprocess (stdio) or a TCP socket."""
from __future__ import annotations

import json
import shlex
import socket
import subprocess

import numpy as np


class EnvConnectionError(RuntimeError):
    """The environment went away mid-session."""


class EnvClient:
    def __init__(self, command: str | None = None, address: str | None = None):
        if (command is None) == (address is None):
            raise ValueError("give either a server command or a TCP address")
        self._proc = None
        self._sock = None
        if command is not None:
            self._proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            )
            self._reader = self._proc.stdout
            self._writer = self._proc.stdin
        else:
            host, port = address.rsplit(":", 1)
            self._sock = socket.create_connection((host, int(port)))
            self._reader = self._sock.makefile("rb")
            self._writer = self._sock.makefile("wb")
        self.node_count, self.obs_dim, self.cb_nodes = self._hello()

    def _exchange(self, frame: dict) -> dict:
        try:
            self._writer.write((json.dumps(frame) + "\n").encode("utf-8"))
            self._writer.flush()
            line = self._reader.readline()
        except (BrokenPipeError, OSError) as exc:
            raise EnvConnectionError(str(exc)) from exc
        if not line:
            raise EnvConnectionError("environment closed the stream")
        reply = json.loads(line)
        if "error" in reply:
            raise RuntimeError(f"environment error: {reply['error']}")
        return reply

    def _hello(self) -> tuple[int, int, int]:
        reply = self._exchange({"cmd": "hello"})
        return reply["n"], reply["obs_dim"], reply["n_cb"]

    def reset(self, seed: int) -> np.ndarray:
        return np.asarray(self._exchange({"cmd": "reset", "seed": seed})["obs"])

    def step(self, action: np.ndarray) -> tuple[np.ndarray, float, bool, dict]:
        reply = self._exchange({
            "cmd": "step",
            "action": [float(a) for a in action],
        })
        return (np.asarray(reply["obs"]), float(reply["reward"]),
                bool(reply["done"]), reply["info"])

    def close(self) -> None:
        try:
            if self._writer and not self._writer.closed:
                self._exchange({"cmd": "close"})
        except (EnvConnectionError, RuntimeError):
            pass
        if self._proc is not None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)
        if self._sock is not None:
            self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
