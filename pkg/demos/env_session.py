"""Drive the node-selection environment through its wire protocol, the same
way an external trainer would: spawn the server, exchange NDJSON frames."""
import json
import subprocess
import sys

import numpy as np

from cbnet.lifecycle import scripted_policy


def talk(proc, frame: dict) -> dict:
    proc.stdin.write((json.dumps(frame) + "\n").encode())
    proc.stdin.flush()
    return json.loads(proc.stdout.readline())


server = subprocess.Popen(
    [sys.executable, "-m", "cbnet", "serve",
     "--n", "60", "--mc", "1000", "--e0", "3.0"],
    stdin=subprocess.PIPE, stdout=subprocess.PIPE,
)

hello = talk(server, {"cmd": "hello"})
print("server:", hello)
obs = talk(server, {"cmd": "reset", "seed": 5})["obs"]

total_reward = 0.0
for step in range(8):
    scores = scripted_policy("distance_greedy", np.array(obs), seed=0)
    reply = talk(server, {"cmd": "step", "action": scores.tolist()})
    total_reward += reply["reward"]
    info = reply["info"]
    print(f"step {step}: reward {reply['reward']:+.3f} "
          f"delivered {info['delivered_bits']:.0f} bits "
          f"alive {info['alive']} selection {info['selection']}")
    obs = reply["obs"]
    if reply["done"]:
        break

talk(server, {"cmd": "close"})
server.wait(timeout=10)
print(f"episode reward over {step + 1} steps: {total_reward:+.3f}")
