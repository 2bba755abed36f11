"""Radio energy model walkthrough: per-bit costs, the free-space/multipath
crossover, and what a packet costs at typical hop lengths."""
import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from cbnet import NetworkConfig, rx_energy, tx_energy

cfg = NetworkConfig()
d0 = cfg.crossover_distance
print(f"crossover distance d0 = {d0:.3f} m")
print(f"tx 10 kbit @ 50 m   = {tx_energy(10000, 50, cfg):.3e} J (free space)")
print(f"tx 10 kbit @ 100 m  = {tx_energy(10000, 100, cfg):.3e} J (multipath)")
print(f"rx 10 kbit          = {rx_energy(10000, cfg):.3e} J")

distances = np.linspace(1, 250, 500)
costs = [tx_energy(10000, d, cfg) for d in distances]

fig, ax = plt.subplots(figsize=(7, 4))
ax.semilogy(distances, costs, label="tx energy, 10 kbit packet")
ax.axvline(d0, color="grey", ls="--", label=f"crossover {d0:.1f} m")
ax.axhline(rx_energy(10000, cfg), color="tab:orange", ls=":",
           label="rx energy (distance-free)")
ax.set_xlabel("distance (m)")
ax.set_ylabel("energy (J)")
ax.set_title("First-order radio model")
ax.legend()
fig.tight_layout()
fig.savefig("radio_energy_model.png", dpi=120)
print("wrote radio_energy_model.png")
