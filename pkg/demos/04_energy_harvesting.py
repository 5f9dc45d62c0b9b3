"""Save-and-transmit under a harvested-energy budget.

Run: python3 demos/04_energy_harvesting.py
"""
# %%
import numpy as np

from ehpolar.channel import bsc
from ehpolar.construction import build_code
from ehpolar.eh import EnergyProcess, feasibility, outage_bound, save_and_transmit_run, saving_length
from ehpolar.harness import iid_outage_rate, simulate_eh, simulate_plain

proc = EnergyProcess.bernoulli(2.0, 0.25)
print(f"arrivals: 2 units w.p. 0.25; P = {proc.mean}, E[E^2] = {proc.second_moment}, a = {proc.a:.4f}")

# %% [markdown]
# The saving phase stays silent for m slots so the battery can absorb the
# fluctuations of the codeword's energy demand.

# %%
for n in (256, 1024, 4096):
    m = saving_length(n, proc.mean, proc.a)
    print(f"n={n:5d} feasible={feasibility(n, proc.mean, proc.a)} m={m:5d} "
          f"m/n={m / n:.2f} outage bound={outage_bound(m, n, proc.mean, proc.a):.2e}")

# %%
rng = np.random.default_rng(0)
x = rng.integers(0, 2, 12)
sent, trace, zeroed = save_and_transmit_run(x, 3, proc.sample(15, rng))
print("\nshort run with m=3:")
print(trace.to_csv())
print("zeroed slots:", sorted(zeroed))

# %%
n = 1024
for m in (0, 200, 400, saving_length(n, proc.mean, proc.a)):
    ev, tr = iid_outage_rate(proc, n, m, proc.mean, 20_000, seed=1)
    print(f"m={m:5d}: empirical outage {ev / tr:.4f}")

# %% [markdown]
# A polar code inside save-and-transmit: the EH error rate stays within the
# plain rate plus the outage rate.

# %%
spec = build_code(bsc(0.05), proc.mean, 8, policy="budget", budget=0.02, backend="binned")
m = saving_length(spec.n, proc.mean, proc.a)
plain = simulate_plain(spec, 4000, seed=3)
eh = simulate_eh(spec, proc, m, 4000, seed=3)
print(f"\nn={spec.n}, m={m}: plain {plain.error_rate:.4f}, EH {eh.error_rate:.4f}, outage {eh.outage_rate:.4f}")
