"""How fast the rate gap closes with blocklength.

Run: python3 demos/05_scaling.py
"""
# %%
from ehpolar.channel import bec
from ehpolar.eh import EnergyProcess
from ehpolar.harness import fit_exponent, scaling_sweep, sweep_csv

# %%
pts = scaling_sweep(bec(0.5), 0.5, range(8, 15), policy="threshold", backend="exact")
print(sweep_csv(pts))
mu, t, r2 = fit_exponent(pts)
print(f"fitted gap ~ {t:.3f} * N^(-1/{mu:.3f})   R^2 = {r2:.4f}")

# %% [markdown]
# With energy harvesting the saving prefix lengthens the block to N = m + n.
# It costs rate at short lengths but vanishes relative to n.

# %%
proc = EnergyProcess.bernoulli(2.0, 0.25)
eh_pts = scaling_sweep(bec(0.5), 0.5, range(8, 15), policy="threshold", eh=proc, backend="exact")
for p in eh_pts:
    print(f"n={p.n:6d} m={p.m:5d} N={p.N:6d} rate={p.rate:.4f} gap={p.gap:.4f}")
mu, t, r2 = fit_exponent(eh_pts)
print(f"EH fit: mu = {mu:.3f}, R^2 = {r2:.4f}")
