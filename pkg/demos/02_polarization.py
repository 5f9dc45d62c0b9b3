"""Watching synthesized channels polarize.

Run: python3 demos/02_polarization.py
"""
# %%
import numpy as np

from ehpolar.channel import bec, single_output, symmetrize, z_channel
from ehpolar.construction import build_tables, evolve_bec, evolve_exact, select_information_set

# %% [markdown]
# On an erasure channel the Bhattacharyya parameters follow z -> (2z - z^2, z^2).

# %%
print("BEC(0.5), k=2:", evolve_bec(0.5, 2))
exact = evolve_exact(symmetrize(bec(0.5), 0.5), 2)[1]
print("exact evolution of the symmetrized channel:", exact)

# %%
for k in (6, 10, 14):
    z = evolve_bec(0.5, k)
    good = np.mean(z < 1e-3)
    bad = np.mean(z > 1 - 1e-3)
    print(f"n={1 << k:6d}: {good:.3f} nearly noiseless, {bad:.3f} nearly useless, rest {1 - good - bad:.3f}")

# %% [markdown]
# With a biased input the source itself polarizes too. Bits whose source
# parameter stays near 1 are close to uniform and may carry data.

# %%
zs = evolve_exact(symmetrize(single_output(), 0.4), 6)[1]
print("\nsource side, p1=0.4, n=64: fraction with Z >= 0.99:", np.mean(zs >= 0.99))

zt = build_tables(z_channel(0.5), 0.4, 8, "binned")
info = select_information_set(zt, nu=1.0)
print(f"Z-channel code at n=256 (relaxed threshold n^-1): |I| = {len(info)}")
