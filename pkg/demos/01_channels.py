"""Channels, input distributions, and the symmetrized channel.

Run: python3 demos/01_channels.py
"""
# %%
from ehpolar.channel import (
    bec, bhattacharyya, bsc, capacity, capacity_cost, joint_distribution,
    mutual_information, symmetrize, z_channel,
)

# %% [markdown]
# A Z-channel never corrupts a 0 and reads a 1 as 0 half the time.
# Its capacity-achieving input is biased towards 0.

# %%
z = z_channel(0.5)
C, p_star = capacity(z)
print(f"Z-channel: C = {C:.6f} bits at Pr{{X=1}} = {p_star:.4f}")

for P in (0.1, 0.25, 0.4, 0.5):
    print(f"  mean-input constraint P={P:.2f}: C(q;P) = {capacity_cost(z, P):.6f}")

# %% [markdown]
# Symmetrizing folds the input distribution into the channel. The result is a
# symmetric channel over outputs (b, y) whose polarization statistics match
# the asymmetric pair.

# %%
sym = symmetrize(z, 0.4)
print("\nsymmetrized outputs:", sym.outputs)
print(sym.w)
print("Z of the pair            :", bhattacharyya(joint_distribution(z, 0.4)))
print("Z of the symmetric channel:", bhattacharyya(joint_distribution(sym, 0.5)))
print("I_uniform(symmetrized)    :", round(mutual_information(sym, 0.5), 6))

# %%
for ch, name in ((bsc(0.11), "BSC(0.11)"), (bec(0.3), "BEC(0.3)")):
    C, p = capacity(ch)
    print(f"{name}: C = {C:.5f} at p1 = {p:.3f}")
