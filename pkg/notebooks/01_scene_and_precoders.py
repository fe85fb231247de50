# %% [markdown]
# # One network snapshot, two precoders
#
# Draw a Poisson network, look at the typical user's neighbourhood, then build both
# zero-forcing precoders at the serving BS and see what each one nulls.

# %%
import numpy as np

from ceazf.channel import CsiSpec, PilotConfig, build_channel_set
from ceazf.geometry import Window, build_typical_context, default_window_radius, sample_network
from ceazf.precoding import ExtendedChannelMatrix, cea_zf, ceu_zf

lam, K, N, alpha = 1e-6, 10, 64, 4.0
rng = np.random.default_rng(2024)
net = sample_network(lam, Window(default_window_radius(lam)), rng)
ctx = build_typical_context(net, K, rng)
print(f"{len(net.bs_positions)} BSs in the window")
print(f"serving BS at {ctx.t:.0f} m, second nearest at {ctx.s:.0f} m")
print(f"the serving BS is second nearest for K' = {ctx.kprime(0)} users of other cells")

# %% [markdown]
# Channels for the serving cell and its neighbour users, with perfect CSI.

# %%
served, nbrs = ctx.served(0), ctx.neighbors(0)
chans = build_channel_set(ctx, {0: np.concatenate([served, nbrs])}, N, alpha, CsiSpec("perfect", PilotConfig()), rng)
H_s = chans.estimated_matrix(0, served)
H_n = chans.estimated_matrix(0, nbrs)

ceu = ceu_zf(H_s)
cea = cea_zf(ExtendedChannelMatrix.stack(H_s, H_n))
for name, p in (("CEU-ZF", ceu), ("CEA-ZF", cea)):
    leak = np.abs(H_n @ p.columns) ** 2
    print(f"{name}: power {p.power:.12f}, per-stream gain {1 / np.sqrt(p.zeta):.3e}, "
          f"largest power leaked to a neighbour user {leak.max():.2e}")

# %% [markdown]
# CEA-ZF spends K' extra dimensions, so its per-stream gain is a little lower, but
# the neighbour users see essentially no power from this BS.
