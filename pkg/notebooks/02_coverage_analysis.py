# %% [markdown]
# # Coverage from the stochastic-geometry analysis
#
# The generalized-gamma model of R_k, the coverage integrals for both schemes, and
# the large-N asymptotes.

# %%
import numpy as np

from ceazf.analysis import (
    coverage_asymptotic,
    coverage_cea,
    coverage_ceu,
    crossover_antennas,
    genggamma_cdf,
    genggamma_fit,
)
from ceazf.presets import ks_distance, rk_samples

lam, alpha = 1e-6, 4.0
for K in (2, 10, 30, 50):
    p = genggamma_fit(K, lam, alpha)
    x = rk_samples(K, lam, alpha, 50_000, np.random.default_rng(K))
    print(f"K={K:2d}: mu={p.mu:8.3f} eta={p.eta:.4f}  KS={ks_distance(x, lambda v: genggamma_cdf(v, p)):.4f}")

# %% [markdown]
# Coverage versus threshold at N=100, K=10, perfect CSI.

# %%
for theta_db in (-10, -5, 0, 5, 10, 15):
    th = 10 ** (theta_db / 10)
    print(f"{theta_db:+3d} dB  CEU {coverage_ceu(th, 100, 10, lam, alpha):.4f}  CEA {coverage_cea(th, 100, 10, lam, alpha):.4f}")

# %% [markdown]
# The asymptotes: outage falls as 1/N for CEU-ZF and 1/N^2 for CEA-ZF, and CEA-ZF is
# ahead once N exceeds 2 theta K.

# %%
print("crossover at theta=1, K=10:", crossover_antennas(1.0, 10))
for N in (10, 20, 40, 200, 800):
    print(N, coverage_asymptotic(1.0, 10, N, "CEU"), coverage_asymptotic(1.0, 10, N, "CEA"))
