# %% [markdown]
# # Monte Carlo calibration
#
# Critical values are order statistics of simulated max-norms `|L Z|_inf`.
# Draws come from counter-based Philox streams in blocks of 256, so they do
# not depend on how many threads produce them.

# %%
import numpy as np
from scipy import stats

from hdmeans import RngSpec, draw_max_norms, empirical_pvalue, psd_factorize, quantile
from hdmeans.montecarlo import MonteCarloQuantileEstimate

est = MonteCarloQuantileEstimate(np.array([4.0, 1.0, 3.0, 2.0]), 1)
print(quantile(est, 0.25), quantile(est, 0.5), empirical_pvalue(est, 2.5))

# %% [markdown]
# For a single coordinate the critical value approaches the two-sided
# normal quantile 1.96.

# %%
for M in (1_000, 10_000, 100_000):
    cv = quantile(draw_max_norms(np.ones((1, 1)), M, rng=RngSpec(7)), 0.05)
    print(M, round(cv, 4), round(stats.norm.ppf(0.975), 4))

# %% [markdown]
# Rank-deficient matrices are fine: perfectly correlated coordinates act as
# one coordinate.

# %%
ones = psd_factorize(np.ones((3, 3)))
print(ones.method, ones.clipped_count)
a = draw_max_norms(ones, 2000, None, RngSpec(1)).draws
b = draw_max_norms(ones, 2000, [0], RngSpec(1)).draws
print(np.max(np.abs(a - b)))

# %% [markdown]
# The same stream gives identical draws with 1 or 8 threads.

# %%
g = np.random.default_rng(0).normal(size=(100, 100))
f = psd_factorize(g @ g.T)
d1 = draw_max_norms(f, 5000, None, RngSpec(3), workers=1).draws
d8 = draw_max_norms(f, 5000, None, RngSpec(3), workers=8).draws
print(d1.tobytes() == d8.tobytes())
