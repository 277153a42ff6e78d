# %% [markdown]
# # One-dimensional periodic profiles
#
# A profile is a set of boundary points on a circle of length L. The occupied
# set is [k0, k1) U [k2, k3) U ... and its energy density splits into one
# contribution r per boundary point. Here we check that split, look for
# minimisers, and probe that no random profile beats the stripe minimum.

# %%
import numpy as np

from stripes import make_params
from stripes.analytic import lambda_value
from stripes.profiles import (
    brute_force_min,
    constrained_local_search,
    equal_stripes,
    profile_energy,
    random_profile,
    rp_probe,
    stimax_lower_bound,
)

prm = make_params(2, 4, 0.05)
lam = lambda_value(prm, 0.3)
print(f"h* = {lam.h_star:.5f}, Lambda = {lam.lam:.8f}")

# %% [markdown]
# Two periods of optimal stripes reproduce Lambda, and the per-boundary values add
# up to L times the total, which is computed by a separate pair formula.

# %%
L = 4 * lam.h_star
prof = equal_stripes(2, 0.3, L)
br = profile_energy(prm, prof)
print("boundaries", np.round(prof.boundaries, 4))
print("density", br.total_density, " sum r / L", sum(br.per_boundary_r) / L)

# %% [markdown]
# A random profile has uneven r values. The lower bound on each r depends only
# on the gap to the neighbouring boundary.

# %%
rng = np.random.default_rng(3)
rp = random_profile(rng, 10.0, 0.4, 3)
br = profile_energy(prm, rp)
bound = stimax_lower_bound(prm, rp)
for x, r, b in zip(rp.boundaries, br.per_boundary_r, bound):
    print(f"x={x:7.4f}  r={r:9.5f}  bound={b:9.5f}")

# %% [markdown]
# Projected gradient descent at fixed volume, started from that random profile.
# It merges boundaries that collide and typically ends on equal stripes. The
# density stays above Lambda because L = 10 does not hold a whole number of
# optimal periods.

# %%
res = constrained_local_search(prm, rp)
print(f"converged={res.converged} iterations={res.iterations} merges={res.merges}")
print("final boundaries", np.round(res.profile.boundaries, 4))
print(f"density {res.energy_density:.8f} vs Lambda {lambda_value(prm, 0.4).lam:.8f}")

# %% [markdown]
# Exhaustive search over two-pair profiles on a grid of boundary positions. The
# best one is a single stripe period repeated.

# %%
best = brute_force_min(prm, 2, 0.3, L, 100)
print(best)

# %% [markdown]
# Random profiles against Lambda at their density. A violation would be a
# profile with energy below the stripe minimum.

# %%
rep = rp_probe(prm, 200, 6, 0.3, (1.0, 20.0), rng_seed=1)
print(f"{len(rep.violations)} violations, smallest margin {rep.min_margin:.3e}")
