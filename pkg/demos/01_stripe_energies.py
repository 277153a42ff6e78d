# %% [markdown]
# # Periodic stripes: energy, optimal period and the minimal density
#
# The kernel is K_tau(z) = (|z|_1 + tau^(1/beta))^(-p) with beta = p - d - 1.
# A stripe state with half-period h and density alpha has an energy density in
# closed form up to a Hurwitz-type series. Here we tabulate it, locate the optimal
# half-period h* and look at Lambda(tau, alpha) = min_h F.

# %%
import math

import numpy as np

from stripes import make_params, phi
from stripes.analytic import StripeConfig, convexity_scan, lambda_value, optimal_period, stripe_energy

prm = make_params(2, 4, 0.0)
print(prm)

# %% [markdown]
# At d=2, p=4 and tau=0 everything is explicit. The equal-density optimum is
# Lambda = -3 / (16 ln 2).

# %%
s = lambda_value(prm, 0.5)
print("h*     ", s.h_star)
print("Lambda ", s.lam, " closed form ", -3 / (16 * math.log(2)))

# %% [markdown]
# The energy as a function of h has a single interior minimum.

# %%
for h in (0.5 * s.h_star, s.h_star, 2 * s.h_star):
    print(f"h = {h:.4f}  F = {stripe_energy(prm, StripeConfig(h, 0.5)):.8f}")

# %% [markdown]
# Turning on tau shrinks h* and lowers Lambda. The one-dimensional potential Phi
# (the second antiderivative of the integrated kernel) stays finite at 0.

# %%
for tau in (0.0, 0.01, 0.05, 0.1):
    p_ = make_params(2, 4, tau)
    s_ = lambda_value(p_, 0.3)
    print(f"tau={tau:<5} h*={s_.h_star:.5f}  Lambda={s_.lam:.6f}  Phi(0)={float(phi(p_, 0.0)) if tau else math.inf:.3f}")

# %% [markdown]
# Lambda is strictly convex in alpha. The scan reports the second derivative on a grid.

# %%
rep = convexity_scan(make_params(2, 4, 0.01), np.linspace(0.1, 0.9, 9))
for alpha, d2, ratio in rep.rows:
    print(f"alpha={alpha:.1f}  d2 Lambda={d2:.4f}  d2 Lambda / min(alpha, 1-alpha)^(q-1)={float(ratio):.2f}")
print("smallest ratio", float(rep.c_tilde))

# %% [markdown]
# optimal_period also returns a certificate: |dF/dh| at the returned root.

# %%
print(optimal_period(make_params(2, 4, 0.01), 0.5))
