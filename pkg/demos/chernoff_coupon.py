"""
===================================
Coupon collecting with Chernoff
===================================

Each summand is ``E_jj`` for a uniformly random coordinate ``j``. The sum is
diagonal and counts how often each coordinate was drawn, so ``lambda_min`` is
zero exactly when some coordinate was never drawn.
"""

# %%
# Exact answer for a small case
# -----------------------------

import math

import numpy as np

from matrix_tails import ensembles, verify

small = ensembles.EnsembleSpec.coupon(3, 5)
support = ensembles.enumerate_support(small)
lam_min = np.linalg.eigvalsh(support.matrices)[:, 0]
print("P(lambda_min = 0), d=3, n=5:", support.probs[lam_min == 0].sum())

# %%
# Lower tail against the two Chernoff forms
# -----------------------------------------
#
# With ``n = 64`` draws in dimension 8 the mean is ``8 I``. The divergence
# form is never worse than the multiplicative form.

spec = ensembles.EnsembleSpec.coupon(8, 64)
grid = np.linspace(0.0, 8.0, 9)
report = verify.monte_carlo_tail(spec, "lambda_min", grid, trials=20_000, seed=3)
div = verify.theorem_curve(spec, "chernoff-i", "lambda_min", grid)
mult = verify.theorem_curve(spec, "chernoff-ii", "lambda_min", grid)

print(f"{'t':>4} {'P(lmin<=t)':>11} {'divergence':>11} {'multiplic.':>11}")
for t, p, a, b in zip(grid, report.empirical, div.clipped, mult.clipped):
    print(f"{t:4.0f} {p:11.5f} {a:11.5f} {b:11.5f}")

# %%
# With ``n = d = 8`` draws a coordinate is almost surely missed.

print("1 - 8!/8^8 =", 1 - math.factorial(8) / 8**8)
