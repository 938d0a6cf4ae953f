"""
===========================================
Numeric master bound and the lemma checks
===========================================

The master bound minimizes ``exp(-theta t) tr exp(sum_k g(theta) M_k)`` over
``theta``. For Gaussian summands whose squares add to a multiple of the
identity the minimum is known in closed form, which makes a good sanity check.
"""

# %%
# Closed-form agreement
# ---------------------

import numpy as np

from matrix_tails import bounds, verify
from matrix_tails.linalg import MatrixFamily

d, sigma2 = 4, 2.5
model = bounds.MgfModel("gaussian", sigma2 * np.eye(d))
for t in (1.0, 3.0, 6.0):
    res = bounds.master_tail_numeric([model], t)
    closed = bounds.gaussian_series_tail(sigma2, d, t)
    print(f"t={t}: numeric {res.bound:.10g} (theta*={res.theta_star:.6f}), closed form {closed:.10g}")

# %%
# Randomized lemma suite
# ----------------------
#
# Each check reports the worst normalized slack over random instances.

for v in verify.lemma_suite(d=3, instances=50, seed=0):
    print(f"{v.lemma_id:<11} {'pass' if v.passed else 'FAIL'} {v.worst_violation: .3e}")

# %%
# Noncommutative Khintchine
# -------------------------
#
# Exact Rademacher moments never exceed the Gaussian moment constant times
# ``tr (sum A_k^2)^p``.

rng = np.random.default_rng(0)
G = rng.standard_normal((6, 3, 3))
for row in verify.khintchine_check(MatrixFamily.self_adjoint(G), p_max=4):
    print(f"p={row.p} ratio={row.ratio:.4f}")
