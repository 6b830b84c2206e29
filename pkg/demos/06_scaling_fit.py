"""
Fitting scaling curves and allocating compute
=============================================

Fit ``L = A0 + A1 N^-a1 + A2 D'^-a2`` to noisy synthetic data, then turn
a fitted curve into an efficient frontier and a budgeted allocation.
"""

import numpy as np

from nqs_scaling.scaling import DataPoint, ScalingCurve, efficient_frontier, fit_curve, optimal_allocation

truth = ScalingCurve(1e-6, 0.2, 7e-3, 8.0, 2.4)
rng = np.random.default_rng(0)
N = 10 ** rng.uniform(0, 2, 60)
D = 10 ** rng.uniform(0, 2, 60)
y = truth.predict(N, D) * np.exp(0.05 * rng.normal(size=60))

# Fewer Adam steps than the default keep the demo quick.
fit = fit_curve([DataPoint(*p) for p in zip(N, D, y)], steps=5000)
print(f"true   a1={truth.alpha1:.3f} a2={truth.alpha2:.3f} A1={truth.A1:.3g} A2={truth.A2:.3g}")
print(f"fitted a1={fit.alpha1:.3f} a2={fit.alpha2:.3f} A1={fit.A1:.3g} A2={fit.A2:.3g}  log-R2={fit.r2_log:.3f}")

# Frontier for the MADE V-score curve.
made = ScalingCurve(9.37e-11, 2.58e-5, 5.53e-2, 1.459, 2.828)
f = efficient_frontier(made)
print(f"frontier D' = {f.a:.3f} N^{f.b:.3f}")

# The default closed form inverts the balance ratio; exact=True minimises
# the curve on the budget line k N D' = C.
C, k = 1e12, 3.0 * 190 * 441
for exact in (False, True):
    n_star, d_star = optimal_allocation(made, C, k, exact=exact)
    print(f"exact={exact!s:5}: N*={n_star:.4g} D'*={d_star:.4g} predicted loss {float(made.predict(n_star, d_star)):.4e}")
