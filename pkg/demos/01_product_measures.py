"""One-site laws of the product measures.

For a rate b(n, k) the stationary candidates are products of one-site laws
proportional to a_n lambda^n.  Exclusion gives Bernoulli laws, the linear
zero-range rate gives Poisson laws and the constant zero-range rate gives
geometric laws, the last one only for lambda below the radius 1.
"""
import numpy as np
from scipy import stats

from cpslab import marginal, model, radius

for lam in (0.1, 1.0, 5.0):
    bern = marginal(model.exclusion(), lam).on(0, 1)
    pois = marginal(model.linear_zero_range(60), lam).on(0, 60)
    print(f"lambda={lam:4}: exclusion P[1]={bern[1]:.6f} (lambda/(1+lambda)={lam / (1 + lam):.6f}),"
          f" zero-range max |pmf - Poisson| = {np.max(np.abs(pois - stats.poisson.pmf(np.arange(61), lam))):.1e}")

for name, b in [("exclusion", model.exclusion()), ("constant zero-range", model.constant_zero_range(500)),
                ("linear zero-range", model.linear_zero_range(500))]:
    r = radius(b)
    print(f"radius of {name}: {r.value}")

try:
    marginal(model.constant_zero_range(500), 1.2)
except Exception as exc:  # the partition sum diverges past the radius
    print(f"lambda=1.2 for constant zero-range: {type(exc).__name__}")
