"""Particles and holes.

On W = {0..N}, relabelling eta -> N - eta turns the system (b, p) into
(b~, p~) with b~(n, k) = b(N-k, N-n) and p~ the transposed kernel.  Product
measures map to product measures with fugacity c / lambda.
"""
import numpy as np

from cpslab import model
from cpslab.duality import criterion_duality_check, dual_fugacity, verify_measure_duality
from cpslab.dynamics import duality_mc
from cpslab.model import FugacityProfile, Kernel

b = model.misanthrope([0, 1.0, 2.5], [2.0, 0.7, 0], [1.0, 1.3, 0.6, 2.2, 0.9])
lam = np.array([0.3, 1.0, 4.0])
print("dual fugacities:", dual_fugacity(b, lam))
print(f"max |mu(N-n) - nu(n)| = {verify_measure_duality(b, lam):.1e}")

rep = duality_mc(b, Kernel.line(3, 1.0, 0.5), 2, (2, 0, 1), 2.0, 10**5, seed=5)
print("process-level TV per site:", np.round(rep["tv"], 4))

for prof in (FugacityProfile.constant(1.0), FugacityProfile.geometric(2.0), FugacityProfile.polynomial(1.0)):
    ok, v, vd = criterion_duality_check(prof, b)
    print(f"{prof.kind:>10}: {v} / dual {vd}")
