"""Partial sums of the occupations and the Mineka coupling.

Z_n = s + eta_0 + ... + eta_{n-1}.  Started from two nearby values s0 and s,
the laws of Z_n merge (TV -> 0) exactly when the tail of the partial sums is
trivial.  The exact TV comes from convolution, the coupling times from the
Mineka construction, and the coupling inequality ties the two together.
"""
import numpy as np

from cpslab import model
from cpslab.coupling import coupling_times, tail_triviality_probe
from cpslab.model import FugacityProfile

e = model.exclusion()
for label, prof in [("lambda=1", FugacityProfile.constant(1.0)), ("lambda_i=2^i", FugacityProfile.geometric(2.0))]:
    tv = tail_triviality_probe(e, prof, 0, 0, 1, 2000)
    print(f"{label}: TV(10)={tv[10]:.4f} TV(100)={tv[100]:.4f} TV(2000)={tv[2000]:.4f}")

one = FugacityProfile.constant(1.0)
T = coupling_times(e, one, 0, 0, 1, [1], 10**4, seed=1, replicas=1000)
tv = tail_triviality_probe(e, one, 0, 0, 1, 10**4)
for n in (10, 100, 1000, 10**4):
    p = np.mean((T < 0) | (T > n))
    print(f"n={n:5d}: TV={tv[n]:.4f} <= P[T>n]={p:.4f}")

lzr = model.linear_zero_range(60)
T23 = coupling_times(lzr, one, 0, 0, 1, [2, 3], 5000, seed=2, replicas=500)
print(f"steps {{2,3}} with Poisson increments: coupled fraction {np.mean(T23 >= 0):.3f}")
