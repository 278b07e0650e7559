"""Which fugacity profiles give stationary product measures?

Three routes: a zero-range rate with balanced lambda, a gradient rate with
balanced lambda plus a mixing condition, or any rate with lambda reversible
for the kernel.  The verdict is checked against exact sums of the generator
applied to indicator functions.
"""
import numpy as np

from cpslab import model
from cpslab.model import Kernel
from cpslab.stationarity import generator_table, spanning_supports, stationarity_verdict


def worst_generator_value(b, lam, p):
    return max(float(np.abs(generator_table(A, b, lam, p)[0]).max()) for A in spanning_supports(p.sites))


general = model.misanthrope([0, 1.0, 2.5], [2.0, 0.7, 0], [1.0, 1.3, 0.6, 2.2, 0.9])
cases = [
    ("exclusion, asymmetric 5-cycle, lambda=1", model.exclusion(), np.ones(5), Kernel.asymmetric_cycle(5)),
    ("misanthrope table, reversible line", general, 2.0 ** np.arange(4), Kernel.line(4, 1.0, 0.5)),
    ("misanthrope table, asymmetric cycle", general, np.ones(4), Kernel.asymmetric_cycle(4)),
]
for label, b, lam, p in cases:
    v = stationarity_verdict(b, lam, p)
    print(f"{label}: case={v.case} ({v.reason}); max |E[Lf]| = {worst_generator_value(b, lam, p):.2e}")
