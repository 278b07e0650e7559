"""On a finite window every particle-number sector is one communicating class.

The stationary law of the dynamics inside a sector is the product measure
conditioned on that particle number; the product measure itself is a mixture
of these sector laws.
"""
import numpy as np

from cpslab import model
from cpslab.model import Kernel
from cpslab.stationarity import FiniteSystem, ergodic_components_finite, orbit_decomposition, quadratic_forms

system = FiniteSystem(model.partial_exclusion(2), Kernel.asymmetric_cycle(4))
orbits = orbit_decomposition(system)
print(f"{system.n_states} states, {len(orbits.orbits)} orbits, particle numbers {orbits.totals}")

reports, mix = ergodic_components_finite(system, np.full(4, 0.7))
for r in reports:
    print(f"  m={r.particles}: {r.size:3d} states, weight {r.weight:.4f}, max error vs conditioned law {r.max_error:.1e}")
print(f"mixture error {mix:.1e}")

mu = system.product_pmf(np.full(4, 0.7))
Q, R = quadratic_forms(np.random.default_rng(0).normal(size=system.n_states), system, mu)
print(f"-E[f Lf] = {Q:.12f}, half the mean squared jump of f = {R:.12f}")
