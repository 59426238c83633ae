"""Energy functionals at n = 1: exact identities and the gradient of E.

    python3 demos/01_functionals.py
"""

import numpy as np

from torusmf import (BackgroundForm, GridSpec, aubin_I, aubin_J, energy_E,
                     from_density, integrate, ma_measure, measure_energy,
                     potential_of_measure)
from torusmf.alpha_mt import bandlimited_field

grid = GridSpec(64)
omega = BackgroundForm.cosine(grid, 2.0)  # rho = 1 + 2 cos(2 pi x) changes sign
rng = np.random.default_rng(0)

# Admissible potentials are potentials of positive measures.
mu = from_density(np.exp(1.5 * bandlimited_field(grid, rng)))
u = potential_of_measure(mu, omega)
u -= grid.integrate(u * omega.rho)  # normalize int u omega = 0

I, J = aubin_I(u, omega), aubin_J(u, omega)
ma = ma_measure(u, omega)
print(f"I = {I:.12f}, 2J = {2 * J:.12f}")
print(f"E(MA u) = {measure_energy(ma, omega):.12f}, J(u) = {J:.12f}")
print(f"-<u, MA u> = {-integrate(u, ma):.12f}, 2 E(MA u) = {2 * measure_energy(ma, omega):.12f}")

# dE = MA: central differences along a random admissible direction.
v = potential_of_measure(from_density(np.exp(bandlimited_field(grid, rng))), omega)
for t in (1e-2, 1e-3, 1e-4, 1e-5):
    fd = (energy_E(u + t * v, omega) - energy_E(u - t * v, omega)) / (2 * t)
    print(f"t = {t:.0e}: finite difference {fd:.12f} vs <MA u, v> = {integrate(v, ma):.12f}")
