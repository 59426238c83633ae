"""Zero-temperature limit: v_beta approaches the envelope P0 in L1.

    python3 demos/04_beta_infinity.py
"""

import numpy as np

from torusmf import BackgroundForm, GridSpec, beta_infinity_sweep, envelope_zero, lebesgue

grid = GridSpec(64)
omega = BackgroundForm.cosine(grid, 2.0)
env = envelope_zero(omega)
rows, sols = beta_infinity_sweep([1, 4, 16, 64, 256, 1024], lebesgue(grid), omega, envelope=env)

print(" beta      L1(v - P0)   Linf(v - P0)   sup v")
for r in rows:
    print(f"{r.beta:6g}  {r.l1_dist:12.6f}  {r.linf_dist:12.6f}  {r.sup_u: .6f}")
l1 = np.array([r.l1_dist for r in rows])
print("successive L1 ratios:", np.round(l1[1:] / l1[:-1], 3))
