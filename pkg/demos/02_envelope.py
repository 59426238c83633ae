"""The envelope P0 of the zero obstacle for a sign-changing form.

    python3 demos/02_envelope.py [out_dir]
"""

import sys
from pathlib import Path

import numpy as np

from torusmf import BackgroundForm, GridSpec, envelope_zero, orthogonality_residual
from torusmf.functionals import ma_density
from torusmf.io import write_pgm

grid = GridSpec(64)
omega = BackgroundForm.cosine(grid, 2.0)
env = envelope_zero(omega)

X, _ = grid.coords
profile = env.Pu[0]
print(f"projected SOR sweeps: {env.iterations}, complementarity residual {env.lcp_residual:.2e}")
print(f"contact fraction {env.contact_set.mean():.3f}; sup P0 = {env.Pu.max():.2e}, "
      f"min P0 = {env.Pu.min():.5f} at x = {X[0, np.argmin(profile)]:.3f}")
print(f"orthogonality <MA(P0), 0 - P0> = "
      f"{orthogonality_residual(np.zeros(grid.shape), omega, result=env):.2e}")
free = ~env.contact_set
print(f"max |MA(P0)| off the contact set = {np.abs(ma_density(env.Pu, omega)[free]).max():.2e}")
print("P0 along y = 0:")
for i in range(0, 64, 8):
    print(f"  x = {X[0, i]:.3f}  P0 = {profile[i]: .5f}  contact = {env.contact_set[0, i]}")

if len(sys.argv) > 1:
    out = Path(sys.argv[1])
    out.mkdir(parents=True, exist_ok=True)
    write_pgm(out / "P0.pgm", env.Pu)
    write_pgm(out / "contact.pgm", env.contact_set.astype(float))
