"""Alpha invariants and Frostman exponents of klt-type measures.

    python3 demos/05_alpha_invariant.py
"""

from torusmf import BackgroundForm, GridSpec, alpha_estimate, exp_integral, frostman_exponent
from torusmf.measures import green_pole, klt_measure

grid = GridSpec(64)
omega = BackgroundForm.lebesgue(grid)

# A single Green pole against Lebesgue measure: integrable exactly below t = 1.
g = green_pole((0.5, 0.5), omega)
for t in (0.9, 0.99, 1.01, 1.1):
    r = exp_integral(g, t, klt_measure([], grid))
    print(f"int e^(-t g): t = {t:4}: {r.verdict:10s} partial sums "
          + " ".join(f"{s:.4g}" for s in r.trace.partials))

cases = {"lebesgue": [], "c = 0.5": [(0.5, 0.5, 0.5)], "c = 0.9": [(0.5, 0.5, 0.9)],
         "c = 0.25, 0.75": [(0.25, 0.25, 0.25), (0.75, 0.625, 0.75)]}
for name, poles in cases.items():
    mu = klt_measure(poles, grid)
    rep = alpha_estimate(mu, omega)
    d = frostman_exponent(mu)
    print(f"{name:15s} alpha_hat = {rep.alpha_hat:.3f} (witness {rep.witness}), "
          f"Frostman d = {d:.3f}, d/2 = {d / 2:.3f}")
