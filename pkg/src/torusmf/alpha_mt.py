"""Alpha invariants, Frostman exponents, coercivity prechecks and
Moser-Trudinger constants for measures on the torus."""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .functionals import ding_G, free_energy_F, ma_measure, potential_of_measure
from .grid import BackgroundForm, GridSpec, dirichlet, green_function
from .measures import (BOUNDED, DIVERGING, INCONCLUSIVE, exp_integral,
                       from_density, green_pole, klt_measure, lebesgue,
                       log_exp_moment)

COERCIVITY_MARGIN = 0.1
BISECTION_WIDTH = 0.02


def probe_centers(mu0, per_axis=3):
    """Regular grid of centers plus every pole center of ``mu0``."""
    pts = [((i + 0.5) / per_axis, (j + 0.5) / per_axis)
           for j in range(per_axis) for i in range(per_axis)]
    return pts + [p.center for p in mu0.poles]


def green_probes(mu0, omega, per_axis=3):
    """Single Green poles and half-sums of two poles, with descriptors."""
    centers = probe_centers(mu0, per_axis)
    singles = [(f"green({x:.6g},{y:.6g})", green_pole((x, y), omega)) for x, y in centers]
    pairs = [(0, per_axis * per_axis - 1)]
    k0 = per_axis * per_axis
    pairs += [(k0 + i, k0 + j) for i, j in combinations(range(len(mu0.poles)), 2)]
    if mu0.poles:
        pairs.append((per_axis * per_axis // 2, k0))
    halves = []
    for i, j in pairs:
        (di, gi), (dj, gj) = singles[i], singles[j]
        halves.append((f"half({di},{dj})", 0.5 * gi + 0.5 * gj))
    return singles + halves


@dataclass
class AlphaReport:
    alpha_hat: float
    t_samples: list
    probe_family: str
    grid_levels: list
    witness: str = ""
    inconclusive: bool = False

    def trace_rows(self):
        """Rows ``(t, level, partial_integral, verdict)`` of the bisection."""
        rows = []
        for t, verdict, trace in self.t_samples:
            for level, s in trace.rows():
                rows.append((t, level, s, verdict))
        return rows


def _verdict_at(t, probes, mu0):
    worst = None
    for name, u in probes:
        r = exp_integral(u, t, mu0)
        if r.verdict == DIVERGING:
            return DIVERGING, r.trace, name
        if r.verdict == INCONCLUSIVE:
            worst = (INCONCLUSIVE, r.trace, name)
        elif worst is None or (worst[0] == BOUNDED and r.value > worst[1].value):
            worst = (BOUNDED, r.trace, name)
    return worst


def alpha_estimate(mu0, omega, t_max=2.56, width=BISECTION_WIDTH, per_axis=3):
    """Bisection for the largest t with every probe integral bounded.

    At each midpoint t the integrals ``int e^(-t g) dmu0`` are evaluated for
    all Green-pole probes; the midpoint counts as Bounded only if every
    probe is Bounded. An Inconclusive midpoint ends the bisection there and
    is flagged in the report.
    """
    probes = green_probes(mu0, omega, per_axis)
    lo, hi = 0.0, float(t_max)
    samples = []
    witness = ""
    inconclusive = False
    while hi - lo > width + 1e-12:
        t = 0.5 * (lo + hi)
        verdict, trace, name = _verdict_at(t, probes, mu0)
        samples.append((t, verdict, trace))
        if verdict == BOUNDED:
            lo = t
        elif verdict == DIVERGING:
            hi, witness = t, name
        else:
            inconclusive, witness = True, name
            lo = hi = t
            break
    family = (f"green poles at {per_axis}x{per_axis} centers + "
              f"{len(mu0.poles)} pole centers, two-pole half sums")
    return AlphaReport(alpha_hat=0.5 * (lo + hi), t_samples=samples,
                       probe_family=family, grid_levels=[omega.grid.n_side],
                       witness=witness, inconclusive=inconclusive)


def frostman_exponent(mu0, radii=None, per_axis=4, details=False):
    """Smallest least-squares slope of ``log mu0(B_r(x))`` against ``log r``.

    Centers: every pole center and the points of a regular grid lying
    farther than 1/4 from all poles.
    """
    radii = 2.0 ** -np.arange(2, 7) if radii is None else np.asarray(radii, dtype=float)
    centers = [p.center for p in mu0.poles]
    for j in range(per_axis):
        for i in range(per_axis):
            c = ((i + 0.5) / per_axis, (j + 0.5) / per_axis)
            if all(np.hypot(*np.subtract(c, p.center)) > 0.25 for p in mu0.poles):
                centers.append(c)
    slopes = []
    for c in centers:
        masses = [mu0.ball_mass(c, r) for r in radii]
        slopes.append(float(np.polyfit(np.log(radii), np.log(masses), 1)[0]))
    d_hat = min(slopes)
    if details:
        return d_hat, list(zip(centers, slopes))
    return d_hat


def bandlimited_field(grid, rng, modes=3):
    """Random trigonometric polynomial with zero mean and unit sup norm."""
    X, Y = grid.coords
    u = np.zeros(grid.shape)
    for kx in range(-modes, modes + 1):
        for ky in range(0, modes + 1):
            if (kx, ky) == (0, 0):
                continue
            a, b = rng.normal(size=2) / (kx * kx + ky * ky)
            ph = 2 * np.pi * (kx * X + ky * Y)
            u += a * np.cos(ph) + b * np.sin(ph)
    u -= u.mean()
    return u / np.max(np.abs(u))


def psh_probes(omega, count=50, seed=0, centers=None):
    """Suite of admissible potentials with descriptors.

    Potentials of random smooth positive measures ``e^(a f) / Z`` (f a
    bandlimited field), admissible for any background form, plus scaled
    Green functions when the form is nonnegative.
    """
    grid = omega.grid
    rng = np.random.default_rng(seed)
    out = []
    if omega.is_positive:
        for c in centers or [(0.5, 0.5), (0.25, 0.75)]:
            g = green_function(c, omega)
            for t in (0.25, 0.5, 0.9):
                out.append((f"{t}*green{c}", t * g))
    while len(out) < count:
        amp = rng.uniform(0.2, 3.0)
        mu = from_density(np.exp(amp * bandlimited_field(grid, rng)))
        out.append((f"potential#{len(out)}(amp={amp:.3g})", potential_of_measure(mu, omega)))
    return out[:count]


@dataclass
class CoercivityReport:
    passed: bool
    gamma: float
    alpha_hat: float
    threshold: float
    max_value: float
    witness: str
    sweep: list = field(default_factory=list)
    alpha: AlphaReport = None


def coercivity_probe(gamma, mu0, omega, margin=COERCIVITY_MARGIN, eps=0.01,
                     alpha=None, ts=None, probes=None):
    """Pass iff ``gamma < (2 - margin) * alpha_hat``.

    Also evaluates ``G_{-gamma}(u) - eps * J(u)`` on admissible probes and on
    scaled Green poles ``t * g`` and reports the largest value seen.
    """
    gamma = float(gamma)
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    alpha = alpha or alpha_estimate(mu0, omega)
    threshold = (2.0 - margin) * alpha.alpha_hat
    ts = np.linspace(0.0, 1.0, 11) if ts is None else ts
    sweep = []
    best = (-np.inf, "")
    if omega.is_positive:
        centers = [p.center for p in mu0.poles] or [(0.5, 0.5)]
        for c in centers:
            g = green_function(c, omega)
            for t in ts:
                u = t * g
                val = ding_G(u, mu0, -gamma, omega) - eps * 0.5 * dirichlet(u, u)
                sweep.append((float(t), val))
                if val > best[0]:
                    best = (val, f"{t:.3g}*green{c}")
    for name, u in (probes if probes is not None else psh_probes(omega, count=10)):
        val = ding_G(u, mu0, -gamma, omega) - eps * 0.5 * dirichlet(u, u)
        if val > best[0]:
            best = (val, name)
    return CoercivityReport(passed=gamma < threshold, gamma=gamma,
                            alpha_hat=alpha.alpha_hat, threshold=threshold,
                            max_value=best[0], witness=best[1], sweep=sweep,
                            alpha=alpha)


def threshold_trend(gamma, n_sides=(16, 32, 64, 128), ts=None, x0=(0.5, 0.5)):
    """``sup_t F_{-gamma}(MA(t g_n))`` on Lebesgue data across grid sizes.

    The measures ``MA(t g) = (1 - t) omega + t delta`` concentrate as the
    grid refines; the sup grows without bound exactly when gamma exceeds the
    coercivity threshold 2. Returns rows ``(n_side, sup_F, t_argmax)``.
    """
    ts = np.linspace(0.0, 1.0, 21) if ts is None else ts
    rows = []
    for n in n_sides:
        grid = GridSpec(n)
        omega = BackgroundForm.lebesgue(grid)
        mu0 = lebesgue(grid)
        g = green_function(x0, omega)
        vals = [free_energy_F(ma_measure(t * g, omega), mu0, -gamma, omega) for t in ts]
        k = int(np.argmax(vals))
        rows.append((n, float(vals[k]), float(ts[k])))
    return rows


def is_strictly_increasing(values, slack=0.0):
    return all(b > a + slack for a, b in zip(values, values[1:]))


@dataclass
class MTReport:
    a_fit: float
    C_fit: float
    witness: str
    gamma_max: float
    frostman_d: float = np.nan
    frostman_coefficient: float = np.nan
    alpha: AlphaReport = None


def mt_probe_suite(mu0, omega, seed=0, count=20):
    """Fields for the Moser-Trudinger fit, all normalized by ``int u omega = 0``."""
    grid = omega.grid
    rng = np.random.default_rng(seed)
    cell = grid.cell_area
    suite = []
    for k in range(count):
        f = bandlimited_field(grid, rng)
        for amp in (0.5, 2.0, 8.0):
            suite.append((f"bandlimited#{k}x{amp}", amp * f))
    centers = [p.center for p in mu0.poles] + [(0.5, 0.5)]
    for c in centers:
        g = green_function(c, omega)
        for t in np.linspace(0.25, 4.0, 16):
            suite.append((f"{t:.4g}*(-green{c})", -t * g))
    g0 = green_function((0.25, 0.25), omega)
    g1 = green_function((0.75, 0.75), omega)
    for t in (0.5, 1.0, 2.0):
        suite.append((f"{t}*dipole", t * (g1 - g0)))
    return [(name, u - float(np.sum(u * omega.rho)) * cell) for name, u in suite]


def mt_constant_fit(mu0, omega, width=BISECTION_WIDTH, margin=COERCIVITY_MARGIN,
                    alpha=None, seed=0):
    """Fit ``log int e^u dmu0 <= a * int du ^ d^c u + C`` over a probe suite.

    ``gamma_max`` is the largest gamma passing ``coercivity_probe`` (found by
    bisection), ``a_fit = 1 / (2 gamma_max)`` and ``C_fit`` the smallest
    constant making the inequality hold on every probe.
    """
    alpha = alpha or alpha_estimate(mu0, omega)
    lo, hi = 0.0, 4.0
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        if mid < (2.0 - margin) * alpha.alpha_hat:
            lo = mid
        else:
            hi = mid
    gamma_max = 0.5 * (lo + hi)
    a_fit = 1.0 / (2.0 * gamma_max)
    best = (-np.inf, "")
    for name, u in mt_probe_suite(mu0, omega, seed):
        val = log_exp_moment(u, 1.0, mu0) - a_fit * dirichlet(u, u)
        if val > best[0]:
            best = (val, name)
    d_hat = frostman_exponent(mu0)
    return MTReport(a_fit=a_fit, C_fit=best[0], witness=best[1], gamma_max=gamma_max,
                    frostman_d=d_hat, frostman_coefficient=d_hat / 8.0, alpha=alpha)


def mt_sharpness_witness(a, n_sides=(16, 32, 64, 128), ts=None, x0=(0.5, 0.5)):
    """``sup_t [log int e^(-t g_n) - a * dirichlet(t g_n, t g_n)]`` on Lebesgue data.

    A sequence growing with the grid shows that no constant C makes the
    inequality with coefficient ``a`` hold. Returns rows
    ``(n_side, sup_value, t_argmax)``.
    """
    ts = np.linspace(0.5, 4.0, 36) if ts is None else ts
    rows = []
    for n in n_sides:
        grid = GridSpec(n)
        omega = BackgroundForm.lebesgue(grid)
        mu0 = lebesgue(grid)
        g = green_function(x0, omega)
        D = dirichlet(g, g)
        vals = [log_exp_moment(-t * g, 1.0, mu0) - a * t * t * D for t in ts]
        k = int(np.argmax(vals))
        rows.append((n, float(vals[k]), float(ts[k])))
    return rows
