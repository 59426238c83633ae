"""Energy, entropy and free-energy functionals at complex dimension one.

Potentials are plain grid arrays ``u``; admissibility (omega-psh) means
``rho + laplacian(u)/4pi >= -epsilon_psh`` at every node, see ``slack``.
Measures are ``Measure`` objects and every pairing uses their node masses.
"""

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import NotPsh
from .grid import FOUR_PI, ddc, dirichlet, poisson_solve
from .measures import from_weights, integrate, log_exp_moment

DENSITY_FLOOR = 1e-300


def default_epsilon_psh(grid):
    return 1e-10 * grid.n_side**2


@dataclass
class SolverParams:
    """Parameters shared by the mean-field solvers.

    ``damping=None`` picks the regime default (1.0 for beta > 0, 0.3 for
    beta < 0). ``method`` is ``"fixed_point"`` or ``"newton"`` (beta > 0
    only). ``allow_noncoercive`` skips the beta < 0 coercivity precheck.
    """

    beta: float = 1.0
    tol_residual: float = 1e-9
    tol_gap: float = 1e-8
    max_iter: int = 5000
    damping: Optional[float] = None
    epsilon_psh: Optional[float] = None
    method: str = "fixed_point"
    allow_noncoercive: bool = False

    def __post_init__(self):
        if not (self.tol_residual > 0 and self.tol_gap > 0):
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.damping is not None and not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if self.method not in ("fixed_point", "newton"):
            raise ValueError(f"unknown method {self.method!r}")

    def eps_psh(self, grid):
        return self.epsilon_psh if self.epsilon_psh is not None else default_epsilon_psh(grid)


def ma_density(u, omega):
    """Density of omega + dd^c u (may be negative for non-admissible u)."""
    return omega.rho + ddc(u)


def slack(u, omega):
    """Smallest nodal value of the Monge-Ampere density."""
    return float(np.min(ma_density(u, omega)))


def check_psh(u, omega, eps=None):
    eps = default_epsilon_psh(omega.grid) if eps is None else eps
    s = slack(u, omega)
    if s < -eps:
        raise NotPsh(s, eps)
    return s


def ma_measure(u, omega, eps=None):
    """MA(u) as a Measure; tiny negative values (within eps) are clamped."""
    check_psh(u, omega, eps)
    d = np.maximum(ma_density(u, omega), 0.0)
    return from_weights(d * omega.grid.cell_area)


def _energy(u, omega):
    grid = omega.grid
    return grid.integrate(u * omega.rho) - 0.5 * dirichlet(u, u)


def energy_E(u, omega, eps=None):
    """``E(u) = int u omega - (1/2) int du ^ d^c u``."""
    check_psh(u, omega, eps)
    return _energy(u, omega)


def aubin_I(u, omega, eps=None):
    check_psh(u, omega, eps)
    return dirichlet(u, u)


def aubin_J(u, omega, eps=None):
    check_psh(u, omega, eps)
    return 0.5 * dirichlet(u, u)


def potential_of_measure(mu, omega):
    """Zero-mean u with MA(u) = mu (node masses)."""
    u = poisson_solve(FOUR_PI * (mu.density - omega.rho))
    return u - u.mean()


def measure_energy(mu, omega):
    """``E(mu) = E(u_mu) - <u_mu, mu>``."""
    u = potential_of_measure(mu, omega)
    return _energy(u, omega) - integrate(u, mu)


def entropy_D(mu, mu0):
    """Relative entropy ``int log(mu/mu0) dmu``; +inf off absolute continuity."""
    w, w0 = mu.weights, mu0.weights
    cell = mu.grid.cell_area
    charged = w > 0
    if np.any(w0[charged] / cell < DENSITY_FLOOR):
        return np.inf
    return float(np.sum(w[charged] * np.log(w[charged] / w0[charged])))


def log_moment_L(u, beta, mu0):
    """``L_beta(u) = -(1/beta) log int e^(beta u) dmu0``."""
    if beta == 0:
        raise ValueError("beta must be nonzero")
    return -log_exp_moment(u, beta, mu0) / beta


def free_energy_F(mu, mu0, beta, omega):
    """``F_beta(mu) = E(mu) + D(mu)/beta`` with infinite sentinels."""
    if beta == 0:
        raise ValueError("beta must be nonzero")
    D = entropy_D(mu, mu0)
    if not np.isfinite(D):
        return np.inf if beta > 0 else -np.inf
    return measure_energy(mu, omega) + D / beta


def ding_G(u, mu0, beta, omega, eps=None):
    """``G_beta(u) = E(u) + L_beta(u)``."""
    return energy_E(u, omega, eps) + log_moment_L(u, beta, mu0)


def duality_gap(u, mu0, beta, omega, eps=None):
    """Nonnegative gap between F(MA(u)) and G(u); zero exactly at solutions."""
    F = free_energy_F(ma_measure(u, omega, eps), mu0, beta, omega)
    G = ding_G(u, mu0, beta, omega, eps)
    return F - G if beta > 0 else G - F


def mabuchi_K(u, mu0, beta, omega, eps=None):
    return beta * free_energy_F(ma_measure(u, omega, eps), mu0, beta, omega)


def gibbs_measure(u, beta, mu0):
    """``e^(beta u) mu0 / Z`` on the nodes."""
    v = beta * np.asarray(u, dtype=float)
    m = float(np.max(v[mu0.weights > 0]))
    return from_weights(np.exp(v - m) * mu0.weights)


@dataclass
class FunctionalReport:
    E: float
    I: float
    J: float
    D: float
    L: float
    F: float
    G: float
    K: float
    beta: float

    def as_dict(self):
        return asdict(self)


def functional_report(u, mu0, beta, omega, eps=None):
    """Every functional at u, with F, D and K evaluated at MA(u)."""
    mu = ma_measure(u, omega, eps)
    D = entropy_D(mu, mu0)
    E = energy_E(u, omega, eps)
    I = dirichlet(u, u)
    L = log_moment_L(u, beta, mu0)
    F = free_energy_F(mu, mu0, beta, omega)
    return FunctionalReport(E=E, I=I, J=0.5 * I, D=D, L=L, F=F, G=E + L,
                            K=beta * F, beta=float(beta))
