"""Solvers for the normalized mean-field equation

    MA(u) = e^(beta u) mu0 / int e^(beta u) mu0

in the three regimes beta > 0, beta = 0 and beta < 0, a mirror-descent
oracle working directly on the free energy F, and the beta -> infinity sweep
towards the envelope P0.
"""

from dataclasses import dataclass, field
from typing import Optional
from weakref import WeakKeyDictionary

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .envelope import envelope_zero
from .functionals import (SolverParams, _energy, ding_G, free_energy_F,
                          gibbs_measure, log_moment_L, ma_density, ma_measure,
                          potential_of_measure)
from .grid import FOUR_PI
from .measures import from_weights, log_exp_moment

CONVERGED = "Converged"
MAX_ITER = "MaxIter"
DIVERGED = "Diverged"
COERCIVITY_FAILED = "CoercivityFailed"

DIVERGENCE_FACTOR = 10.0
DIVERGENCE_WINDOW = 50


@dataclass
class SolveResult:
    """Potential/measure pair with certificates and iteration history.

    ``u_star`` is in the zero-mean gauge. ``history`` rows are
    ``(iter, residual, F, G, gap)``.
    """

    u_star: np.ndarray
    mu_star: object
    residual_linf: float
    gap: float
    beta: float
    iterations: int
    history: list = field(default_factory=list)
    verdict: str = MAX_ITER
    gauge: str = "zero-mean"
    coercivity: Optional[object] = None

    @property
    def converged(self):
        return self.verdict == CONVERGED


def residual(u, beta, mu0, omega):
    """``max |MA density(u) - density of e^(beta u) mu0 / Z|``."""
    target = gibbs_measure(u, beta, mu0) if beta != 0 else mu0
    return float(np.max(np.abs(ma_density(u, omega) - target.density)))


def _certificates(u, beta, mu0, omega, eps):
    mu = ma_measure(u, omega, eps)
    F = free_energy_F(mu, mu0, beta, omega)
    G = ding_G(u, mu0, beta, omega, eps)
    gap = F - G if beta > 0 else G - F
    return F, G, gap


_coercivity_cache = WeakKeyDictionary()


def coercivity_precheck(gamma, mu0, omega):
    """Cached ``alpha_mt.coercivity_probe`` verdict for the solver."""
    from .alpha_mt import coercivity_probe

    key = (float(gamma), omega.rho.tobytes())
    per_measure = _coercivity_cache.setdefault(mu0, {})
    if key not in per_measure:
        per_measure[key] = coercivity_probe(gamma, mu0, omega)
    return per_measure[key]


def _zero_mean(u):
    return u - u.mean()


def _finish(u, beta, mu0, omega, params, it, history, verdict, coercivity=None):
    eps = params.eps_psh(omega.grid)
    res = residual(u, beta, mu0, omega)
    try:
        mu = ma_measure(u, omega, eps)
        gap = _certificates(u, beta, mu0, omega, eps)[2] if beta != 0 else 0.0
    except Exception:
        mu, gap = None, np.nan
    if verdict == CONVERGED and not (res <= params.tol_residual and gap <= params.tol_gap):
        verdict = MAX_ITER
    return SolveResult(u_star=u, mu_star=mu, residual_linf=res, gap=gap, beta=beta,
                       iterations=it, history=history, verdict=verdict,
                       coercivity=coercivity)


def solve(beta, mu0, omega, params=None, initial=None):
    """Solve the normalized mean-field equation at inverse temperature beta.

    beta = 0 is a single Poisson solve. beta != 0 runs the damped fixed
    point ``u <- (1 - d) u + d * potential_of_measure(e^(beta u) mu0 / Z)``
    (or Newton for beta > 0 when ``params.method == "newton"``). For
    beta < 0 a coercivity precheck runs first unless
    ``params.allow_noncoercive`` is set.
    """
    params = params or SolverParams(beta=beta)
    beta = float(beta)
    grid = omega.grid
    if beta == 0:
        u = potential_of_measure(mu0, omega)
        return _finish(u, beta, mu0, omega, params, 1,
                       [(1, residual(u, 0.0, mu0, omega), np.nan, np.nan, 0.0)],
                       CONVERGED)
    coercivity = None
    if beta < 0 and not params.allow_noncoercive:
        coercivity = coercivity_precheck(-beta, mu0, omega)
        if not coercivity.passed:
            u = np.zeros(grid.shape)
            out = _finish(u, beta, mu0, omega, params, 0, [], COERCIVITY_FAILED,
                          coercivity)
            out.verdict = COERCIVITY_FAILED
            return out
    u = np.zeros(grid.shape) if initial is None else _zero_mean(np.asarray(initial, dtype=float))
    if params.method == "newton" and beta > 0:
        out = _newton(u, beta, mu0, omega, params)
    else:
        out = _fixed_point(u, beta, mu0, omega, params)
    out.coercivity = coercivity
    return out


def _fixed_point(u, beta, mu0, omega, params):
    eps = params.eps_psh(omega.grid)
    delta = params.damping if params.damping is not None else (1.0 if beta > 0 else 0.3)
    history = []
    res_prev = np.inf
    best = []
    step_prev = None
    flips = 0
    for it in range(1, params.max_iter + 1):
        with np.errstate(over="raise", invalid="raise"):
            try:
                target = potential_of_measure(gibbs_measure(u, beta, mu0), omega)
            except FloatingPointError:
                return _finish(u, beta, mu0, omega, params, it, history, DIVERGED)
        step = _zero_mean(delta * (target - u))
        u = u + step
        # successive steps pointing in opposite directions signal an
        # eigenvalue near -1 of the iteration map: damp harder
        if step_prev is not None:
            num = float(np.sum(step * step_prev))
            den = float(np.linalg.norm(step) * np.linalg.norm(step_prev))
            flips = flips + 1 if den > 0 and num < -0.5 * den else 0
            if flips >= 3:
                delta, flips = max(delta / 2, 1e-3), 0
        step_prev = step
        res = residual(u, beta, mu0, omega)
        if not np.isfinite(res):
            return _finish(u, beta, mu0, omega, params, it, history, DIVERGED)
        try:
            F, G, gap = _certificates(u, beta, mu0, omega, eps)
        except Exception:
            F = G = gap = np.nan
        history.append((it, res, F, G, gap))
        best.append(res)
        if res <= params.tol_residual and gap <= params.tol_gap:
            return _finish(u, beta, mu0, omega, params, it, history, CONVERGED)
        if res > res_prev:
            delta = max(delta / 2, 1e-3)
        res_prev = res
        if len(best) > DIVERGENCE_WINDOW and \
                res > DIVERGENCE_FACTOR * best[-DIVERGENCE_WINDOW - 1]:
            return _finish(u, beta, mu0, omega, params, it, history, DIVERGED)
    return _finish(u, beta, mu0, omega, params, params.max_iter, history, MAX_ITER)


def _laplacian_matrix(n):
    """Sparse 5-point periodic Laplacian (row-major node ordering)."""
    e = np.ones(n)
    d1 = sp.diags([e[:-1], -2 * e, e[:-1]], [-1, 0, 1], format="lil")
    d1[0, n - 1] = 1.0
    d1[n - 1, 0] = 1.0
    d1 = d1.tocsr() * n**2
    eye = sp.identity(n, format="csr")
    return (sp.kron(eye, d1) + sp.kron(d1, eye)).tocsc()


def _ding_unchecked(u, mu0, beta, omega):
    return _energy(u, omega) + log_moment_L(u, beta, mu0)


def _newton(u, beta, mu0, omega, params):
    """Newton iteration on MA(u) = Gibbs(u) for beta > 0.

    The linearization ``-laplacian/4pi + beta diag(g)`` is SPD; the rank-one
    part of the Gibbs derivative is annihilated because the Newton
    correction is automatically orthogonal to the Gibbs measure. Steps are
    backtracked on the concave Ding functional.
    """
    eps = params.eps_psh(omega.grid)
    n = omega.grid.n_side
    lap = _laplacian_matrix(n)
    history = []
    # one fixed-point step makes the start admissible
    u = _zero_mean(potential_of_measure(gibbs_measure(u, beta, mu0), omega))
    G_cur = _ding_unchecked(u, mu0, beta, omega)
    res = residual(u, beta, mu0, omega)
    for it in range(1, params.max_iter + 1):
        g = gibbs_measure(u, beta, mu0).density
        N = ma_density(u, omega) - g
        A = (-lap / FOUR_PI + beta * sp.diags(g.ravel())).tocsc()
        step = splu(A).solve(N.ravel()).reshape(u.shape)
        s = 1.0
        while True:
            trial = _zero_mean(u + s * step)
            ok = True
            try:
                G_new = _ding_unchecked(trial, mu0, beta, omega)
                res_new = residual(trial, beta, mu0, omega)
            except Exception:
                ok = False
            if ok and (G_new >= G_cur - 1e-13 * max(1.0, abs(G_cur)) or res_new < res):
                break
            s /= 2
            if s < 1e-6:
                return _finish(u, beta, mu0, omega, params, it, history, MAX_ITER)
        u, G_cur, res = trial, G_new, res_new
        F, G, gap = _certificates(u, beta, mu0, omega, eps)
        history.append((it, res, F, G, gap))
        if res <= params.tol_residual and gap <= params.tol_gap:
            return _finish(u, beta, mu0, omega, params, it, history, CONVERGED)
    return _finish(u, beta, mu0, omega, params, params.max_iter, history, MAX_ITER)


def measure_descent(beta, mu0, omega, params=None, tol=1e-11):
    """Mirror descent on F over grid probability measures.

    ``mu <- mu * exp(-eta * sign(beta) * grad) / Z`` with
    ``grad = -u_mu + (log(mu/mu0) + 1)/beta``, ``eta`` starting at
    ``|beta|`` (one such step equals a fixed-point step) and halved until F
    improves. Stops when the centred gradient is below ``tol`` in sup norm.
    """
    params = params or SolverParams(beta=beta)
    beta = float(beta)
    if beta == 0:
        raise ValueError("measure descent needs beta != 0")
    coercivity = None
    if beta < 0 and not params.allow_noncoercive:
        coercivity = coercivity_precheck(-beta, mu0, omega)
        if not coercivity.passed:
            out = _finish(np.zeros(omega.grid.shape), beta, mu0, omega, params, 0, [],
                          COERCIVITY_FAILED, coercivity)
            out.verdict = COERCIVITY_FAILED
            return out
    sgn = np.sign(beta)
    mu = mu0
    support = mu0.weights > 0
    F_cur = free_energy_F(mu, mu0, beta, omega)
    eta0 = abs(beta)
    history = []
    verdict = MAX_ITER
    for it in range(1, params.max_iter + 1):
        u_mu = potential_of_measure(mu, omega)
        grad = np.zeros_like(u_mu)
        grad[support] = -u_mu[support] + (np.log(mu.weights[support]
                                                  / mu0.weights[support]) + 1) / beta
        centred = grad - float(np.sum(grad * mu.weights))
        gnorm = float(np.max(np.abs(centred[support])))
        history.append((it, gnorm, F_cur, np.nan, np.nan))
        if gnorm <= tol:
            verdict = CONVERGED
            break
        eta = eta0
        while True:
            logw = np.full(mu.weights.shape, -np.inf)
            logw[support] = np.log(mu.weights[support]) - eta * sgn * centred[support]
            trial = from_weights(np.exp(logw - logw[support].max()))
            F_new = free_energy_F(trial, mu0, beta, omega)
            if sgn * (F_new - F_cur) <= 1e-15 * max(1.0, abs(F_cur)):
                break
            eta /= 2
            if eta < 1e-8 * eta0:
                break
        mu, F_cur = trial, F_new
    u = potential_of_measure(mu, omega)
    res = residual(u, beta, mu0, omega)
    F, G, gap = _certificates(u, beta, mu0, omega, params.eps_psh(omega.grid))
    if verdict == CONVERGED and not gap <= params.tol_gap:
        verdict = MAX_ITER
    return SolveResult(u_star=u, mu_star=mu, residual_linf=res, gap=gap, beta=beta,
                       iterations=len(history), history=history, verdict=verdict,
                       coercivity=coercivity)


@dataclass
class SweepRow:
    beta: float
    l1_dist: float
    linf_dist: float
    sup_u: float
    verdict: str = CONVERGED


def beta_infinity_sweep(betas, mu0, omega, params=None, envelope=None):
    """Distances from the non-normalized solutions ``v_beta`` to ``P0``.

    ``v_beta = u_beta - (1/beta) log int e^(beta u_beta) mu0`` so that
    ``int e^(beta v_beta) mu0 = 1``. Each solve is warm-started from the
    previous beta and uses Newton steps.
    """
    betas = [float(b) for b in betas]
    if any(b <= 0 for b in betas) or any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
        raise ValueError("betas must be positive and increasing")
    params = params or SolverParams(tol_residual=1e-9, tol_gap=1e-10, max_iter=200,
                                    method="newton")
    P0 = (envelope or envelope_zero(omega)).Pu
    cell = omega.grid.cell_area
    rows, solutions = [], []
    u = None
    for b in betas:
        p = SolverParams(beta=b, tol_residual=params.tol_residual, tol_gap=params.tol_gap,
                         max_iter=params.max_iter, damping=params.damping,
                         epsilon_psh=params.epsilon_psh, method=params.method)
        res = solve(b, mu0, omega, p, initial=u)
        u = res.u_star
        v = u - log_exp_moment(u, b, mu0) / b
        d = v - P0
        rows.append(SweepRow(beta=b, l1_dist=float(np.sum(np.abs(d)) * cell),
                             linf_dist=float(np.max(np.abs(d))), sup_u=float(np.max(v)),
                             verdict=res.verdict))
        solutions.append(v)
    return rows, solutions
