"""Omega-psh envelopes: the obstacle problem behind the projection P."""

from dataclasses import dataclass

import numpy as np

from .errors import LcpNonConvergence
from .functionals import ma_density
from .grid import FOUR_PI

CONTACT_TOL = 1e-8


@dataclass
class EnvelopeResult:
    """Largest omega-psh ``Pu`` below the obstacle, with diagnostics."""

    Pu: np.ndarray
    contact_set: np.ndarray
    lcp_residual: float
    iterations: int


def lcp_residual(v, obstacle, omega):
    """``max |min(obstacle - v, rho + laplacian(v)/4pi)|`` over nodes."""
    return float(np.max(np.abs(np.minimum(obstacle - v, ma_density(v, omega)))))


def psh_project(obstacle, omega, relax=1.7, tol=1e-9, max_iter=200_000,
                initial=None, check_every=10):
    """Solve ``min(obstacle - v, rho + laplacian(v)/4pi) = 0`` for v.

    Projected SOR with red-black ordering; each colour is updated in one
    vectorized step. Starts from the obstacle unless ``initial`` is given.
    """
    phi = np.asarray(obstacle, dtype=float)
    rho = omega.rho
    n = phi.shape[0]
    if phi.shape != rho.shape:
        raise ValueError("obstacle and background form live on different grids")
    v = phi.copy() if initial is None else np.minimum(np.asarray(initial, dtype=float), phi)
    iy, ix = np.indices(phi.shape)
    colours = [(ix + iy) % 2 == 0, (ix + iy) % 2 == 1]
    source = FOUR_PI * rho / n**2
    res = lcp_residual(v, phi, omega)
    it = 0
    while res > tol:
        if it >= max_iter:
            raise LcpNonConvergence(res, it)
        for mask in colours:
            nbrs = (np.roll(v, 1, 0) + np.roll(v, -1, 0)
                    + np.roll(v, 1, 1) + np.roll(v, -1, 1))
            gs = 0.25 * (nbrs + source)
            v = np.where(mask, np.minimum(phi, v + relax * (gs - v)), v)
        it += 1
        if it % check_every == 0:
            res = lcp_residual(v, phi, omega)
    return EnvelopeResult(Pu=v, contact_set=(phi - v) <= CONTACT_TOL,
                          lcp_residual=res, iterations=it)


def envelope_zero(omega, **kwargs):
    """``P0``: the envelope of the zero obstacle.

    Also certifies that the Monge-Ampere density vanishes off the contact set.
    """
    res = psh_project(np.zeros(omega.rho.shape), omega, **kwargs)
    free = ~res.contact_set
    if np.any(free):
        off = float(np.max(np.abs(ma_density(res.Pu, omega)[free])))
        if off > CONTACT_TOL:
            raise LcpNonConvergence(off, res.iterations)
    return res


def orthogonality_residual(obstacle, omega, result=None, **kwargs):
    """``|<MA(Pu), obstacle - Pu>|``; vanishes for the exact envelope."""
    phi = np.asarray(obstacle, dtype=float)
    res = result if result is not None else psh_project(phi, omega, **kwargs)
    w = ma_density(res.Pu, omega)
    return abs(float(np.sum(w * (phi - res.Pu)))) * omega.grid.cell_area
