"""Periodic grid on the unit torus, the dd^c operator and linear solvers.

Conventions used throughout the package:

* the torus is [0, 1)^2 with total area 1; node (iy, ix) sits at
  (x, y) = (ix / n, iy / n), so arrays are indexed ``[iy, ix]`` and row 0 is
  the y = 0 row;
* d^c = i(-d + dbar) / 4pi, hence the density of dd^c u with respect to
  area is ``laplacian(u) / (4 pi)`` and
  ``int du ^ d^c v = (1/4pi) int grad u . grad v``.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import NonZeroMeanRHS

FOUR_PI = 4.0 * np.pi


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid with ``n_side`` nodes per axis."""

    n_side: int

    def __post_init__(self):
        if self.n_side < 4 or self.n_side % 2:
            raise ValueError(f"n_side must be even and >= 4, got {self.n_side}")

    @property
    def h(self):
        return 1.0 / self.n_side

    @property
    def cell_area(self):
        return 1.0 / self.n_side**2

    @property
    def shape(self):
        return (self.n_side, self.n_side)

    @cached_property
    def coords(self):
        """Node coordinates ``(X, Y)``, each of shape ``(n, n)``."""
        t = np.arange(self.n_side) / self.n_side
        return np.meshgrid(t, t, indexing="xy")

    @cached_property
    def laplacian_symbol(self):
        """Eigenvalues of the 5-point periodic Laplacian in FFT order."""
        n = self.n_side
        k = 2.0 * np.pi * np.fft.fftfreq(n, d=1.0 / n) / n
        lam1 = -(2.0 - 2.0 * np.cos(k)) * n**2
        return lam1[None, :] + lam1[:, None]

    def integrate(self, f):
        """Plain node quadrature ``sum f * cell_area``."""
        return float(np.sum(f)) * self.cell_area

    def mean(self, f):
        return float(np.mean(f))


def grid_of(f):
    """GridSpec matching the shape of a square field."""
    f = np.asarray(f)
    if f.ndim != 2 or f.shape[0] != f.shape[1]:
        raise ValueError(f"expected a square 2-D field, got shape {f.shape}")
    return GridSpec(f.shape[0])


@dataclass(frozen=True)
class BackgroundForm:
    """Density of the reference (1,1)-form omega; may change sign."""

    rho: np.ndarray
    V: float = 1.0

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        if not np.all(np.isfinite(rho)):
            raise ValueError("background form density must be finite")
        mass = grid_of(rho).integrate(rho)
        if abs(mass - 1.0) > 1e-12:
            raise ValueError(f"background form must have total mass 1, got {mass!r}")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "V", mass)

    @property
    def grid(self):
        return grid_of(self.rho)

    @property
    def is_positive(self):
        return bool(np.all(self.rho >= 0))

    @classmethod
    def lebesgue(cls, grid):
        return cls(np.ones(grid.shape))

    @classmethod
    def cosine(cls, grid, amplitude):
        """rho = 1 + amplitude * cos(2 pi x); sign-changing when |A| > 1."""
        X, _ = grid.coords
        rho = 1.0 + amplitude * np.cos(2 * np.pi * X)
        return cls(rho - grid.integrate(rho) + 1.0)

    @classmethod
    def from_density(cls, rho):
        """Rescale an arbitrary density with positive total mass to mass 1."""
        rho = np.asarray(rho, dtype=float)
        mass = grid_of(rho).integrate(rho)
        if mass <= 0:
            raise ValueError("density must have positive total mass")
        rho = rho / mass
        return cls(rho - grid_of(rho).integrate(rho) + 1.0)


def laplacian(u):
    """5-point periodic Laplacian scaled by n_side^2."""
    u = np.asarray(u, dtype=float)
    n = u.shape[0]
    return n**2 * (np.roll(u, 1, 0) + np.roll(u, -1, 0)
                   + np.roll(u, 1, 1) + np.roll(u, -1, 1) - 4.0 * u)


def ddc(u):
    """Area density of dd^c u."""
    return laplacian(u) / FOUR_PI


def poisson_solve(f, tol=1e-10):
    """Zero-mean solution of ``laplacian(u) = f`` by exact spectral inversion.

    Raises NonZeroMeanRHS when ``mean(f)`` exceeds ``tol * max(1, |f|_inf)``.
    """
    f = np.asarray(f, dtype=float)
    grid = grid_of(f)
    m = float(np.mean(f))
    if abs(m) > tol * max(1.0, float(np.max(np.abs(f)))):
        raise NonZeroMeanRHS(m)
    F = np.fft.fft2(f - m)
    sym = grid.laplacian_symbol.copy()
    sym[0, 0] = 1.0
    U = F / sym
    U[0, 0] = 0.0
    return np.real(np.fft.ifft2(U))


def dirichlet(u, v):
    """``int du ^ d^c v = -sum u * laplacian(v) / 4pi * cell_area``."""
    u = np.asarray(u, dtype=float)
    grid = grid_of(u)
    return -float(np.sum(u * laplacian(v))) * grid.cell_area / FOUR_PI


def chordal_sq(X, Y, p):
    """Smooth periodic squared distance to ``p``.

    ``(sin^2(pi dx) + sin^2(pi dy)) / pi^2``; equals the flat squared distance
    up to a factor 1 + O(d^2) and vanishes only at ``p``.
    """
    sx = np.sin(np.pi * (X - p[0]))
    sy = np.sin(np.pi * (Y - p[1]))
    return (sx * sx + sy * sy) / np.pi**2


def torus_distance(X, Y, p):
    """Flat (minimum image) distance to ``p``."""
    dx = np.abs(X - p[0]) % 1.0
    dy = np.abs(Y - p[1]) % 1.0
    dx = np.minimum(dx, 1.0 - dx)
    dy = np.minimum(dy, 1.0 - dy)
    return np.hypot(dx, dy)


def _bilinear_stencil(n, x, y):
    gx = np.mod(np.asarray(x, dtype=float), 1.0) * n
    gy = np.mod(np.asarray(y, dtype=float), 1.0) * n
    ix = np.floor(gx).astype(np.int64)
    iy = np.floor(gy).astype(np.int64)
    fx = gx - ix
    fy = gy - iy
    ix %= n
    iy %= n
    jx = (ix + 1) % n
    jy = (iy + 1) % n
    idx = (iy * n + ix, iy * n + jx, jy * n + ix, jy * n + jx)
    wts = ((1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy)
    return idx, wts


def interpolate(f, x, y):
    """Periodic bilinear interpolation of a grid field at points (x, y)."""
    f = np.asarray(f, dtype=float)
    idx, wts = _bilinear_stencil(f.shape[0], x, y)
    flat = f.ravel()
    return sum(w * flat[i] for i, w in zip(idx, wts))


def splat(grid, x, y, mass):
    """Distribute point masses to nodes with bilinear weights (transpose of
    ``interpolate``); returns node masses."""
    idx, wts = _bilinear_stencil(grid.n_side, x, y)
    out = np.zeros(grid.n_side**2)
    mass = np.broadcast_to(np.asarray(mass, dtype=float), np.shape(x))
    for i, w in zip(idx, wts):
        np.add.at(out, np.ravel(i), np.ravel(w * mass))
    return out.reshape(grid.shape)


def dirac_hat(grid, x0):
    """Unit-mass bilinear hat at ``x0`` as an area density."""
    return splat(grid, np.array([x0[0]]), np.array([x0[1]]), 1.0) / grid.cell_area


def green_function(x0, omega):
    """Grid Green function: ``dd^c g = delta_x0 - omega`` and ``int g omega = 0``.

    The Dirac mass is a bilinear hat, so g depends smoothly on ``x0`` and
    ``g - log d^2(., x0)`` stays bounded away from the pole as the grid
    refines.
    """
    grid = omega.grid
    delta = dirac_hat(grid, x0)
    g = poisson_solve(FOUR_PI * (delta - omega.rho))
    return g - grid.integrate(g * omega.rho)


def chordal_ratio(dx, dy):
    """``chordal_sq / |d|^2`` as a function of the offset; 1 at the origin."""
    dx = np.asarray(dx, dtype=float)
    dy = np.asarray(dy, dtype=float)
    r2 = dx * dx + dy * dy
    num = dx * dx * np.sinc(dx) ** 2 + dy * dy * np.sinc(dy) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(r2 > 0, num / np.where(r2 > 0, r2, 1.0), 1.0)
