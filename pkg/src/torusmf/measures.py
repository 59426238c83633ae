"""Probability measures on the grid, klt pole measures and log-pole fields."""

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DivergentIntegral, KltViolation
from .grid import (FOUR_PI, GridSpec, chordal_ratio, chordal_sq,
                   green_function, grid_of, interpolate, poisson_solve, splat,
                   torus_distance)
from .quadrature import (BOUNDED, DIVERGING, INCONCLUSIVE, PoleQuadrature,
                         RefinementTrace, disk_integral)

MERGE_TOL = 1e-12


@dataclass(frozen=True)
class Pole:
    """Log-pole factor ``chordal_sq(., (x, y))^(-c)``."""

    x: float
    y: float
    c: float

    @property
    def center(self):
        return (self.x, self.y)


@dataclass(frozen=True, eq=False)
class Measure:
    """Probability measure on the torus.

    ``weights`` are the node masses (summing to 1) used by every grid
    pairing. The analytic description is ``base * prod_k s_k^(-c_k) /
    normalization`` where ``base`` is a nonnegative grid density (bilinearly
    interpolated off nodes) and ``s_k`` the chordal squared distance to pole
    k. Measures without poles have ``weights = base * cell_area``.
    """

    weights: np.ndarray
    base: np.ndarray
    poles: tuple = ()
    normalization: float = 1.0

    def __post_init__(self):
        for name in ("weights", "base"):
            a = np.array(getattr(self, name), dtype=float)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        object.__setattr__(self, "poles", tuple(self.poles))

    @property
    def grid(self):
        return grid_of(self.weights)

    @property
    def density(self):
        """Cell-averaged density (node mass / cell area)."""
        return self.weights / self.grid.cell_area

    @property
    def mass(self):
        return float(np.sum(self.weights))

    @property
    def is_singular(self):
        return any(p.c > 0 for p in self.poles)

    def local_density(self, center, exclude=None):
        """Density near ``center`` as a callable of offsets ``(dx, dy)``.

        The factor of the pole ``exclude`` (an index) is replaced by its
        chordal ratio, so the callable is bounded near that pole and the true
        density is ``local(d) * |d|^(-2 c_exclude)``.
        """
        cx, cy = center

        def local(dx, dy):
            x, y = cx + dx, cy + dy
            out = interpolate(self.base, x, y) / self.normalization
            for k, p in enumerate(self.poles):
                if k == exclude:
                    out = out * chordal_ratio(dx, dy) ** (-p.c)
                else:
                    out = out * chordal_sq(x, y, p.center) ** (-p.c)
            return out
        return local

    def ball_mass(self, center, r):
        """``mu(B(center, r))`` from the analytic description."""
        k = next((i for i, p in enumerate(self.poles)
                  if np.hypot(p.x - center[0], p.y - center[1]) < MERGE_TOL), None)
        e = self.poles[k].c if k is not None else 0.0
        return disk_integral(self.local_density(center, exclude=k), e, r)


def lebesgue(grid):
    """Normalized area measure."""
    return from_density(np.ones(grid.shape))


def from_density(f):
    """Measure with node density proportional to ``f`` (nonnegative)."""
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)) or np.any(f < 0):
        raise ValueError("density must be finite and nonnegative")
    total = float(np.sum(f))
    if total <= 0:
        raise ValueError("density must have positive mass")
    grid = grid_of(f)
    return Measure(weights=f / total, base=f / (total * grid.cell_area))


def from_weights(w):
    """Measure from node masses (renormalized to total mass 1)."""
    w = np.asarray(w, dtype=float)
    return from_density(w / grid_of(w).cell_area)


@lru_cache(maxsize=64)
def _quadrature(n_side, centers):
    return PoleQuadrature(GridSpec(n_side), centers)


def quadrature_for(grid, centers):
    """Cached PoleQuadrature for a grid and a tuple of centers."""
    key = tuple((float(x), float(y)) for x, y in centers)
    return _quadrature(grid.n_side, key)


def _merge_factors(factors):
    """Combine ``(center, exponent)`` pairs sharing a center."""
    merged = []
    for c, e in factors:
        for i, (c2, e2) in enumerate(merged):
            if np.hypot(c[0] - c2[0], c[1] - c2[1]) < MERGE_TOL:
                merged[i] = (c2, e2 + e)
                break
        else:
            merged.append((tuple(map(float, c)), float(e)))
    return merged


def klt_measure(poles, grid=None, base=None):
    """Normalized measure with density proportional to ``base * prod s_i^(-c_i)``.

    ``poles`` is a sequence of ``(x, y, c)`` with every ``c < 1``; ``grid``
    defaults to 64 x 64 (or the shape of ``base``). Node masses integrate the
    density over the bilinear hat of each node, so pairing a grid field with
    the measure equals the exact integral of its bilinear interpolant.
    """
    poles = tuple(Pole(float(x) % 1.0, float(y) % 1.0, float(c)) for x, y, c in poles)
    for p in poles:
        if not p.c < 1:
            raise KltViolation(f"pole at ({p.x}, {p.y}) has exponent c = {p.c} >= 1")
    if grid is None:
        grid = grid_of(base) if base is not None else GridSpec(64)
    base = np.ones(grid.shape) if base is None else np.asarray(base, dtype=float)
    if np.any(base < 0) or not np.all(np.isfinite(base)):
        raise ValueError("base density must be finite and nonnegative")
    if not poles:
        return from_density(base)
    quad = quadrature_for(grid, [p.center for p in poles])
    far, polar, tails = quad.evaluate(lambda x, y: interpolate(base, x, y),
                                      [p.c for p in poles])
    w = far.copy()
    for pp, tail, p in zip(polar, tails, poles):
        w += splat(grid, pp["x"], pp["y"], pp["value"])
        w += splat(grid, np.array([p.x]), np.array([p.y]), tail)
    Z = float(np.sum(w))
    return Measure(weights=w / Z, base=base, poles=poles, normalization=Z)


def integrate(f, mu):
    """``int f dmu`` for a grid field ``f`` (exact for its bilinear interpolant)."""
    f = np.asarray(f, dtype=float)
    if f.shape != mu.weights.shape:
        raise ValueError(f"field shape {f.shape} does not match measure {mu.weights.shape}")
    if not np.all(np.isfinite(f[mu.weights > 0])):
        raise ValueError("field must be finite on the support of the measure")
    return float(np.sum(f * mu.weights))


@dataclass(frozen=True, eq=False)
class SingularField:
    """Grid field plus declared log poles: ``u = smooth + sum a_j log s_j``."""

    smooth: np.ndarray
    poles: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "smooth", np.asarray(self.smooth, dtype=float))
        object.__setattr__(self, "poles", tuple(
            (float(x) % 1.0, float(y) % 1.0, float(a)) for x, y, a in self.poles))

    @property
    def grid(self):
        return grid_of(self.smooth)

    def __mul__(self, t):
        t = float(t)
        return SingularField(t * self.smooth,
                             tuple((x, y, t * a) for x, y, a in self.poles))

    __rmul__ = __mul__

    def __add__(self, other):
        if isinstance(other, SingularField):
            return SingularField(self.smooth + other.smooth, self.poles + other.poles)
        return SingularField(self.smooth + other, self.poles)

    def on_grid(self, floor=None):
        """Node values; pole nodes get ``floor`` (default: -inf/+inf by sign)."""
        X, Y = self.grid.coords
        out = self.smooth.copy()
        with np.errstate(divide="ignore", invalid="ignore"):
            for x, y, a in self.poles:
                out = out + a * np.log(chordal_sq(X, Y, (x, y)))
        if floor is not None:
            out = np.where(np.isfinite(out), out, floor)
        return out


def _log_s_regular_laplacian(X, Y, p):
    """Regular part of ``laplacian(log s_p) / 4pi`` (the Dirac mass removed).

    At the pole the angular average -pi/4 is used.
    """
    dx = X - p[0]
    dy = Y - p[1]
    s = chordal_sq(X, Y, p)
    lap_s = 2.0 * (np.cos(2 * np.pi * dx) + np.cos(2 * np.pi * dy))
    grad2 = (np.sin(2 * np.pi * dx) ** 2 + np.sin(2 * np.pi * dy) ** 2) / np.pi**2
    with np.errstate(divide="ignore", invalid="ignore"):
        q = (lap_s / s - grad2 / s**2) / FOUR_PI
    return np.where(s > 1e-300, q, -np.pi / 4)


def green_pole(x0, omega):
    """Green function with an analytic pole model.

    Returns ``SingularField(h, [(x0, 1)])`` with ``dd^c(log s + h) = delta -
    omega``; ``h`` solves ``dd^c h = -omega - q`` with ``q`` the regular part
    of ``dd^c log s``, shifted so the model agrees with ``green_function``
    (normalized by ``int g omega = 0``) away from the pole.
    """
    grid = omega.grid
    X, Y = grid.coords
    x0 = (float(x0[0]) % 1.0, float(x0[1]) % 1.0)
    rhs = -omega.rho - _log_s_regular_laplacian(X, Y, x0)
    rhs = rhs - rhs.mean()
    h = poisson_solve(FOUR_PI * rhs)
    # fix the additive constant against the grid Green function (which
    # carries the normalization int g omega = 0) away from the pole
    g = green_function(x0, omega)
    far = torus_distance(X, Y, x0) >= 0.25
    with np.errstate(divide="ignore"):
        model = h + np.log(chordal_sq(X, Y, x0))
    h = h + float(np.median((g - model)[far]))
    return SingularField(h, ((x0[0], x0[1], 1.0),))


@dataclass
class ExpIntegral:
    """Value and verdict of ``int e^(-t u) dmu``."""

    value: float
    verdict: str
    trace: RefinementTrace = field(repr=False, default=None)


def exp_integral(u, t, mu):
    """``int e^(-t u) dmu`` for a grid field or a SingularField.

    Grid fields pair with the node masses (always Bounded). Singular fields
    and singular measures go through the pole-refined quadrature; the
    verdict is Bounded, Diverging or Inconclusive.
    """
    t = float(t)
    if not isinstance(u, SingularField):
        v = -t * np.asarray(u, dtype=float)
        m = float(np.max(v[mu.weights > 0]))
        val = float(np.exp(m) * np.sum(np.exp(v - m) * mu.weights))
        levels = np.full(6, val)
        return ExpIntegral(val, BOUNDED, RefinementTrace(levels, 0.0, BOUNDED, val))
    if u.grid != mu.grid:
        raise ValueError("field and measure live on different grids")
    factors = _merge_factors([((x, y), t * a) for x, y, a in u.poles]
                             + [(p.center, p.c) for p in mu.poles])
    factors = [(c, e) for c, e in factors if e != 0.0]
    smooth_exp = np.exp(-t * u.smooth)
    base = mu.base

    def smooth(x, y):
        return interpolate(smooth_exp, x, y) * interpolate(base, x, y)

    if not factors:
        val = float(np.sum(smooth_exp * mu.weights))
        return ExpIntegral(val, BOUNDED, RefinementTrace(np.full(6, val), 0.0, BOUNDED, val))
    quad = quadrature_for(mu.grid, [c for c, _ in factors])
    trace = quad.refine(smooth, [e for _, e in factors])
    trace.partials = trace.partials / mu.normalization
    trace.tail = trace.tail / mu.normalization
    trace.value = trace.value / mu.normalization
    return ExpIntegral(trace.value, trace.verdict, trace)


def log_exp_moment(u, beta, mu):
    """``log int e^(beta u) dmu`` with overflow protection.

    Raises DivergentIntegral when the pole-refined quadrature does not
    certify a finite value.
    """
    beta = float(beta)
    if isinstance(u, SingularField):
        m = float(np.max(beta * u.smooth))
        res = exp_integral(u + (-m / beta), -beta, mu)
        if res.verdict != BOUNDED:
            raise DivergentIntegral(
                f"int e^(beta u) dmu is {res.verdict} at beta = {beta}", res.trace)
        return float(np.log(res.value) + m)
    v = beta * np.asarray(u, dtype=float)
    support = mu.weights > 0
    m = float(np.max(v[support]))
    return float(np.log(np.sum(np.exp(v[support] - m) * mu.weights[support])) + m)


__all__ = ["Pole", "Measure", "lebesgue", "from_density", "from_weights",
           "klt_measure", "integrate", "SingularField", "green_pole",
           "ExpIntegral", "exp_integral", "log_exp_moment", "quadrature_for",
           "BOUNDED", "DIVERGING", "INCONCLUSIVE"]
