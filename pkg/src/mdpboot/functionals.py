"""Quantile and copula functionals over discretized continuous laws.

Generalized inverses, quantile-process differences, a polynomially weighted
Kolmogorov-Smirnov distance, empirical copulas, the copula map's Hadamard
derivative, and the discretized rate functionals built on the quadratic
solver from ``rate``.  Continuous laws enter only through user-specified
grids; one optimization engine serves every rate functional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ComplexityError, InfeasibleError, InputError
from .measures import FiniteProbabilityMeasure, TestFunction
from .rate import ConstraintSet, EQUALITY, LinearConstraint, min_rate_linear

GRID_BUDGET = 10_000


@dataclass(frozen=True)
class StepCdf:
    """A right-continuous step distribution function.

    ``xs`` are the strictly increasing jump points, ``Fs`` the nondecreasing
    values attained at them; the last value must be 1 within 1e-12.
    """

    xs: tuple
    Fs: tuple

    def __init__(self, xs: Sequence[float], Fs: Sequence[float]):
        xv = tuple(float(x) for x in xs)
        fv = tuple(float(v) for v in Fs)
        if len(xv) != len(fv) or not xv:
            raise InputError("xs and Fs must be nonempty and of equal length")
        for a, b in zip(xv, xv[1:]):
            if not a < b:
                raise InputError("jump points must be strictly increasing")
        for a, b in zip(fv, fv[1:]):
            if b < a:
                raise InputError("cdf values must be nondecreasing")
        if fv[0] < 0.0 or fv[-1] > 1.0 + 1e-12 or abs(fv[-1] - 1.0) > 1e-12:
            raise InputError(f"cdf must end at 1 within 1e-12, got {fv[-1]!r}")
        object.__setattr__(self, "xs", xv)
        object.__setattr__(self, "Fs", fv)

    @classmethod
    def from_sample(cls, values: Sequence[float]) -> "StepCdf":
        v = np.sort(np.asarray(values, dtype=float))
        if v.size == 0:
            raise InputError("empty sample")
        xs, counts = np.unique(v, return_counts=True)
        return cls(xs, np.cumsum(counts) / v.size)

    @classmethod
    def from_measure(cls, P: FiniteProbabilityMeasure) -> "StepCdf":
        if any(isinstance(a, tuple) for a in P.points):
            raise InputError("cdf requires scalar atoms")
        return cls(P.points, np.cumsum(P.probs_array()))

    def evaluate(self, x: float) -> float:
        idx = np.searchsorted(self.xs, x, side="right")
        return 0.0 if idx == 0 else self.Fs[idx - 1]


@dataclass(frozen=True)
class GridFunction:
    """Real values tabulated on an increasing grid, linearly interpolated."""

    grid: tuple
    values: tuple

    def __init__(self, grid: Sequence[float], values: Sequence[float]):
        g = tuple(float(x) for x in grid)
        v = tuple(float(x) for x in values)
        if len(g) != len(v) or not g:
            raise InputError("grid and values must be nonempty and of equal length")
        for a, b in zip(g, g[1:]):
            if not a < b:
                raise InputError("grid must be strictly increasing")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    def __call__(self, x):
        return np.interp(np.asarray(x, dtype=float), self.grid, self.values)

    @property
    def lo(self) -> float:
        return self.grid[0]

    @property
    def hi(self) -> float:
        return self.grid[-1]


@dataclass(frozen=True)
class GridFunction2D:
    """Values on a product grid, bilinearly interpolated."""

    ugrid: tuple
    vgrid: tuple
    values: tuple  # row i matches ugrid[i], column j matches vgrid[j]

    def __init__(self, ugrid, vgrid, values):
        ug = tuple(float(x) for x in ugrid)
        vg = tuple(float(x) for x in vgrid)
        vals = tuple(tuple(float(x) for x in row) for row in values)
        if not ug or not vg:
            raise InputError("grids must be nonempty")
        for g in (ug, vg):
            for a, b in zip(g, g[1:]):
                if not a < b:
                    raise InputError("grids must be strictly increasing")
        if len(vals) != len(ug) or any(len(row) != len(vg) for row in vals):
            raise InputError("values must be a len(ugrid) x len(vgrid) table")
        object.__setattr__(self, "ugrid", ug)
        object.__setattr__(self, "vgrid", vg)
        object.__setattr__(self, "values", vals)

    def interp(self, u: float, v: float) -> float:
        ug = np.asarray(self.ugrid)
        vg = np.asarray(self.vgrid)
        table = np.asarray(self.values)
        u = min(max(u, ug[0]), ug[-1])
        v = min(max(v, vg[0]), vg[-1])
        i = min(int(np.searchsorted(ug, u, side="right")) - 1, len(ug) - 2) if len(ug) > 1 else 0
        j = min(int(np.searchsorted(vg, v, side="right")) - 1, len(vg) - 2) if len(vg) > 1 else 0
        i = max(i, 0)
        j = max(j, 0)
        if len(ug) == 1:
            fu = 0.0
        else:
            fu = (u - ug[i]) / (ug[i + 1] - ug[i])
        if len(vg) == 1:
            fv = 0.0
        else:
            fv = (v - vg[j] ) / (vg[j + 1] - vg[j])
        i2 = min(i + 1, len(ug) - 1)
        j2 = min(j + 1, len(vg) - 1)
        return float(
            (1 - fu) * (1 - fv) * table[i, j]
            + fu * (1 - fv) * table[i2, j]
            + (1 - fu) * fv * table[i, j2]
            + fu * fv * table[i2, j2]
        )


def generalized_inverse(F: StepCdf, p: float) -> float:
    """inf{x : F(x) >= p} for p in (0, 1)."""
    if not 0.0 < p < 1.0:
        raise InputError(f"quantile level must lie in (0, 1), got {p!r}")
    idx = int(np.searchsorted(F.Fs, p, side="left"))
    idx = min(idx, len(F.xs) - 1)
    return F.xs[idx]


def quantile_process_diff(
    Fstar: StepCdf, Fhat: StepCdf, grid: Sequence[float]
) -> GridFunction:
    """Pointwise difference of the two generalized inverses on a level grid."""
    g = np.asarray(grid, dtype=float)
    if g.size == 0 or np.any(g <= 0.0) or np.any(g >= 1.0):
        raise InputError("grid levels must lie strictly inside (0, 1)")
    star = np.asarray(Fstar.xs)[
        np.minimum(np.searchsorted(Fstar.Fs, g, side="left"), len(Fstar.xs) - 1)
    ]
    hat = np.asarray(Fhat.xs)[
        np.minimum(np.searchsorted(Fhat.Fs, g, side="left"), len(Fhat.xs) - 1)
    ]
    return GridFunction(g, star - hat)


def rate_Iq(
    density: Callable[[np.ndarray], np.ndarray],
    support: tuple,
    phi: GridFunction,
    resolution: int,
) -> float:
    """Discretized quantile rate functional.

    The base law P has the given density on ``support`` = (lo, hi); cell
    masses are midpoint values normalized to total 1.  On cells whose
    cumulative level x falls inside [phi.lo, phi.hi] the perturbation density
    is pinned to q = -phi(x) * density (the displayed constraint, sign kept
    verbatim); off those cells the zero-total completion with minimal
    quadratic cost is the constant -on_mass / off_mass.  Returns
    0.5 * sum(q^2 * mass), or inf when no off-region mass can absorb a
    nonzero pinned total.
    """
    lo, hi = float(support[0]), float(support[1])
    if not lo < hi:
        raise InputError("support must be an interval (lo, hi)")
    if resolution < 2:
        raise InputError("resolution must be at least 2")
    edges = np.linspace(lo, hi, resolution + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    dens = np.asarray(density(mids), dtype=float)
    if np.any(dens < 0.0) or not np.all(np.isfinite(dens)):
        raise InputError("density must be finite and nonnegative on the support")
    w = dens * np.diff(edges)
    total = float(w.sum())
    if total <= 0.0:
        raise InputError("density integrates to zero on the support")
    w = w / total
    levels = np.cumsum(w) - 0.5 * w
    on = (levels >= phi.lo) & (levels <= phi.hi)
    q = np.zeros_like(w)
    q[on] = -phi(levels[on]) * dens[on]
    on_mass = float(np.dot(q[on], w[on]))
    off_mass = float(w[~on].sum())
    if off_mass <= 0.0:
        if abs(on_mass) <= 1e-10:
            return 0.5 * float(np.dot(q * q, w))
        return math.inf
    q[~on] = -on_mass / off_mass
    return 0.5 * float(np.dot(q * q, w))


def weighted_ks(P_cdf: StepCdf, Q_cdf: StepCdf, kappa: float) -> float:
    """sup over x of |F_Q(x) - F_P(x)| (1 + |x|)^kappa.

    The weight convention (1 + |x|)^kappa reduces to the classic
    Kolmogorov-Smirnov distance at kappa = 0.  The difference of two step
    functions is constant between consecutive jump points, and the weight is
    monotone in |x| on each constancy interval, so the supremum is attained in
    the limit at an interval endpoint; left limits at right endpoints are
    included (supremum, not maximum).
    """
    if kappa < 0:
        raise InputError("kappa must be nonnegative")
    points = np.union1d(np.asarray(P_cdf.xs), np.asarray(Q_cdf.xs))
    fp = np.asarray([P_cdf.evaluate(x) for x in points])
    fq = np.asarray([Q_cdf.evaluate(x) for x in points])
    diff = np.abs(fq - fp)
    best = 0.0
    for j in range(len(points) - 1):
        if diff[j] == 0.0:
            continue
        wmax = (1.0 + max(abs(points[j]), abs(points[j + 1]))) ** kappa
        best = max(best, diff[j] * wmax)
    # the last interval has diff 0 (both cdfs reach 1), and so does x < min
    if diff[-1] != 0.0:
        best = max(best, diff[-1] * (1.0 + abs(points[-1])) ** kappa)
    return best


def empirical_copula(
    sample: Sequence, ugrid: Sequence[float], vgrid: Sequence[float]
) -> GridFunction2D:
    """Plug-in copula of a bivariate sample on a grid inside (0, 1)^2."""
    pts = np.asarray(sample, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
        raise InputError("sample must be an (n, 2) array of pairs")
    ug = np.asarray(ugrid, dtype=float)
    vg = np.asarray(vgrid, dtype=float)
    for g in (ug, vg):
        if g.size == 0 or np.any(g <= 0.0) or np.any(g >= 1.0):
            raise InputError("copula grid must lie strictly inside (0, 1)")
    n = pts.shape[0]
    xs = np.sort(pts[:, 0])
    ys = np.sort(pts[:, 1])
    xq = xs[np.minimum(np.ceil(ug * n).astype(int) - 1, n - 1)]
    yq = ys[np.minimum(np.ceil(vg * n).astype(int) - 1, n - 1)]
    below_x = pts[:, 0][:, None] <= xq[None, :]  # n x |ugrid|
    below_y = pts[:, 1][:, None] <= yq[None, :]  # n x |vgrid|
    table = below_x.astype(float).T @ below_y.astype(float) / n
    return GridFunction2D(ug, vg, table)


@dataclass(frozen=True)
class BivariateModel:
    """Callable bundle describing a smooth bivariate law on a rectangle.

    Holds the joint cdf partials, marginal quantile functions and marginal
    densities needed by the copula derivative and rate functional.
    """

    dH_dx: Callable[[float, float], float]
    dH_dy: Callable[[float, float], float]
    F_inv: Callable[[float], float]
    G_inv: Callable[[float], float]
    f: Callable[[float], float]
    g: Callable[[float], float]

    @classmethod
    def independent_uniform(cls) -> "BivariateModel":
        """Product of two uniform laws on [0, 1]^2 (H(x, y) = x y)."""
        return cls(
            dH_dx=lambda x, y: y,
            dH_dy=lambda x, y: x,
            F_inv=lambda u: u,
            G_inv=lambda v: v,
            f=lambda x: 1.0,
            g=lambda y: 1.0,
        )


def copula_hadamard_derivative(
    model: BivariateModel, alpha: GridFunction2D, u: float, v: float
) -> float:
    """Derivative of the copula map applied to a joint-cdf perturbation alpha.

    alpha(s, t) is read from its grid by bilinear interpolation; the marginal
    sections alpha(s, +inf) and alpha(+inf, t) are taken from the grid's last
    column and row.  Requires strictly positive marginal densities at the
    evaluated quantiles.
    """
    x = model.F_inv(u)
    y = model.G_inv(v)
    fx = model.f(x)
    gy = model.g(y)
    if not fx > 0.0 or not gy > 0.0:
        raise InputError(f"marginal density vanishes at a quantile: f={fx!r}, g={gy!r}")
    a_xy = alpha.interp(x, y)
    a_x_inf = alpha.interp(x, alpha.vgrid[-1])
    a_inf_y = alpha.interp(alpha.ugrid[-1], y)
    return (
        a_xy
        - model.dH_dx(x, y) * a_x_inf / fx
        - model.dH_dy(x, y) * a_inf_y / gy
    )


def rate_Ic(
    P: FiniteProbabilityMeasure,
    model: BivariateModel,
    phi: GridFunction2D,
) -> tuple:
    """Discretized copula rate functional.

    P is a bivariate grid measure; the perturbation density q lives on its
    atoms, alpha is the cumulative sum of q against P, and the derivative map
    becomes linear in q.  Minimizing 0.5 sum(q^2 mass) subject to the
    derivative matching phi at every grid node reduces to the Gram-matrix
    solver; returns its (rate, argmin), with rate inf when the constraint
    system is inconsistent.
    """
    if not all(isinstance(a, tuple) for a in P.points):
        raise InputError("rate_Ic needs a bivariate grid measure")
    if P.size > GRID_BUDGET:
        raise ComplexityError(f"{P.size} grid atoms exceed the budget of {GRID_BUDGET}")
    xs = np.asarray([a[0] for a in P.points])
    ys = np.asarray([a[1] for a in P.points])
    constraints = []
    for i, u in enumerate(phi.ugrid):
        for j, v in enumerate(phi.vgrid):
            xa = model.F_inv(u)
            yb = model.G_inv(v)
            fxa = model.f(xa)
            gyb = model.g(yb)
            if not fxa > 0.0 or not gyb > 0.0:
                raise InputError("marginal density vanishes at a constraint node")
            hx = model.dH_dx(xa, yb)
            hy = model.dH_dy(xa, yb)
            in_x = (xs <= xa).astype(float)
            in_y = (ys <= yb).astype(float)
            coef = in_x * in_y - hx * in_x / fxa - hy * in_y / gyb
            constraints.append(
                LinearConstraint(TestFunction(coef), EQUALITY, phi.values[i][j])
            )
    return min_rate_linear(ConstraintSet(P, constraints))
