"""Quadratic rate functions and their minimization over linear constraint sets.

The central quantity is half the squared L2(P) norm of a signed-measure
density, ``rate_of``.  Minimizers over finitely many linear constraints are
computed through the Gram matrix of the centered constraint functions; this is
exact on finite supports.  Interiors and closures of constraint sets are not
distinguished: the infimum over the constraint set itself is computed, and
boundary-degenerate gaps between the two are not modeled.

Infinity is a distinguished sentinel (math.inf), propagated rather than
raised; the CLI prints it as "inf".
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .errors import ComplexityError, InputError
from .measures import (
    FiniteProbabilityMeasure,
    SignedMeasureDensity,
    TestFunction,
)

EQUALITY = "equality"
AT_LEAST = "at-least"

MAX_INEQUALITIES = 12
RESIDUAL_RTOL = 1e-8
CONSTRAINT_TOL = 1e-8


@dataclass(frozen=True)
class LinearConstraint:
    """One linear condition on a signed measure: integral of f equals / exceeds c."""

    f: TestFunction
    kind: str
    c: float

    def __init__(self, f: TestFunction, kind: str, c: float):
        if kind not in (EQUALITY, AT_LEAST):
            raise InputError(f"constraint kind must be {EQUALITY!r} or {AT_LEAST!r}")
        c = float(c)
        if not math.isfinite(c):
            raise InputError("constraint right-hand side must be finite")
        if kind == AT_LEAST and c != 0.0 and len(set(f.values)) == 1:
            raise InputError(
                "at-least constraint with constant f and nonzero c is infeasible or trivial"
            )
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "c", c)


@dataclass(frozen=True)
class ConstraintSet:
    """A nonempty conjunction of linear constraints over one base measure."""

    base: FiniteProbabilityMeasure
    constraints: tuple

    def __init__(self, base: FiniteProbabilityMeasure, constraints: Sequence[LinearConstraint]):
        cons = tuple(constraints)
        if not cons:
            raise InputError("constraint set must be nonempty")
        for con in cons:
            if con.f.size != base.size:
                raise InputError(
                    f"constraint function on {con.f.size} atoms does not match "
                    f"support of size {base.size}"
                )
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "constraints", cons)


@dataclass(frozen=True)
class ShiftVector:
    """Per-constraint shift values subtracted from the right-hand sides."""

    values: tuple

    def __init__(self, values: Sequence[float]):
        vals = tuple(float(v) for v in values)
        for v in vals:
            if not math.isfinite(v):
                raise InputError("shift values must be finite")
        object.__setattr__(self, "values", vals)


def rate_of(g: SignedMeasureDensity) -> float:
    """Half the P-weighted sum of squared density values."""
    dens = g.density_array()
    p = g.base.probs_array()
    return 0.5 * float(np.dot(dens * dens, p))


def _mean_var(p: np.ndarray, f: np.ndarray) -> tuple:
    mean = float(np.dot(f, p))
    var = float(np.dot((f - mean) ** 2, p))
    return mean, var


def min_rate_halfspace(
    P: FiniteProbabilityMeasure, f: TestFunction, c: float
) -> tuple:
    """Minimal rate over the half-space of signed measures with integral of f >= c.

    Closed form: max(c, 0)^2 / (2 Var_P f), attained by the density
    c (f - E_P f) / Var_P f when c > 0 and by the zero measure when c <= 0.
    Returns (math.inf, None) when Var_P f = 0 and c > 0.
    """
    if f.size != P.size:
        raise InputError("test function does not match the support")
    c = float(c)
    p = P.probs_array()
    fv = f.values_array()
    mean, var = _mean_var(p, fv)
    if c <= 0.0:
        return 0.0, SignedMeasureDensity(P, np.zeros(P.size))
    if var <= 0.0:
        return math.inf, None
    g = c * (fv - mean) / var
    argmin = SignedMeasureDensity(P, g)
    return rate_of(argmin), argmin


def _solve_equalities(
    p: np.ndarray, phi: np.ndarray, rhs: np.ndarray
) -> Optional[np.ndarray]:
    """Least-norm density meeting the centered equality constraints, or None.

    phi holds centered constraint functions as rows; rhs the effective
    right-hand sides.  Singular Gram systems are solved in the least-norm
    sense and rejected when the residual exceeds RESIDUAL_RTOL * |rhs|.
    """
    if len(rhs) == 0:
        return np.zeros(phi.shape[1] if phi.ndim == 2 else 0)
    gram = (phi * p) @ phi.T
    lam, *_ = np.linalg.lstsq(gram, rhs, rcond=None)
    residual = gram @ lam - rhs
    norm_rhs = float(np.linalg.norm(rhs))
    if float(np.linalg.norm(residual)) > RESIDUAL_RTOL * max(norm_rhs, 1e-300):
        return None
    return phi.T @ lam


def min_rate_linear(
    cs: ConstraintSet, shift: Optional[ShiftVector] = None
) -> tuple:
    """Minimal rate over a conjunction of equality and at-least constraints.

    Equality systems are solved through the Gram matrix of centered constraint
    functions.  At-least constraints are handled by enumerating active subsets
    (at most 2^l for l <= MAX_INEQUALITIES) and keeping the cheapest candidate
    that satisfies every inactive constraint; for this convex objective the
    optimum's active set appears in the enumeration, so the result is exact.
    Returns (math.inf, None) when no candidate is feasible.
    """
    cons = cs.constraints
    if shift is not None and len(shift.values) != len(cons):
        raise InputError(
            f"shift has {len(shift.values)} entries for {len(cons)} constraints"
        )
    shifts = shift.values if shift is not None else (0.0,) * len(cons)
    p = cs.base.probs_array()
    fmat = np.vstack([con.f.values_array() for con in cons])
    means = fmat @ p
    phi = fmat - means[:, None]
    rhs = np.array([con.c - s for con, s in zip(cons, shifts)], dtype=float)

    eq_idx = [i for i, con in enumerate(cons) if con.kind == EQUALITY]
    ineq_idx = [i for i, con in enumerate(cons) if con.kind == AT_LEAST]
    if len(ineq_idx) > MAX_INEQUALITIES:
        raise ComplexityError(
            f"{len(ineq_idx)} at-least constraints exceed the cap of {MAX_INEQUALITIES}"
        )

    scale = max(1.0, float(np.max(np.abs(rhs))) if len(rhs) else 1.0)
    best_rate = math.inf
    best_g = None
    for r in range(len(ineq_idx) + 1):
        for active in combinations(ineq_idx, r):
            rows = eq_idx + list(active)
            g = _solve_equalities(p, phi[rows], rhs[rows])
            if g is None:
                continue
            slack = phi[ineq_idx] @ (p * g) - rhs[ineq_idx] if ineq_idx else np.array([])
            if len(slack) and float(np.min(slack)) < -CONSTRAINT_TOL * scale:
                continue
            candidate = 0.5 * float(np.dot(g * g, p))
            if candidate < best_rate:
                best_rate = candidate
                best_g = g
    if best_g is None:
        return math.inf, None
    argmin = SignedMeasureDensity(cs.base, best_g)
    return rate_of(argmin), argmin


def joint_rate(
    g2: SignedMeasureDensity, g1: SignedMeasureDensity, nu: float
) -> float:
    """Rate of a product deviation: nu * rate_of(g2) + rate_of(g1)."""
    if not nu > 0:
        raise InputError(f"weight nu must be positive, got {nu!r}")
    if g2.base.points != g1.base.points or g2.base.probs != g1.base.probs:
        raise InputError("joint rate needs both densities over the same base measure")
    return nu * rate_of(g2) + rate_of(g1)


def _check_symmetric(R: np.ndarray, name: str) -> np.ndarray:
    R = np.asarray(R, dtype=float)
    if R.size == 0:
        return R.reshape(0, 0)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise InputError(f"{name} must be a square matrix")
    if not np.allclose(R, R.T, rtol=0.0, atol=1e-12):
        raise InputError(f"{name} must be symmetric")
    return R


def _half_quadratic(R: np.ndarray, v: np.ndarray) -> float:
    """0.5 v' R^+ v via a least-norm pseudo-solve; inf when v leaves the column space."""
    if v.size == 0:
        return 0.0
    x, *_ = np.linalg.lstsq(R, v, rcond=None)
    residual = R @ x - v
    norm_v = float(np.linalg.norm(v))
    if float(np.linalg.norm(residual)) > RESIDUAL_RTOL * max(1.0, norm_v):
        return math.inf
    return 0.5 * float(np.dot(v, x))


def finite_dim_rate(
    y: Sequence[float],
    z: Sequence[float],
    R_f: Sequence[Sequence[float]],
    R_g: Sequence[Sequence[float]],
    fH: Sequence[float],
) -> float:
    """Quadratic rate of a finite-dimensional deviation vector (y, z).

    Computes 0.5 (y - fH)' R_f^+ (y - fH) + 0.5 z' R_g^+ z using least-norm
    pseudo-solves, returning inf when a block's vector has a component outside
    the column space of its covariance matrix.
    """
    y = np.asarray(y, dtype=float)
    z = np.asarray(z, dtype=float)
    fH = np.asarray(fH, dtype=float)
    Rf = _check_symmetric(R_f, "R_f")
    Rg = _check_symmetric(R_g, "R_g")
    if y.shape != fH.shape:
        raise InputError("y and the shift vector must have the same length")
    if Rf.shape[0] != y.size:
        raise InputError("R_f does not match the length of y")
    if Rg.shape[0] != z.size:
        raise InputError("R_g does not match the length of z")
    term1 = _half_quadratic(Rf, y - fH)
    if math.isinf(term1):
        return math.inf
    term2 = _half_quadratic(Rg, z)
    if math.isinf(term2):
        return math.inf
    return term1 + term2
