"""Independent brute-force oracles used by the test suite.

These deliberately avoid the solver paths they check: the quadratic
minimization oracle scans an explicit coefficient grid over the feasible
affine subspace, and the joint-tail oracle enumerates outer and inner count
vectors directly.
"""

import math

import numpy as np
from scipy.special import gammaln


def compositions(total, parts):
    """All nonnegative integer tuples of the given length summing to total."""
    if parts == 1:
        return [(total,)]
    out = []
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            out.append((first,) + rest)
    return out


def brute_force_min_rate(probs, eq, ineq, step, box):
    """Grid minimization of 0.5 sum(g^2 p) over zero-mass densities.

    eq and ineq are lists of (f_values, c) pairs.  The zero-mass condition and
    the equality rows fix an affine subspace; its least-norm point plus an
    orthonormal null basis are scanned at the given step over [-box, box] per
    free dimension, filtering the at-least rows pointwise.
    Returns (rate, g) with rate inf when nothing on the grid is feasible.
    """
    p = np.asarray(probs, dtype=float)
    rows = [p.copy()]
    rhs = [0.0]
    for f, c in eq:
        rows.append(np.asarray(f, dtype=float) * p)
        rhs.append(float(c))
    A = np.vstack(rows)
    b = np.asarray(rhs, dtype=float)
    g0, *_ = np.linalg.lstsq(A, b, rcond=None)
    if np.linalg.norm(A @ g0 - b) > 1e-9 * max(1.0, float(np.linalg.norm(b))):
        return math.inf, None
    _, s, vt = np.linalg.svd(A)
    rank = int(np.sum(s > 1e-12 * s[0])) if s.size else 0
    null = vt[rank:].T
    d = null.shape[1]
    ineq_rows = [(np.asarray(f, dtype=float) * p, float(c)) for f, c in ineq]

    def feasible_mask(G):
        ok = np.ones(len(G), dtype=bool)
        for row, c in ineq_rows:
            ok &= G @ row >= c - 1e-9
        return ok

    if d == 0:
        G = g0[None, :]
        ok = feasible_mask(G)
        if not ok.any():
            return math.inf, None
        return 0.5 * float((g0 * g0) @ p), g0

    axis = np.arange(-box, box + step / 2.0, step)
    if d == 1:
        inner = np.zeros((1, 0))
    else:
        mesh = np.meshgrid(*([axis] * (d - 1)), indexing="ij")
        inner = np.stack([m.ravel() for m in mesh], axis=1)
    best = math.inf
    best_g = None
    for a0 in axis:
        coeffs = np.column_stack([np.full(len(inner), a0), inner])
        G = g0[None, :] + coeffs @ null.T
        ok = feasible_mask(G)
        if not ok.any():
            continue
        Gok = G[ok]
        obj = 0.5 * (Gok * Gok) @ p
        i = int(np.argmin(obj))
        if obj[i] < best:
            best = float(obj[i])
            best_g = Gok[i]
    return best, best_g


def exact_joint_tail(probs, n, k, fvals, gvals, theta_boot, theta_emp):
    """Nested enumeration of the two-stage deviation event probability."""
    p = np.asarray(probs, dtype=float)
    f = np.asarray(fvals, dtype=float)
    g = np.asarray(gvals, dtype=float)
    m = len(p)
    mean_f = float(f @ p)
    total = 0.0
    for outer in compositions(n, m):
        c = np.asarray(outer, dtype=float)
        if np.any((c > 0) & (p == 0.0)):
            continue
        live = c > 0
        log_outer = (
            gammaln(n + 1)
            - gammaln(c + 1).sum()
            + float(c[live] @ np.log(p[live]))
        )
        q = c / n
        if not float(f @ q) - mean_f > theta_emp:
            continue
        mean_g_hat = float(g @ q)
        q_live = q[live]
        g_live = g[live]
        inner_sum = 0.0
        for inner in compositions(k, int(live.sum())):
            ci = np.asarray(inner, dtype=float)
            log_inner = (
                gammaln(k + 1)
                - gammaln(ci + 1).sum()
                + float(ci @ np.log(q_live))
            )
            if float(g_live @ ci) / k - mean_g_hat > theta_boot:
                inner_sum += math.exp(log_inner)
        total += math.exp(log_outer) * inner_sum
    return total
