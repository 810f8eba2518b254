"""Tail-condition checkers and moderate-deviation zone calculus.

Sequences are restricted to the power-log family s_n = A n^(-beta) (log n)^(-mu),
which covers every normalizing sequence used here, and verdicts are decided
symbolically on the exponents (numeric limits cannot be decided at finite n).
Knife-edge exponent ties are reported as "boundary" rather than guessed, and
corners where only the scale A would decide are likewise "boundary", so all
verdicts are invariant under rescaling A.

Verdicts are meaningful for admissible normalizing sequences (decaying scale,
growing n * s_n^2); outside that zone the stated post-conditions, not raw
limits, are followed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InputError

SATISFIED = "satisfied"
VIOLATED = "violated"
BOUNDARY = "boundary"

BOUNDED = "bounded"
POWER = "power"
STRETCHED = "stretched_exponential"


@dataclass(frozen=True)
class TailModel:
    """Parametric tail family for a nonnegative variable Y.

    bounded:  P(Y > u) = 0 for u >= bound (uniform on [0, bound] when sampled)
    power:    P(Y > u) = min(1, u^(-t)), t > 2
    stretched_exponential: P(Y > u) = exp(-u^gamma), gamma > 0
    """

    family: str
    t: float = 0.0
    gamma: float = 0.0
    bound: float = 1.0

    def __post_init__(self):
        if self.family == POWER:
            if not self.t > 2:
                raise InputError(f"power tail needs t > 2, got {self.t!r}")
        elif self.family == STRETCHED:
            if not self.gamma > 0:
                raise InputError(f"stretched tail needs gamma > 0, got {self.gamma!r}")
        elif self.family == BOUNDED:
            if not self.bound > 0:
                raise InputError(f"bounded tail needs bound > 0, got {self.bound!r}")
        else:
            raise InputError(f"unknown tail family {self.family!r}")

    @classmethod
    def bounded(cls, bound: float = 1.0) -> "TailModel":
        return cls(BOUNDED, bound=bound)

    @classmethod
    def power(cls, t: float) -> "TailModel":
        return cls(POWER, t=t)

    @classmethod
    def stretched(cls, gamma: float) -> "TailModel":
        return cls(STRETCHED, gamma=gamma)

    def tail(self, u: float) -> float:
        """P(Y > u)."""
        if u <= 0:
            return 1.0
        if self.family == BOUNDED:
            return 0.0 if u >= self.bound else 1.0
        if self.family == POWER:
            return min(1.0, u ** (-self.t))
        return math.exp(-(u**self.gamma))

    def log_tail(self, u: float) -> float:
        """log P(Y > u), evaluated analytically to avoid underflow."""
        if u <= 0:
            return 0.0
        if self.family == BOUNDED:
            return -math.inf if u >= self.bound else 0.0
        if self.family == POWER:
            return min(0.0, -self.t * math.log(u))
        return -(u**self.gamma)

    def h(self, s: float) -> float:
        """h(s) = P(Y > 1/s), the threshold function used by the guards."""
        if s <= 0:
            return 0.0
        return self.tail(1.0 / s)

    def inverse_cdf(self, u):
        """Quantile transform of a uniform draw in (0, 1); vectorized."""
        import numpy as np

        u = np.asarray(u, dtype=float)
        if self.family == BOUNDED:
            return u * self.bound
        if self.family == POWER:
            return (1.0 - u) ** (-1.0 / self.t)
        return (-np.log1p(-u)) ** (1.0 / self.gamma)


@dataclass(frozen=True)
class SequenceFamily:
    """s_n = A n^(-beta) (log n)^(-mu), positive for n >= 2.

    Negative beta or mu encode growth; the ratio s_{n+1}/s_n -> 1 holds for the
    whole family.
    """

    A: float
    beta: float
    mu: float = 0.0

    def __post_init__(self):
        if not self.A > 0:
            raise InputError(f"scale A must be positive, got {self.A!r}")
        for name in ("beta", "mu"):
            if not math.isfinite(getattr(self, name)):
                raise InputError(f"{name} must be finite")

    def value(self, n: int) -> float:
        if n < 2:
            raise InputError("sequence values are defined for n >= 2")
        return self.A * n ** (-self.beta) * math.log(n) ** (-self.mu)

    def decays(self) -> bool:
        """True when s_n -> 0."""
        return self.beta > 0 or (self.beta == 0 and self.mu > 0)

    def grows(self) -> bool:
        """True when s_n -> infinity."""
        return self.beta < 0 or (self.beta == 0 and self.mu < 0)


def _compare(value: float, threshold: float, larger_ok: bool = True) -> str:
    if value == threshold:
        return BOUNDARY
    if (value > threshold) == larger_ok:
        return SATISFIED
    return VIOLATED


def check_phi_membership(tail: TailModel, b: SequenceFamily) -> str:
    """Decide whether (n b_n^2)^{-1} log(n P(Y > 1/b_n)) -> -inf.

    Stretched-exponential tails need beta > 1/(2 + gamma); bounded tails
    satisfy the condition whenever b_n -> 0; polynomial tails never produce
    the required super-logarithmic decay.
    """
    if tail.family == POWER:
        return VIOLATED
    if tail.family == BOUNDED:
        if b.decays():
            return SATISFIED
        if b.grows():
            return VIOLATED
        return BOUNDARY  # constant sequence: only the scale would decide
    return _compare(b.beta, 1.0 / (2.0 + tail.gamma))


def check_psi_membership(tail: TailModel, d: SequenceFamily) -> str:
    """Decide whether (n d_n^2)^{-1} log(n P(Y > n d_n)) -> -inf.

    The threshold n d_n grows when the decay exponent delta = d.beta is below
    1.  Stretched-exponential tails need (1 - delta) gamma > 1 - 2 delta,
    i.e. delta > (1 - gamma) / (2 - gamma) for gamma < 2.
    """
    delta = d.beta
    grows_threshold = delta < 1 or (delta == 1 and d.mu < 0)
    if tail.family == POWER:
        return VIOLATED
    if tail.family == BOUNDED:
        if grows_threshold:
            return SATISFIED
        if delta > 1 or (delta == 1 and d.mu > 0):
            return VIOLATED
        return BOUNDARY
    if not grows_threshold:
        return VIOLATED if (delta > 1 or d.mu > 0) else BOUNDARY
    return _compare((1.0 - delta) * tail.gamma, 1.0 - 2.0 * delta)


SUMMABLE = "summable"
VANISHING = "vanishing"


def check_theta_conditions(tail: TailModel, a: SequenceFamily, mode: str) -> str:
    """Check the scale guard on h(c a_n) = P(Y > 1/(c a_n)) for every c > 0.

    mode "summable": sum_n h(c a_n) finite; mode "vanishing": n h(c a_n) -> 0.
    For stretched-exponential tails and purely logarithmic a_n the verdict
    turns on mu * gamma versus 1, with the tie reported as boundary because
    there the scale c A enters the exponent itself.
    """
    if mode not in (SUMMABLE, VANISHING):
        raise InputError(f"mode must be {SUMMABLE!r} or {VANISHING!r}")
    if tail.family == BOUNDED:
        return SATISFIED if a.decays() else VIOLATED
    if tail.family == POWER:
        t = tail.t
        # h(c a_n) = (c A)^t n^(-t beta) (log n)^(-t mu) once c a_n <= 1
        if not a.decays() and not (a.beta == 0 and a.mu == 0):
            return VIOLATED
        if mode == VANISHING:
            if t * a.beta != 1.0:
                return SATISFIED if t * a.beta > 1.0 else VIOLATED
            if a.mu != 0.0:
                return SATISFIED if a.mu > 0 else VIOLATED
            return BOUNDARY
        if t * a.beta != 1.0:
            return SATISFIED if t * a.beta > 1.0 else VIOLATED
        if t * a.mu != 1.0:
            return SATISFIED if t * a.mu > 1.0 else VIOLATED
        return BOUNDARY
    # stretched exponential
    if a.beta > 0:
        return SATISFIED
    if a.beta < 0 or a.mu <= 0:
        return VIOLATED
    return _compare(a.mu * tail.gamma, 1.0)


@dataclass(frozen=True)
class ZoneReport:
    """Critical exponents of the admissible normalizing sequences.

    Two thresholds for the joint-scale sequence b_n are in circulation, coming
    from two different derivation routes; both are reported verbatim, labeled
    by route, with no attempt to reconcile them:

    b_exponent_moment        1 / (1 + gamma), from the exponential-moment zone
    b_exponent_bootstrap_sum 1 / (2 + gamma), from the resampled-sum example
    d_exponent               (1 - gamma) / (2 - gamma); None at gamma = 2
    a_log_exponent           gamma (log-power cap for the conditional scale)
    """

    gamma: float
    b_exponent_moment: float
    b_exponent_bootstrap_sum: float
    d_exponent: object
    a_log_exponent: float
    flags: tuple


def zone_report(tail: TailModel) -> ZoneReport:
    """Critical exponents for a stretched-exponential tail."""
    if tail.family != STRETCHED:
        raise InputError("zone report is only defined for stretched-exponential tails")
    g = tail.gamma
    flags = []
    if g == 2.0:
        d_exp = None
        flags.append("unbounded zone")
    else:
        d_exp = (1.0 - g) / (2.0 - g)
    return ZoneReport(
        gamma=g,
        b_exponent_moment=1.0 / (1.0 + g),
        b_exponent_bootstrap_sum=1.0 / (2.0 + g),
        d_exponent=d_exp,
        a_log_exponent=g,
        flags=tuple(flags),
    )


def instability_zone(gamma: float, delta: float, f: SequenceFamily) -> tuple:
    """Sequences (r_n, e_n) for the resampled-sum instability window.

    r_n = n^{1/(2+gamma)} f_n and e_n = n^{-1/(2+gamma)} f_n^{gamma/2 - delta}.
    ``valid`` is True when f_n grows strictly inside the window
    (log n)^{1/(1 + gamma/2 - delta)} << f_n << n^{gamma/((2+gamma)(1+delta))},
    decided lexicographically on the polynomial then logarithmic exponents.
    """
    if not 0.0 < gamma < 1.0:
        raise InputError(f"gamma must lie in (0, 1), got {gamma!r}")
    if not 0.0 < delta < gamma / 2.0:
        raise InputError(f"delta must lie in (0, gamma/2), got {delta!r}")
    power = gamma / 2.0 - delta
    base_exp = 1.0 / (2.0 + gamma)
    r = SequenceFamily(A=f.A, beta=f.beta - base_exp, mu=f.mu)
    e = SequenceFamily(A=f.A**power, beta=base_exp + power * f.beta, mu=power * f.mu)

    poly_growth = -f.beta
    log_growth = -f.mu
    lower_log = 1.0 / (1.0 + power)
    upper_poly = gamma / ((2.0 + gamma) * (1.0 + delta))
    if poly_growth > 0:
        above_lower = True
    elif poly_growth < 0:
        above_lower = False
    else:
        above_lower = log_growth > lower_log
    if poly_growth < upper_poly:
        below_upper = True
    elif poly_growth > upper_poly:
        below_upper = False
    else:
        below_upper = log_growth < 0
    return r, e, bool(above_lower and below_upper)


def convergence_guard(
    n: int,
    t: float,
    tail: TailModel,
    a_n: float,
    eps: float,
    C: float,
    C1: float,
    C2: float,
) -> float:
    """Lower bound kappa_n on the probability that the finite-n rate bound holds.

    kappa_n = 1 - C (beta_1n + beta_2n) clamped to [0, 1], with
    beta_1n = n h(a_n / (eps C1)) and beta_2n = C2 n^{1 - t/2}.
    The constants are caller-supplied.
    """
    if n < 1:
        raise InputError("n must be >= 1")
    beta1 = n * tail.h(a_n / (eps * C1))
    beta2 = C2 * n ** (1.0 - t / 2.0)
    kappa = 1.0 - C * (beta1 + beta2)
    return min(1.0, max(0.0, kappa))


def phi_condition_value(tail: TailModel, b: SequenceFamily, n: int) -> float:
    """Finite-n value of (n b_n^2)^{-1} log(n P(Y > 1/b_n)); -inf when P = 0."""
    bn = b.value(n)
    logp = tail.log_tail(1.0 / bn)
    if logp == -math.inf:
        return -math.inf
    return (math.log(n) + logp) / (n * bn * bn)


def psi_condition_value(tail: TailModel, d: SequenceFamily, n: int) -> float:
    """Finite-n value of (n d_n^2)^{-1} log(n P(Y > n d_n)); -inf when P = 0."""
    dn = d.value(n)
    logp = tail.log_tail(n * dn)
    if logp == -math.inf:
        return -math.inf
    return (math.log(n) + logp) / (n * dn * dn)
