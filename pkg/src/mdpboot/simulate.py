"""Sampling, bootstrap resampling, and tail-probability estimators.

All randomness flows through a counter-based generator (Philox) keyed by an
explicit (seed, stream) pair.  Estimators consume uniforms in a fixed
row-major layout, trial i occupying its own contiguous counter block, so
results are bit-identical for a given RngSpec and parameter set no matter how
trials would be scheduled across workers; a parallel worker can reproduce its
block by advancing the counter.  Reductions are integer hit counts or
fixed-order compensated sums.

Tail events use strict inequality throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .errors import ComplexityError, InfeasibleError, InputError
from .measures import EmpiricalMeasure, FiniteProbabilityMeasure, TestFunction
from .zones import STRETCHED, BOUNDED, TailModel

ENUMERATION_BUDGET = 10_000_000
MIN_TRIALS = 100
_CHUNK_TARGET = 1 << 20  # uniforms per chunk; fixed so chunking never affects results

NAIVE = "naive"
EXACT = "exact"
TILTED = "tilted"


@dataclass(frozen=True)
class RngSpec:
    """Addressable randomness: a 64-bit seed and a 64-bit stream label.

    Identical (seed, stream) pairs reproduce identical draws.  ``generator``
    returns a fresh Philox-backed generator whose 256-bit counter starts at
    block * 2^192, so distinct blocks never overlap.
    """

    seed: int
    stream: int = 0

    def __post_init__(self):
        for name in ("seed", "stream"):
            v = getattr(self, name)
            if not isinstance(v, int) or not 0 <= v < 2**64:
                raise InputError(f"{name} must be an integer in [0, 2^64), got {v!r}")

    def generator(self, block: int = 0) -> np.random.Generator:
        if not 0 <= block < 2**64:
            raise InputError(f"block must be in [0, 2^64), got {block!r}")
        key = np.array([self.seed, self.stream], dtype=np.uint64)
        counter = np.array([0, 0, 0, block], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key, counter=counter))

    def child(self, stream: int) -> "RngSpec":
        return RngSpec(self.seed, stream)


@dataclass(frozen=True)
class TailEstimate:
    """A tail-probability estimate with its Monte Carlo standard error.

    Exact enumeration always reports std_err 0; Monte Carlo methods report the
    usual sampling error, which degenerates to 0 only for certain or
    impossible outcomes.
    """

    p_hat: float
    std_err: float
    trials: int
    method: str

    def __post_init__(self):
        if self.method not in (NAIVE, EXACT, TILTED):
            raise InputError(f"unknown estimator method {self.method!r}")
        if not (math.isfinite(self.p_hat) and self.p_hat >= 0.0):
            raise InputError(f"p_hat must be finite and >= 0, got {self.p_hat!r}")
        if not (math.isfinite(self.std_err) and self.std_err >= 0.0):
            raise InputError(f"std_err must be finite and >= 0, got {self.std_err!r}")
        if self.trials < 0:
            raise InputError("trials must be nonnegative")
        if self.method == EXACT and self.std_err != 0.0:
            raise InputError("exact estimates must report std_err 0")


def _inverse_cdf_draw(u: np.ndarray, cdf: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, len(cdf) - 1)


def _cdf_of(probs: np.ndarray) -> np.ndarray:
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    return cdf


def draw_sample(P: FiniteProbabilityMeasure, n: int, rng: RngSpec) -> EmpiricalMeasure:
    """n categorical draws from P by inverse CDF on the uniform stream."""
    if n < 1:
        raise InputError("sample size must be >= 1")
    gen = rng.generator()
    idx = _inverse_cdf_draw(gen.random(n), _cdf_of(P.probs_array()))
    counts = np.bincount(idx, minlength=P.size)
    return EmpiricalMeasure(P, counts)


def bootstrap_resample(emp: EmpiricalMeasure, k: int, rng: RngSpec) -> EmpiricalMeasure:
    """k i.i.d. draws from the frequency distribution of ``emp``, same support."""
    if k < 1:
        raise InputError("resample size must be >= 1")
    gen = rng.generator()
    idx = _inverse_cdf_draw(gen.random(k), _cdf_of(emp.frequencies()))
    counts = np.bincount(idx, minlength=emp.base.size)
    return EmpiricalMeasure(emp.base, counts)


def _compositions(total: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``parts`` summing to ``total``."""
    if parts == 1:
        return np.array([[total]], dtype=np.int64)
    blocks = []
    for first in range(total + 1):
        rest = _compositions(total - first, parts - 1)
        col = np.full((len(rest), 1), first, dtype=np.int64)
        blocks.append(np.hstack([col, rest]))
    return np.vstack(blocks)


def _check_support(emp: EmpiricalMeasure, f: TestFunction) -> None:
    if f.size != emp.base.size:
        raise InputError("test function does not match the empirical support")


def exact_conditional_tail(
    emp: EmpiricalMeasure, f: TestFunction, theta: float, k: int
) -> TailEstimate:
    """Exact probability that the resampled mean of f beats its value under emp.

    Enumerates every resample count vector of size k over the atoms with
    positive frequency and sums multinomial probabilities of the event
    sum_i f_i (c_i / k - q_i) > theta (strict).  Guarded by
    ENUMERATION_BUDGET on the number of count vectors.
    """
    _check_support(emp, f)
    if k < 1:
        raise InputError("resample size must be >= 1")
    q = emp.frequencies()
    fv = f.values_array()
    live = q > 0.0
    m = int(np.count_nonzero(live))
    n_outcomes = math.comb(k + m - 1, m - 1)
    if n_outcomes > ENUMERATION_BUDGET:
        raise ComplexityError(
            f"{n_outcomes} resample outcomes exceed the budget of {ENUMERATION_BUDGET}"
        )
    comps = _compositions(k, m)
    logq = np.log(q[live])
    logpmf = (
        gammaln(k + 1)
        - gammaln(comps + 1).sum(axis=1)
        + comps @ logq
    )
    mean_hat = float(np.dot(fv, q))
    deviations = comps @ fv[live] / k - mean_hat
    p = float(np.exp(logpmf[deviations > theta]).sum())
    return TailEstimate(p_hat=min(p, 1.0), std_err=0.0, trials=0, method=EXACT)


def _chunk_rows(per_trial: int) -> int:
    return max(1, _CHUNK_TARGET // max(per_trial, 1))


def mc_conditional_tail(
    emp: EmpiricalMeasure,
    f: TestFunction,
    theta: float,
    k: int,
    trials: int,
    rng: RngSpec,
) -> TailEstimate:
    """Naive Monte Carlo for the same event as exact_conditional_tail.

    Trial i consumes uniforms [i*k, (i+1)*k) of the stream; the hit count is
    an integer reduction, so the estimate is reproducible bit for bit.
    """
    _check_support(emp, f)
    if trials < MIN_TRIALS:
        raise InputError(f"need at least {MIN_TRIALS} trials, got {trials}")
    if k < 1:
        raise InputError("resample size must be >= 1")
    q = emp.frequencies()
    fv = f.values_array()
    cdf = _cdf_of(q)
    mean_hat = float(np.dot(fv, q))
    gen = rng.generator()
    hits = 0
    done = 0
    rows = _chunk_rows(k)
    while done < trials:
        take = min(rows, trials - done)
        u = gen.random((take, k))
        idx = _inverse_cdf_draw(u, cdf)
        dev = fv[idx].mean(axis=1) - mean_hat
        hits += int(np.count_nonzero(dev > theta))
        done += take
    p_hat = hits / trials
    std_err = math.sqrt(p_hat * (1.0 - p_hat) / trials)
    return TailEstimate(p_hat=p_hat, std_err=std_err, trials=trials, method=NAIVE)


def _solve_tilt(q: np.ndarray, fv: np.ndarray, target: float) -> float:
    """Tilt z with sum_i q_i e^{z f_i} f_i / sum_i q_i e^{z f_i} = target.

    The tilted mean is strictly increasing in z, so a doubling bracket plus
    monotone bisection converges; tolerance 1e-10 on the mean, at most 200
    bisection steps.
    """

    def tilted_mean(z: float) -> float:
        w = q * np.exp(z * fv - np.max(z * fv))
        w /= w.sum()
        return float(np.dot(w, fv))

    scale = max(1.0, float(np.max(np.abs(fv))))
    tol = 1e-10 * scale
    lo, hi = -1.0, 1.0
    for _ in range(200):
        if tilted_mean(lo) < target:
            break
        lo *= 2.0
    else:
        raise RuntimeError("tilt bracket failed below; precondition violated")
    for _ in range(200):
        if tilted_mean(hi) > target:
            break
        hi *= 2.0
    else:
        raise RuntimeError("tilt bracket failed above; precondition violated")
    z = 0.0
    for _ in range(200):
        z = 0.5 * (lo + hi)
        m = tilted_mean(z)
        if abs(m - target) <= tol:
            return z
        if m < target:
            lo = z
        else:
            hi = z
    return z


def tilted_conditional_tail(
    emp: EmpiricalMeasure,
    f: TestFunction,
    theta: float,
    k: int,
    trials: int,
    rng: RngSpec,
) -> TailEstimate:
    """Importance-sampled estimate of the conditional tail via exponential tilting.

    The resampling weights are tilted to w_i proportional to q_i e^{z f_i}
    with z chosen so the tilted mean of f sits exactly at the event boundary;
    unbiasedness is restored through per-trial likelihood ratios.  Only the
    resampling layer is tilted.  theta must lie strictly between the smallest
    and largest achievable deviations of the resampled mean.
    """
    _check_support(emp, f)
    if trials < MIN_TRIALS:
        raise InputError(f"need at least {MIN_TRIALS} trials, got {trials}")
    if k < 1:
        raise InputError("resample size must be >= 1")
    q = emp.frequencies()
    fv = f.values_array()
    live = q > 0.0
    mean_hat = float(np.dot(fv, q))
    dev_lo = float(np.min(fv[live])) - mean_hat
    dev_hi = float(np.max(fv[live])) - mean_hat
    if not dev_lo < theta < dev_hi:
        raise InfeasibleError(
            f"theta {theta!r} outside the achievable deviation range "
            f"({dev_lo!r}, {dev_hi!r})"
        )
    z = _solve_tilt(q[live], fv[live], mean_hat + theta)
    shift = float(np.max(z * fv[live]))
    w_raw = q[live] * np.exp(z * fv[live] - shift)
    log_mgf = math.log(float(w_raw.sum())) + shift  # log sum_i q_i e^{z f_i}
    w = np.zeros_like(q)
    w[live] = w_raw / w_raw.sum()
    cdf = _cdf_of(w)

    gen = rng.generator()
    rows = _chunk_rows(k)
    done = 0
    chunk_sums = []
    chunk_sqsums = []
    while done < trials:
        take = min(rows, trials - done)
        u = gen.random((take, k))
        idx = _inverse_cdf_draw(u, cdf)
        means = fv[idx].mean(axis=1)
        # likelihood ratio of a trial with resampled mean m: e^{k(log_mgf - z m)}
        vals = np.zeros(take)
        hit = means - mean_hat > theta
        vals[hit] = np.exp(k * (log_mgf - z * means[hit]))
        chunk_sums.append(float(vals.sum()))
        chunk_sqsums.append(float(np.dot(vals, vals)))
        done += take
    total = math.fsum(chunk_sums)
    total_sq = math.fsum(chunk_sqsums)
    p_hat = total / trials
    var = max((total_sq - trials * p_hat * p_hat) / (trials - 1), 0.0)
    std_err = math.sqrt(var / trials)
    return TailEstimate(p_hat=p_hat, std_err=std_err, trials=trials, method=TILTED)


def heavy_tail_sum_mc(
    tail: TailModel,
    n: int,
    e_n: float,
    trials: int,
    rng: RngSpec,
) -> TailEstimate:
    """Frequency of the event sum of n resampled draws exceeding n * e_n.

    Per trial: draw Y_1..Y_n from the tail model by inverse CDF, resample n of
    them with replacement, and test the strict sum event.  Supports the
    stretched-exponential family and, for light-tail comparisons, the bounded
    family.
    """
    if tail.family not in (STRETCHED, BOUNDED):
        raise InputError("heavy-tail sum estimator needs a stretched-exponential or bounded tail")
    if trials < MIN_TRIALS:
        raise InputError(f"need at least {MIN_TRIALS} trials, got {trials}")
    if n < 1:
        raise InputError("n must be >= 1")
    if e_n == math.inf:
        return TailEstimate(p_hat=0.0, std_err=0.0, trials=trials, method=NAIVE)
    gen = rng.generator()
    rows = _chunk_rows(2 * n)
    hits = 0
    done = 0
    threshold = n * e_n
    while done < trials:
        take = min(rows, trials - done)
        u = gen.random((take, 2 * n))
        y = tail.inverse_cdf(u[:, :n])
        pick = np.minimum((u[:, n:] * n).astype(np.int64), n - 1)
        sums = np.take_along_axis(y, pick, axis=1).sum(axis=1)
        hits += int(np.count_nonzero(sums > threshold))
        done += take
    p_hat = hits / trials
    std_err = math.sqrt(p_hat * (1.0 - p_hat) / trials)
    return TailEstimate(p_hat=p_hat, std_err=std_err, trials=trials, method=NAIVE)


def gaussian_sandwich(k: int, a: float, omega: float) -> tuple:
    """Two-sided exponent bounds for the normal-tail comparison of a tilted sum.

    Returns (L_low, L_high, err_factor): the correction exponent L satisfies
    -k a^2 / (3 omega) < L < k a^2 / (2 (1 + omega)), and the multiplicative
    error of the normal-tail representation is bounded by err_factor, which is
    6 in the regime omega > 16, sqrt(k) a > 100, and otherwise computed from
    the explicit remainder formula with Delta = omega a sqrt(k).
    """
    if not omega > 1.0:
        raise InputError(f"omega must exceed 1, got {omega!r}")
    if k < 1 or not a > 0:
        raise InputError("need k >= 1 and a > 0")
    ka2 = k * a * a
    L_low = -ka2 / (3.0 * omega)
    L_high = ka2 / (2.0 * (1.0 + omega))
    x = math.sqrt(k) * a
    if omega > 16.0 and x > 100.0:
        err = 6.0
    else:
        delta = omega * x
        f1 = 60.0 * (1.0 + 10.0 * delta**2 * math.exp(-(1.0 - 1.0 / omega) * math.sqrt(delta)))
        f1 /= 1.0 - 1.0 / omega
        err = f1 * (x + 1.0) / delta
    return L_low, L_high, err


def sandwich_envelope(k: int, a: float, omega: float) -> tuple:
    """Probability envelope implied by gaussian_sandwich around the normal tail."""
    L_low, L_high, err = gaussian_sandwich(k, a, omega)
    x = math.sqrt(k) * a
    base = 0.5 * math.erfc(x / math.sqrt(2.0))
    lo = base * math.exp(L_low) * max(0.0, 1.0 - err)
    hi = base * math.exp(L_high) * (1.0 + err)
    return lo, hi


def joint_tail_mc(
    P: FiniteProbabilityMeasure,
    n: int,
    k: int,
    f: TestFunction,
    g: TestFunction,
    theta_boot: float,
    theta_emp: float,
    trials: int,
    rng: RngSpec,
) -> TailEstimate:
    """Two-stage frequency estimate of the joint deviation event.

    Per trial: an outer sample of size n from P, an inner resample of size k
    from its frequencies; the event is
    integral of g d(resampled - empirical) > theta_boot and
    integral of f d(empirical - P) > theta_emp, both strict.
    -inf thresholds are accepted as always-true sentinels.
    """
    if f.size != P.size or g.size != P.size:
        raise InputError("test functions must match the support of P")
    if trials < MIN_TRIALS:
        raise InputError(f"need at least {MIN_TRIALS} trials, got {trials}")
    if n < 1 or k < 1:
        raise InputError("need n >= 1 and k >= 1")
    p_cdf = _cdf_of(P.probs_array())
    fv = f.values_array()
    gv = g.values_array()
    mean_f_P = float(np.dot(fv, P.probs_array()))
    gen = rng.generator()
    rows = _chunk_rows(n + k)
    hits = 0
    done = 0
    while done < trials:
        take = min(rows, trials - done)
        u = gen.random((take, n + k))
        outer = _inverse_cdf_draw(u[:, :n], p_cdf)
        mean_f_hat = fv[outer].mean(axis=1)
        mean_g_hat = gv[outer].mean(axis=1)
        emp_dev = mean_f_hat - mean_f_P
        # inner resample: index uniformly into each trial's own outer draws
        pick = np.minimum((u[:, n:] * n).astype(np.int64), n - 1)
        inner = np.take_along_axis(outer, pick, axis=1)
        boot_dev = gv[inner].mean(axis=1) - mean_g_hat
        ok = (boot_dev > theta_boot) & (emp_dev > theta_emp)
        hits += int(np.count_nonzero(ok))
        done += take
    p_hat = hits / trials
    std_err = math.sqrt(p_hat * (1.0 - p_hat) / trials)
    return TailEstimate(p_hat=p_hat, std_err=std_err, trials=trials, method=NAIVE)
