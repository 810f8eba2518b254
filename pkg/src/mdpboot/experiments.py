"""Config-driven experiments tying rate predictions to simulation.

Each experiment traces an estimated tail probability along an n-grid, fits
the decay slope of -log(p_hat) against the normalization k * a_n^2, and
compares it with the rate computed by the ``rate`` module on the same inputs;
no theory number is ever entered by hand.  One outer sample is drawn per n in
the conditional scenario (the statement being tested is conditional on the
realized data); the manifest records every stream so reruns can vary it.

Outputs are byte-reproducible: fixed column order, 17-significant-digit
floats, fixed stream derivation from (seed, n, role tag).
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import t as student_t

from ._version import __version__
from .errors import InfeasibleError, InputError
from .measures import FiniteProbabilityMeasure, TestFunction, load_distribution
from .rate import min_rate_halfspace
from .simulate import (
    EXACT,
    NAIVE,
    TILTED,
    RngSpec,
    TailEstimate,
    exact_conditional_tail,
    gaussian_sandwich,
    heavy_tail_sum_mc,
    joint_tail_mc,
    mc_conditional_tail,
    sandwich_envelope,
    tilted_conditional_tail,
)
from .zones import SequenceFamily, TailModel, instability_zone

SCENARIOS = ("conditional", "joint", "instability", "sandwich")

# role tags for stream derivation: stream = (n << 3) | tag
_TAG_OUTER = 1
_TAG_ESTIMATOR = 2
_TAG_JOINT = 3
_TAG_BOOT = 4
_TAG_EMP = 5
_TAG_INSTABILITY = 6
_TAG_SANDWICH = 7

_STREAM_LAYOUT = {
    "outer_sample": "(n << 3) | 1",
    "conditional_estimator": "(n << 3) | 2",
    "joint_event": "(n << 3) | 3",
    "bootstrap_marginal": "(n << 3) | 4",
    "empirical_marginal": "(n << 3) | 5",
    "instability": "(n << 3) | 6",
    "sandwich_point": "(index << 3) | 7",
}


def _fmt(x: float) -> str:
    return format(x, ".17g")


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    distribution: Optional[dict] = None
    f: Optional[tuple] = None
    g: Optional[tuple] = None
    threshold: float = 1.0
    threshold_boot: float = 1.0
    threshold_emp: float = 1.0
    a: Optional[SequenceFamily] = None
    b: Optional[SequenceFamily] = None
    nu: float = 1.0
    n_grid: tuple = ()
    trials: int = 1000
    method: str = NAIVE
    seed: int = 0
    rel_tol: float = 0.2
    gamma: float = 0.5
    delta: float = 0.2
    f_seq: Optional[SequenceFamily] = None
    omega: float = 50.0
    emp_n: int = 400
    points: tuple = ()

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise InputError(f"scenario must be one of {SCENARIOS}, got {self.scenario!r}")
        if self.scenario != "sandwich":
            grid = tuple(int(n) for n in self.n_grid)
            if not grid:
                raise InputError("n_grid must be nonempty")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise InputError("n_grid must be strictly increasing")
            object.__setattr__(self, "n_grid", grid)
        if self.method != EXACT and self.trials < 100:
            raise InputError("trials must be at least 100")
        if not self.nu > 0:
            raise InputError("nu must be positive")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        doc = dict(doc)
        for key in ("a", "b", "f_seq"):
            if key in doc and doc[key] is not None and not isinstance(doc[key], SequenceFamily):
                fam = doc[key]
                doc[key] = SequenceFamily(
                    A=fam.get("A", 1.0), beta=fam.get("beta", 0.0), mu=fam.get("mu", 0.0)
                )
        if "distribution" in doc and isinstance(doc["distribution"], str):
            dist = load_distribution(doc["distribution"])
            doc["distribution"] = {"points": list(dist.points), "probs": list(dist.probs)}
        for key in ("f", "g", "n_grid"):
            if key in doc and doc[key] is not None:
                doc[key] = tuple(doc[key])
        if "points" in doc and doc["points"]:
            doc["points"] = tuple(
                (float(p["k"]), float(p["a"])) if isinstance(p, dict) else (float(p[0]), float(p[1]))
                for p in doc["points"]
            )
        known = {k for k in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def from_json(cls, path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        doc = asdict(self)
        for key in ("a", "b", "f_seq"):
            fam = getattr(self, key)
            doc[key] = None if fam is None else {"A": fam.A, "beta": fam.beta, "mu": fam.mu}
        return doc

    def measure(self) -> FiniteProbabilityMeasure:
        if self.distribution is None:
            raise InputError("config has no distribution")
        return load_distribution(self.distribution)


@dataclass(frozen=True)
class DecayRow:
    n: int
    k: int
    a_n: float
    p_hat: float
    std_err: float
    normalized: float
    flag: str = ""


def _make_row(n: int, k: int, a_n: float, est: Optional[TailEstimate], flag: str = "") -> DecayRow:
    if est is None:
        return DecayRow(n, k, a_n, math.nan, math.nan, math.nan, flag or "infeasible")
    if est.p_hat > 0.0:
        normalized = -math.log(est.p_hat) / (k * a_n * a_n)
    else:
        normalized = math.inf
        flag = flag or "zero-hits"
    return DecayRow(n, k, a_n, est.p_hat, est.std_err, normalized, flag)


def _conditional_estimate(cfg, emp, f, theta, k, rng) -> Optional[TailEstimate]:
    try:
        if cfg.method == EXACT:
            return exact_conditional_tail(emp, f, theta, k)
        if cfg.method == NAIVE:
            return mc_conditional_tail(emp, f, theta, k, cfg.trials, rng)
        if cfg.method == TILTED:
            return tilted_conditional_tail(emp, f, theta, k, cfg.trials, rng)
    except InfeasibleError:
        return None
    raise InputError(f"unknown estimator method {cfg.method!r}")


def run_decay_experiment(cfg: ExperimentConfig) -> list:
    """Rows of the decay trace for the conditional or joint scenario."""
    from .simulate import draw_sample

    P = cfg.measure()
    f = TestFunction(cfg.f)
    rows = []
    if cfg.scenario == "conditional":
        for n in cfg.n_grid:
            a_n = cfg.a.value(n)
            k = math.ceil(cfg.nu * n)
            outer_rng = RngSpec(cfg.seed, (n << 3) | _TAG_OUTER)
            emp = draw_sample(P, n, outer_rng)
            est_rng = RngSpec(cfg.seed, (n << 3) | _TAG_ESTIMATOR)
            est = _conditional_estimate(cfg, emp, f, a_n * cfg.threshold, k, est_rng)
            rows.append(_make_row(n, k, a_n, est))
        return rows
    if cfg.scenario == "joint":
        g = TestFunction(cfg.g if cfg.g is not None else cfg.f)
        for n in cfg.n_grid:
            b_n = cfg.b.value(n)
            k = math.ceil(cfg.nu * n)
            est = joint_tail_mc(
                P, n, k, f, g,
                b_n * cfg.threshold_boot, b_n * cfg.threshold_emp,
                cfg.trials, RngSpec(cfg.seed, (n << 3) | _TAG_JOINT),
            )
            rows.append(_make_row(n, n, b_n, est))
        return rows
    raise InputError(f"run_decay_experiment does not handle scenario {cfg.scenario!r}")


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    ci_halfwidth: float
    n_used: int


def fit_rate_slope(rows: Sequence[DecayRow]) -> FitResult:
    """Ordinary least squares of -log p_hat against k * a_n^2.

    The slope is the empirical rate; the half-width is a 95 percent Student-t
    interval from the residual variance.  Needs at least three usable rows.
    """
    xs, ys = [], []
    for row in rows:
        if math.isfinite(row.normalized) and not math.isnan(row.p_hat) and row.p_hat > 0:
            xs.append(row.k * row.a_n * row.a_n)
            ys.append(-math.log(row.p_hat))
    if len(xs) < 3:
        raise InputError(f"need at least 3 usable rows, got {len(xs)}")
    x = np.asarray(xs)
    y = np.asarray(ys)
    xbar, ybar = x.mean(), y.mean()
    sxx = float(np.dot(x - xbar, x - xbar))
    if sxx <= 0:
        raise InputError("decay rows have no spread in k * a_n^2")
    slope = float(np.dot(x - xbar, y - ybar)) / sxx
    intercept = ybar - slope * xbar
    resid = y - (intercept + slope * x)
    df = len(x) - 2
    s2 = float(np.dot(resid, resid)) / df if df > 0 else 0.0
    se = math.sqrt(s2 / sxx)
    ci = float(student_t.ppf(0.975, df)) * se if df > 0 else math.inf
    return FitResult(slope=slope, intercept=intercept, ci_halfwidth=ci, n_used=len(x))


@dataclass(frozen=True)
class Verdict:
    passed: bool
    label: str
    slope: float
    theory: float
    gap: float
    ci_halfwidth: float


def verify_against_theory(fit: FitResult, theoretical_rate: float, rel_tol: float) -> Verdict:
    """PASS when the fitted slope matches the computed rate within tolerance.

    Agreement means either |slope - rate| <= rel_tol * rate or the slope's
    confidence interval covers the rate.  An infinite rate against a finite
    slope is reported as its own mismatch verdict.
    """
    if math.isinf(theoretical_rate):
        return Verdict(
            passed=False,
            label="rate mismatch: theory infinite",
            slope=fit.slope,
            theory=theoretical_rate,
            gap=math.inf,
            ci_halfwidth=fit.ci_halfwidth,
        )
    gap = abs(fit.slope - theoretical_rate)
    ok = gap <= rel_tol * abs(theoretical_rate) or gap <= fit.ci_halfwidth
    return Verdict(
        passed=bool(ok),
        label="PASS" if ok else "FAIL",
        slope=fit.slope,
        theory=theoretical_rate,
        gap=gap,
        ci_halfwidth=fit.ci_halfwidth,
    )


@dataclass(frozen=True)
class ConditionalReport:
    rows: tuple
    fit: FitResult
    verdict: Verdict


def run_conditional_experiment(cfg: ExperimentConfig) -> ConditionalReport:
    """Decay trace plus the theory comparison for the conditional scenario."""
    if cfg.scenario != "conditional":
        raise InputError("config scenario must be 'conditional'")
    rows = run_decay_experiment(cfg)
    fit = fit_rate_slope(rows)
    theory, _ = min_rate_halfspace(cfg.measure(), TestFunction(cfg.f), cfg.threshold)
    verdict = verify_against_theory(fit, theory, cfg.rel_tol)
    return ConditionalReport(rows=tuple(rows), fit=fit, verdict=verdict)


@dataclass(frozen=True)
class JointReport:
    joint_rows: tuple
    boot_rows: tuple
    emp_rows: tuple
    joint_fit: FitResult
    boot_fit: FitResult
    emp_fit: FitResult
    combined_rate: float
    passed: bool


def run_joint_experiment(cfg: ExperimentConfig) -> JointReport:
    """Joint decay against the weighted sum of the marginal decays.

    The bootstrap marginal is normalized by k_n b_n^2 and the joint and
    empirical traces by n b_n^2, so additivity predicts
    slope_joint = nu * slope_boot + slope_emp.
    """
    if cfg.scenario != "joint":
        raise InputError("config scenario must be 'joint'")
    P = cfg.measure()
    f = TestFunction(cfg.f)
    g = TestFunction(cfg.g if cfg.g is not None else cfg.f)
    joint_rows, boot_rows, emp_rows = [], [], []
    for n in cfg.n_grid:
        b_n = cfg.b.value(n)
        k = math.ceil(cfg.nu * n)
        joint = joint_tail_mc(
            P, n, k, f, g, b_n * cfg.threshold_boot, b_n * cfg.threshold_emp,
            cfg.trials, RngSpec(cfg.seed, (n << 3) | _TAG_JOINT),
        )
        boot = joint_tail_mc(
            P, n, k, f, g, b_n * cfg.threshold_boot, -math.inf,
            cfg.trials, RngSpec(cfg.seed, (n << 3) | _TAG_BOOT),
        )
        emp = joint_tail_mc(
            P, n, k, f, g, -math.inf, b_n * cfg.threshold_emp,
            cfg.trials, RngSpec(cfg.seed, (n << 3) | _TAG_EMP),
        )
        joint_rows.append(_make_row(n, n, b_n, joint))
        boot_rows.append(_make_row(n, k, b_n, boot))
        emp_rows.append(_make_row(n, n, b_n, emp))
    joint_fit = fit_rate_slope(joint_rows)
    boot_fit = fit_rate_slope(boot_rows)
    emp_fit = fit_rate_slope(emp_rows)
    combined = cfg.nu * boot_fit.slope + emp_fit.slope
    gap = abs(joint_fit.slope - combined)
    passed = gap <= cfg.rel_tol * abs(combined)
    return JointReport(
        joint_rows=tuple(joint_rows),
        boot_rows=tuple(boot_rows),
        emp_rows=tuple(emp_rows),
        joint_fit=joint_fit,
        boot_fit=boot_fit,
        emp_fit=emp_fit,
        combined_rate=combined,
        passed=bool(passed),
    )


def gaussian_benchmark(n: int, e_n: float) -> float:
    """Normalized log tail of a standard normal at the same threshold.

    log(1 - Phi(sqrt(n) e_n)) / (n e_n^2); approaches -1/2 from below, the
    light-tail prediction for the normalized sum deviation.
    """
    x = math.sqrt(n) * e_n
    tail = 0.5 * math.erfc(x / math.sqrt(2.0))
    if tail <= 0.0:
        return -math.inf
    return math.log(tail) / (n * e_n * e_n)


@dataclass(frozen=True)
class InstabilityReport:
    rows: tuple
    normalized_last: float
    benchmark_last: float
    passed: bool


def run_instability_experiment(cfg: ExperimentConfig) -> InstabilityReport:
    """Resampled-sum decay inside a valid instability window.

    PASS when the normalized log-probability at the largest n stays above
    -0.1 while the light-tail Gaussian benchmark at the same e_n is below
    -0.4.  Refuses non-stretched tails and invalid windows.
    """
    if cfg.scenario != "instability":
        raise InputError("config scenario must be 'instability'")
    if cfg.f_seq is None:
        raise InputError("instability config needs f_seq")
    tail = TailModel.stretched(cfg.gamma)
    _, e, valid = instability_zone(cfg.gamma, cfg.delta, cfg.f_seq)
    if not valid:
        raise InputError("f_seq lies outside the valid instability window")
    rows = []
    for n in cfg.n_grid:
        e_n = e.value(n)
        est = heavy_tail_sum_mc(
            tail, n, e_n, cfg.trials, RngSpec(cfg.seed, (n << 3) | _TAG_INSTABILITY)
        )
        rows.append(_make_row(n, n, e_n, est))
    last = rows[-1]
    normalized_last = -last.normalized if math.isfinite(last.normalized) else -math.inf
    benchmark_last = gaussian_benchmark(last.n, last.a_n)
    passed = normalized_last > -0.1 and benchmark_last < -0.4
    return InstabilityReport(
        rows=tuple(rows),
        normalized_last=normalized_last,
        benchmark_last=benchmark_last,
        passed=bool(passed),
    )


def counts_from_probs(probs: Sequence[float], n: int) -> list:
    """Largest-remainder rounding of n * probs to integer counts summing to n."""
    raw = [p * n for p in probs]
    counts = [int(math.floor(r)) for r in raw]
    short = n - sum(counts)
    order = sorted(range(len(raw)), key=lambda i: raw[i] - counts[i], reverse=True)
    for i in order[:short]:
        counts[i] += 1
    return counts


@dataclass(frozen=True)
class SandwichPoint:
    k: int
    a: float
    p_hat: float
    std_err: float
    env_lo: float
    env_hi: float
    inside: bool
    truncation_flagged: bool


@dataclass(frozen=True)
class SandwichReport:
    points: tuple
    passed: bool


def run_sandwich_experiment(cfg: ExperimentConfig) -> SandwichReport:
    """Tilted mean-tail estimates against the normal-tail envelope.

    For each (k, a) point the conditional tail P(resampled mean deviation > a)
    is estimated by tilting and compared with the envelope from
    gaussian_sandwich at the configured omega, widened by the reported error
    factor.  The truncation hypothesis (observations small against sigma / a)
    is reported as a flag, never enforced.
    """
    if cfg.scenario != "sandwich":
        raise InputError("config scenario must be 'sandwich'")
    if not cfg.points:
        raise InputError("sandwich config needs (k, a) points")
    from .measures import EmpiricalMeasure

    P = cfg.measure()
    f = TestFunction(cfg.f)
    emp = EmpiricalMeasure(P, counts_from_probs(P.probs, cfg.emp_n))
    freq = emp.frequencies()
    fv = f.values_array()
    fbar = float(np.dot(fv, freq))
    s = math.sqrt(max(float(np.dot((fv - fbar) ** 2, freq)), 0.0))
    kappa_trunc = 36.0 * cfg.omega / math.sqrt(2.0)
    results = []
    all_inside = True
    for idx, (k_raw, a) in enumerate(cfg.points):
        k = int(k_raw)
        est = tilted_conditional_tail(
            emp, f, s * a, k, cfg.trials, RngSpec(cfg.seed, (idx << 3) | _TAG_SANDWICH)
        )
        lo, hi = sandwich_envelope(k, a, cfg.omega)
        inside = lo <= est.p_hat <= hi
        all_inside = all_inside and inside
        max_dev = float(np.max(np.abs(fv - fbar)[freq > 0]))
        flagged = max_dev >= s / (2.0 * kappa_trunc * a) if a > 0 else False
        results.append(
            SandwichPoint(
                k=k, a=a, p_hat=est.p_hat, std_err=est.std_err,
                env_lo=lo, env_hi=hi, inside=bool(inside),
                truncation_flagged=bool(flagged),
            )
        )
    return SandwichReport(points=tuple(results), passed=bool(all_inside))


def rows_to_csv(rows: Sequence[DecayRow]) -> str:
    lines = ["n,k,a_n,p_hat,std_err,normalized,flag"]
    for r in rows:
        lines.append(
            ",".join(
                [
                    str(r.n),
                    str(r.k),
                    _fmt(r.a_n),
                    _fmt(r.p_hat),
                    _fmt(r.std_err),
                    _fmt(r.normalized),
                    r.flag,
                ]
            )
        )
    return "\n".join(lines) + "\n"


def manifest_json(cfg: ExperimentConfig) -> str:
    doc = {
        "config": cfg.to_dict(),
        "streams": _STREAM_LAYOUT,
        "version": __version__,
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"
