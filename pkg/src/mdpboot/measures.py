"""Finite-support measure algebra.

Probability measures, signed-measure densities, tabulated test functions and
empirical counts over a fixed finite support, plus integration against any of
them.  Every value is immutable after construction, so instances can be shared
freely between concurrent workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import AbsoluteContinuityError, InputError

PROB_SUM_TOL = 1e-12
ZERO_MASS_TOL = 1e-10

Atom = Union[float, tuple]


def _normalize_atom(label) -> Atom:
    if isinstance(label, (tuple, list)):
        if len(label) != 2:
            raise InputError(f"pair atom must have 2 coordinates, got {label!r}")
        x, y = float(label[0]), float(label[1])
        if not (math.isfinite(x) and math.isfinite(y)):
            raise InputError(f"atom coordinates must be finite, got {label!r}")
        return (x, y)
    x = float(label)
    if not math.isfinite(x):
        raise InputError(f"atom must be finite, got {label!r}")
    return x


def _check_points(points: tuple) -> None:
    if not points:
        raise InputError("support must be nonempty")
    kinds = {isinstance(a, tuple) for a in points}
    if len(kinds) > 1:
        raise InputError("cannot mix scalar and pair atoms in one support")
    for a, b in zip(points, points[1:]):
        if not a < b:
            raise InputError(
                f"atoms must be strictly increasing and distinct, got {a!r} before {b!r}"
            )


@dataclass(frozen=True)
class FiniteProbabilityMeasure:
    """A probability measure on finitely many atoms.

    ``points`` are scalar or bivariate atom labels in strictly increasing
    order (lexicographic for pairs); ``probs`` are the matching nonnegative
    weights, summing to 1 within ``PROB_SUM_TOL``.
    """

    points: tuple
    probs: tuple

    def __init__(self, points: Sequence, probs: Sequence[float]):
        pts = tuple(_normalize_atom(a) for a in points)
        _check_points(pts)
        ps = tuple(float(p) for p in probs)
        if len(ps) != len(pts):
            raise InputError(
                f"{len(pts)} atoms but {len(ps)} probabilities"
            )
        for p in ps:
            if not math.isfinite(p) or p < 0.0:
                raise InputError(f"probabilities must be finite and >= 0, got {p!r}")
        total = math.fsum(ps)
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise InputError(
                f"probabilities sum to {total!r}, expected 1 within {PROB_SUM_TOL}"
            )
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "probs", ps)

    @property
    def size(self) -> int:
        return len(self.points)

    def probs_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    def same_support(self, other: "FiniteProbabilityMeasure") -> bool:
        return self.points == other.points


@dataclass(frozen=True)
class SignedMeasureDensity:
    """A zero-total signed measure given by its density against a base measure.

    ``density[i]`` is the value of dG/dP at atom i; the total mass
    sum(density * probs) must vanish within ``ZERO_MASS_TOL``.
    """

    base: FiniteProbabilityMeasure
    density: tuple

    def __init__(self, base: FiniteProbabilityMeasure, density: Sequence[float]):
        dens = tuple(float(g) for g in density)
        if len(dens) != base.size:
            raise InputError(
                f"density has {len(dens)} entries for a {base.size}-atom base"
            )
        for g in dens:
            if not math.isfinite(g):
                raise InputError(f"density values must be finite, got {g!r}")
        mass = math.fsum(g * p for g, p in zip(dens, base.probs))
        if abs(mass) > ZERO_MASS_TOL:
            raise InputError(
                f"signed measure has total mass {mass!r}, expected 0 within {ZERO_MASS_TOL}"
            )
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "density", dens)

    def density_array(self) -> np.ndarray:
        return np.asarray(self.density, dtype=float)


@dataclass(frozen=True)
class TestFunction:
    """Tabulated values of a test function on the atoms of a base support."""

    __test__ = False  # not a pytest case, despite the name

    values: tuple

    def __init__(self, values: Sequence[float]):
        vals = tuple(float(v) for v in values)
        if not vals:
            raise InputError("test function needs at least one value")
        for v in vals:
            if not math.isfinite(v):
                raise InputError(f"test function values must be finite, got {v!r}")
        object.__setattr__(self, "values", vals)

    @property
    def size(self) -> int:
        return len(self.values)

    def values_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Observation counts over the atoms of a reference support."""

    base: FiniteProbabilityMeasure
    counts: tuple
    n: int

    def __init__(self, base: FiniteProbabilityMeasure, counts: Sequence[int]):
        cts = tuple(int(c) for c in counts)
        if len(cts) != base.size:
            raise InputError(
                f"{len(cts)} counts for a {base.size}-atom base"
            )
        if any(c < 0 for c in cts):
            raise InputError("counts must be nonnegative")
        n = sum(cts)
        if n < 1:
            raise InputError("empirical measure needs at least one observation")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "counts", cts)
        object.__setattr__(self, "n", n)

    def frequencies(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.n

    def as_measure(self) -> FiniteProbabilityMeasure:
        return FiniteProbabilityMeasure(self.base.points, self.frequencies())


Measure = Union[FiniteProbabilityMeasure, EmpiricalMeasure, SignedMeasureDensity]


def empirical_from_sample(
    sample: Sequence[int], base: FiniteProbabilityMeasure
) -> EmpiricalMeasure:
    """Tally a sample of atom indices into an EmpiricalMeasure over ``base``."""
    counts = [0] * base.size
    for idx in sample:
        i = int(idx)
        if i != idx or not 0 <= i < base.size:
            raise InputError(f"sample index {idx!r} outside support of size {base.size}")
        counts[i] += 1
    return EmpiricalMeasure(base, counts)


def _weights(m: Measure) -> np.ndarray:
    if isinstance(m, FiniteProbabilityMeasure):
        return m.probs_array()
    if isinstance(m, EmpiricalMeasure):
        return m.frequencies()
    if isinstance(m, SignedMeasureDensity):
        return m.density_array() * m.base.probs_array()
    raise InputError(f"cannot integrate against {type(m).__name__}")


def integrate(f: TestFunction, m: Measure) -> float:
    """Integral of ``f`` against a probability, empirical or signed measure."""
    w = _weights(m)
    if f.size != len(w):
        raise InputError(
            f"test function on {f.size} atoms does not match support of size {len(w)}"
        )
    return float(np.dot(f.values_array(), w))


def support_of(m: Union[FiniteProbabilityMeasure, EmpiricalMeasure]) -> tuple:
    if isinstance(m, FiniteProbabilityMeasure):
        return m.points
    return m.base.points


def scaled_deviation(
    num: EmpiricalMeasure,
    den: Union[FiniteProbabilityMeasure, EmpiricalMeasure],
    a: float,
) -> SignedMeasureDensity:
    """Density of (num - den) / a with respect to the reference measure ``den``.

    Raises AbsoluteContinuityError if ``num`` has mass on an atom where the
    reference weight is zero (the infinite-rate case).
    """
    if not a > 0:
        raise InputError(f"scale must be positive, got {a!r}")
    if support_of(num) != support_of(den):
        raise InputError("numerator and reference measures live on different supports")
    freq = num.frequencies()
    ref = _weights(den)
    g = np.zeros_like(ref)
    for i, (fi, ri) in enumerate(zip(freq, ref)):
        if ri > 0.0:
            g[i] = (fi - ri) / (a * ri)
        elif fi > 0.0:
            raise AbsoluteContinuityError(
                f"atom {i} carries mass {fi} but the reference weight is 0"
            )
    base = den if isinstance(den, FiniteProbabilityMeasure) else den.as_measure()
    return SignedMeasureDensity(base, g)


def load_distribution(source) -> FiniteProbabilityMeasure:
    """Parse a distribution from a dict or a JSON file path.

    Expected shape: ``{"points": [...], "probs": [...]}`` with scalar points,
    or ``{"points": [[x, y], ...], "probs": [...]}`` for bivariate atoms.
    Non-normalized inputs are rejected with a diagnostic naming the sum.
    """
    if isinstance(source, dict):
        doc = source
    else:
        with open(source, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    if not isinstance(doc, dict) or "points" not in doc or "probs" not in doc:
        raise InputError('distribution must be an object with "points" and "probs"')
    return FiniteProbabilityMeasure(doc["points"], doc["probs"])
