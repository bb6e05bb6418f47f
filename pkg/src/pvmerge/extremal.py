"""Exact two-dimensional worst-case theory and Monte Carlo validity checks.

For K = 2 the worst-case probability of a closed decreasing set E has a
closed form: min(inf{u1 + u2 : (u1, u2) not in E}, 1).  The supremum is
attained by a copula concentrated on two antidiagonal segments,

    mass t   uniformly on the segment from (t, 0) to (0, t),
    mass 1-t uniformly on the segment from (t, 1) to (1, t),

whose marginals are exactly uniform.  Taking t equal to the boundary level
of E puts probability exactly t on E, which is what makes the factor 2 in
the scaled-average rule unimprovable at K = 2 and breaks every scaling
alpha*(u1 + u2) with alpha < 1.

The same machinery yields the domination check (every valid increasing rule
must sit below u1 + u2 on the unit square) and seeded type-I-error
simulations against arbitrary dependence structures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Union

import numpy as np

from .grid import GridCopula, sample_from_grid_copula
from .merging import MergingRule, raw_batch
from .sets import (
    Box,
    DecreasingSetSpec,
    GeneralBoundary,
    RationalLike,
    RugerSet,
    SumThreshold,
    as_rational,
)

__all__ = [
    "AntidiagonalCopula",
    "build_extremal_copula",
    "sample_extremal",
    "ucp_decreasing_set_k2",
    "malpha_ucp",
    "MergingSurface",
    "DominanceReport",
    "check_dominates_M",
    "IndependenceSampler",
    "GridCopulaSampler",
    "type1_error_mc",
    "three_sigma_band",
]

SURFACE_TOL = 1e-12
BOUNDARY_RESOLUTION = 1e-6


@dataclass(frozen=True)
class AntidiagonalCopula:
    """The two-segment extremal copula at level t.

    Every point on the lower segment has coordinate sum exactly t, every
    point on the upper segment exactly 1 + t, so the distribution of the
    sum is a two-atom law: P(sum = t) = t, P(sum = 1 + t) = 1 - t.
    """

    t: float

    def __post_init__(self):
        if not 0.0 <= self.t <= 1.0:
            raise ValueError(f"level must lie in [0, 1], got {self.t}")

    @property
    def k(self) -> int:
        return 2

    def prob_sum_leq(self, s: RationalLike) -> Fraction:
        """Exact probability that u1 + u2 <= s under this copula."""
        s = as_rational(s)
        t = Fraction(self.t)
        if s < t:
            return Fraction(0)
        if s < 1 + t:
            return t
        return Fraction(1)

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Draw points on the two segments; marginals are uniform in law.

        The partner coordinate is nudged down by ulps where needed so that
        the floating-point sum never lands above the segment's level; without
        this, roundoff would leak about a tenth of the boundary mass to the
        wrong side of threshold comparisons.
        """
        t = self.t
        lower = rng.random(count) < t
        v_low = rng.uniform(0.0, t, count) if t > 0 else np.zeros(count)
        v_high = rng.uniform(t, 1.0, count) if t < 1 else np.full(count, 1.0)
        v = np.where(lower, v_low, v_high)
        target = np.where(lower, t, 1.0 + t)
        w = target - v
        for _ in range(64):
            over = v + w > target
            if not over.any():
                break
            w[over] = np.nextafter(w[over], -np.inf)
        np.clip(w, 0.0, 1.0, out=w)
        return np.stack([v, w], axis=1)


def build_extremal_copula(t: float) -> AntidiagonalCopula:
    return AntidiagonalCopula(float(t))


def sample_extremal(c: AntidiagonalCopula, seed: int, count: int) -> np.ndarray:
    """Deterministic draw of `count` points from the extremal copula."""
    return c.sample(np.random.default_rng(seed), count)


def _level_has_outside_point(spec: GeneralBoundary, s: float) -> bool:
    lo = max(0.0, s - 1.0)
    hi = min(1.0, s)
    xs = np.arange(lo, hi + BOUNDARY_RESOLUTION / 2, BOUNDARY_RESOLUTION)
    xs = np.clip(xs, lo, hi)
    pts = np.stack([xs, np.clip(s - xs, 0.0, 1.0)], axis=1)
    return bool((~spec.contains(pts)).any())


def ucp_decreasing_set_k2(spec: DecreasingSetSpec) -> float:
    """min(inf of u1 + u2 outside the set, 1): the exact K = 2 worst case.

    Closed forms for the threshold families; for oracle-backed sets the
    infimum is located by bisection over antidiagonal levels u1 + u2 = s,
    probing each level at 1e-6 spacing (the complement of a decreasing set
    is an increasing set, so level occupancy is monotone in s).
    """
    if isinstance(spec, SumThreshold):
        return min(float(spec.s), 1.0)
    if isinstance(spec, Box):
        if len(spec.u) != 2:
            raise ValueError(f"box is {len(spec.u)}-dimensional, need K=2")
        return float(min(spec.u))
    if isinstance(spec, RugerSet):
        if spec.count > 2:
            raise ValueError("set is empty at K=2: needs more low coordinates than exist")
        if spec.count == 1:
            return min(2.0 * float(spec.alpha), 1.0)
        return float(spec.alpha)
    if isinstance(spec, GeneralBoundary):
        if spec.k != 2:
            raise ValueError(f"oracle is {spec.k}-dimensional, need K=2")
        if not spec.contains(np.array([[0.0, 0.0]]))[0]:
            raise ValueError("set is empty (a nonempty decreasing set contains the origin)")
        if not _level_has_outside_point(spec, 2.0):
            return 1.0
        lo, hi = 0.0, 2.0
        while hi - lo > BOUNDARY_RESOLUTION:
            mid = 0.5 * (lo + hi)
            if _level_has_outside_point(spec, mid):
                hi = mid
            else:
                lo = mid
        return min(hi, 1.0)
    raise TypeError(f"unsupported set spec {type(spec).__name__}")


def malpha_ucp(alpha: float, epsilon: float) -> float:
    """Worst-case P(alpha*(p1+p2) <= epsilon): min(epsilon/alpha, 1).

    Exceeds epsilon exactly when alpha < 1, which is the whole story of why
    the scaled average needs alpha >= 1 to be valid.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    return min(epsilon / alpha, 1.0)


@dataclass(frozen=True)
class MergingSurface:
    """Raw (unclipped) merge values as a function on the unit square."""

    fn: Callable[[np.ndarray], np.ndarray]
    resolution: int = 201

    @classmethod
    def from_rule(cls, rule: MergingRule, resolution: int = 201) -> "MergingSurface":
        return cls(lambda pts: raw_batch(rule, pts), resolution)

    def evaluate(self) -> tuple[np.ndarray, np.ndarray]:
        """(grid coordinates, surface values) on the closed resolution grid."""
        m = self.resolution
        g = np.arange(m) / (m - 1)
        xx, yy = np.meshgrid(g, g, indexing="ij")
        pts = np.stack([xx.ravel(), yy.ravel()], axis=1)
        vals = np.asarray(self.fn(pts), dtype=float).reshape(m, m)
        return g, vals


@dataclass(frozen=True)
class DominanceReport:
    """Outcome of the scan of a surface against u1 + u2."""

    dominates: bool
    witness: Optional[tuple[float, float]]
    band: Optional[tuple[float, float]]
    resolution: int
    max_excess: float


def check_dominates_M(surface: MergingSurface) -> DominanceReport:
    """Scan for points where the surface exceeds u1 + u2.

    A rule that is valid under arbitrary dependence and tight (its worst
    case equals epsilon for every epsilon) must satisfy f(u) <= u1 + u2
    everywhere at K = 2: if f(u) > u1 + u2 at some u, then for epsilon in
    the band (u1 + u2, f(u)) the sublevel set {f <= epsilon} excludes u, so
    its worst-case probability is at most u1 + u2 < epsilon and the rule
    wastes level there.  Among violating grid points the one with smallest
    u1 + u2 is reported, so the band sits at the low end of the non-tight
    region (where levels are actually used).  Raw values are compared, not
    clipped ones: clipping at 1 would fake equality high up the square.
    """
    g, vals = surface.evaluate()
    if (np.diff(vals, axis=0) < -SURFACE_TOL).any() or (
        np.diff(vals, axis=1) < -SURFACE_TOL
    ).any():
        raise ValueError("surface is not increasing on the evaluation grid")
    sums = g[:, None] + g[None, :]
    excess = vals - sums
    max_excess = float(excess.max())
    if max_excess <= SURFACE_TOL:
        return DominanceReport(True, None, None, surface.resolution, max_excess)
    i, j = np.unravel_index(
        int(np.argmin(np.where(excess > SURFACE_TOL, sums, np.inf))), excess.shape
    )
    witness = (float(g[i]), float(g[j]))
    band = (float(sums[i, j]), float(vals[i, j]))
    return DominanceReport(False, witness, band, surface.resolution, max_excess)


@dataclass(frozen=True)
class IndependenceSampler:
    """Product copula: coordinates drawn independently uniform."""

    k: int = 2

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"dimension must be >= 2, got {self.k}")

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.uniform(size=(count, self.k))


@dataclass(frozen=True)
class GridCopulaSampler:
    """Adapter presenting a GridCopula as a sampler."""

    copula: GridCopula

    @property
    def k(self) -> int:
        return self.copula.k

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return sample_from_grid_copula(self.copula, count, rng)


def three_sigma_band(epsilon: float, count: int) -> float:
    """Half-width of the 3-sigma binomial band around epsilon."""
    return 3.0 * math.sqrt(epsilon * (1.0 - epsilon) / count)


def type1_error_mc(
    rule: MergingRule,
    sampler,
    epsilon: float,
    seed: int,
    count: int,
    partitions: int = 1,
) -> float:
    """Fraction of merged (clipped) values <= epsilon under the sampler.

    The draw is split into `partitions` chunks, each with its own stream
    seeded from (seed, partition index); hit counts are summed, so any
    scheduling of the chunks across workers reproduces the same rate.
    """
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    if count < 1:
        raise ValueError(f"need a positive sample count, got {count}")
    if partitions < 1 or partitions > count:
        raise ValueError(f"bad partition count {partitions} for {count} samples")
    base = count // partitions
    sizes = [base + (1 if i < count % partitions else 0) for i in range(partitions)]
    hits = 0
    for i, size in enumerate(sizes):
        rng = np.random.default_rng(np.random.SeedSequence((seed, i)))
        pts = sampler.sample(rng, size)
        raw = raw_batch(rule, pts)
        hits += int((np.minimum(raw, 1.0) <= epsilon).sum())
    return hits / count
