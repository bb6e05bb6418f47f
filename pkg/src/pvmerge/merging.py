"""Rules for merging K p-values that stay valid under arbitrary dependence.

The four rules implemented here share one template: combine the inputs into a
single nonnegative number whose sub-level events have worst-case probability
at most the level itself, no matter how the inputs are correlated.

* Bonferroni:        K * min(p_1, ..., p_K)
* order statistic:   (K/k) * p_(k)           (k-th smallest input)
* Hommel:            (1 + 1/2 + ... + 1/K) * min_k (K/k) * p_(k)
* scaled average:    alpha * (p_1 + ... + p_K), with alpha = 2/K the canonical
                     twice-the-average rule (the only valid choice with
                     alpha < 1 coefficient on the sum at K=2 is alpha >= 1;
                     see the extremal module for the refutation machinery)

Raw (unclipped) values are kept alongside the clipped ones: statistical
consumers report min(raw, 1), while tightness experiments need the raw value.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np

__all__ = [
    "PValueVector",
    "MergedPValue",
    "MergingRule",
    "Bonferroni",
    "Ruger",
    "Hommel",
    "ScaledAverage",
    "DiscreteDistribution",
    "as_pvalues",
    "merge_bonferroni",
    "merge_ruger",
    "merge_hommel",
    "merge_scaled_average",
    "apply_rule",
    "raw_batch",
    "harmonic_number",
    "randomized_pit",
]

MASS_SUM_TOL = 1e-12


@dataclass(frozen=True)
class PValueVector:
    """K >= 2 p-values, each in [0, 1]."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) < 2:
            raise ValueError(f"need at least 2 p-values, got {len(vals)}")
        for v in vals:
            if not (0.0 <= v <= 1.0) or math.isnan(v):
                raise ValueError(f"p-value {v!r} outside [0, 1]")

    @property
    def k(self) -> int:
        return len(self.values)

    def sorted(self) -> tuple[float, ...]:
        return tuple(sorted(self.values))


def as_pvalues(p: Union[PValueVector, Iterable[float]]) -> PValueVector:
    """Coerce a sequence of floats (or pass through a PValueVector)."""
    if isinstance(p, PValueVector):
        return p
    return PValueVector(tuple(p))


@dataclass(frozen=True)
class MergedPValue:
    """Merged value before and after clipping at 1."""

    raw: float
    clipped: float

    @classmethod
    def from_raw(cls, raw: float) -> "MergedPValue":
        if raw < 0.0 or math.isnan(raw):
            raise ValueError(f"merged raw value must be >= 0, got {raw!r}")
        return cls(raw=raw, clipped=min(raw, 1.0))


# ---------------------------------------------------------------------------
# Rule tags.  A rule is data, not behaviour: apply_rule / raw_batch interpret
# them, which keeps the scalar and vectorized paths in one place each.


@dataclass(frozen=True)
class Bonferroni:
    pass


@dataclass(frozen=True)
class Ruger:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"order statistic index must be >= 1, got {self.k}")


@dataclass(frozen=True)
class Hommel:
    pass


@dataclass(frozen=True)
class ScaledAverage:
    """raw = alpha * (p_1 + ... + p_K).

    alpha=None means the canonical 2/K coefficient (twice the average),
    resolved when the rule is applied and K is known.
    """

    alpha: float | None = None

    def __post_init__(self):
        if self.alpha is not None and not self.alpha > 0.0:
            raise ValueError(f"alpha must be positive, got {self.alpha!r}")

    def coefficient(self, k: int) -> float:
        return 2.0 / k if self.alpha is None else float(self.alpha)


MergingRule = Union[Bonferroni, Ruger, Hommel, ScaledAverage]


@lru_cache(maxsize=None)
def harmonic_number(k: int) -> float:
    """1 + 1/2 + ... + 1/k, correctly rounded via fsum."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return math.fsum(1.0 / i for i in range(1, k + 1))


def merge_bonferroni(p) -> MergedPValue:
    """K * min(p)."""
    pv = as_pvalues(p)
    return MergedPValue.from_raw(pv.k * min(pv.values))


def merge_ruger(p, k: int) -> MergedPValue:
    """(K/k) * p_(k), the k-th smallest input scaled up.

    k=1 reproduces merge_bonferroni bit for bit.
    """
    pv = as_pvalues(p)
    if not 1 <= k <= pv.k:
        raise ValueError(f"order statistic index k={k} outside 1..{pv.k}")
    if k == 1:
        # identical arithmetic to merge_bonferroni: K * min
        return MergedPValue.from_raw(pv.k * min(pv.values))
    return MergedPValue.from_raw((pv.k / k) * pv.sorted()[k - 1])


def merge_hommel(p) -> MergedPValue:
    """(1 + 1/2 + ... + 1/K) * min_k (K/k) * p_(k)."""
    pv = as_pvalues(p)
    srt = pv.sorted()
    inner = min((pv.k / k) * srt[k - 1] for k in range(1, pv.k + 1))
    return MergedPValue.from_raw(harmonic_number(pv.k) * inner)


def merge_scaled_average(p, alpha: float | None = None) -> MergedPValue:
    """alpha * (p_1 + ... + p_K); alpha=None uses the canonical 2/K.

    With alpha = 2/K this is twice the average, valid under arbitrary
    dependence.  At K=2 general alpha gives the M_alpha family, valid
    iff alpha >= 1.
    """
    pv = as_pvalues(p)
    coeff = ScaledAverage(alpha).coefficient(pv.k)
    return MergedPValue.from_raw(coeff * math.fsum(pv.values))


def apply_rule(rule: MergingRule, p) -> MergedPValue:
    pv = as_pvalues(p)
    if isinstance(rule, Bonferroni):
        return merge_bonferroni(pv)
    if isinstance(rule, Ruger):
        return merge_ruger(pv, rule.k)
    if isinstance(rule, Hommel):
        return merge_hommel(pv)
    if isinstance(rule, ScaledAverage):
        return merge_scaled_average(pv, rule.alpha)
    raise TypeError(f"unknown merging rule {rule!r}")


def raw_batch(rule: MergingRule, points: np.ndarray) -> np.ndarray:
    """Raw merged values for an (N, K) array of p-value rows.

    Vectorized twin of apply_rule; the scalar path is the reference and the
    test suite pins the two against each other.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] < 2:
        raise ValueError(f"expected an (N, K>=2) array, got shape {pts.shape}")
    n_cols = pts.shape[1]
    if isinstance(rule, Bonferroni):
        return n_cols * pts.min(axis=1)
    if isinstance(rule, Ruger):
        if not 1 <= rule.k <= n_cols:
            raise ValueError(f"order statistic index k={rule.k} outside 1..{n_cols}")
        if rule.k == 1:
            return n_cols * pts.min(axis=1)
        kth = np.sort(pts, axis=1)[:, rule.k - 1]
        return (n_cols / rule.k) * kth
    if isinstance(rule, Hommel):
        srt = np.sort(pts, axis=1)
        scaled = srt * (n_cols / np.arange(1, n_cols + 1))
        return harmonic_number(n_cols) * scaled.min(axis=1)
    if isinstance(rule, ScaledAverage):
        return rule.coefficient(n_cols) * pts.sum(axis=1)
    raise TypeError(f"unknown merging rule {rule!r}")


# ---------------------------------------------------------------------------
# Randomized probability-integral transform.


@dataclass(frozen=True)
class DiscreteDistribution:
    """Finitely supported law on [0, 1]: sorted distinct atoms with masses."""

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        atoms = tuple((float(v), float(m)) for v, m in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if not atoms:
            raise ValueError("distribution needs at least one atom")
        values = [v for v, _ in atoms]
        masses = [m for _, m in atoms]
        if any(not 0.0 <= v <= 1.0 for v in values):
            raise ValueError("atom values must lie in [0, 1]")
        if any(m < 0.0 for m in masses):
            raise ValueError("atom masses must be nonnegative")
        if values != sorted(values) or len(set(values)) != len(values):
            raise ValueError("atom values must be sorted ascending and distinct")
        total = math.fsum(masses)
        if abs(total - 1.0) > MASS_SUM_TOL:
            raise ValueError(f"masses sum to {total!r}, not 1 within {MASS_SUM_TOL}")

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(v for v, _ in self.atoms)

    @property
    def masses(self) -> tuple[float, ...]:
        return tuple(m for _, m in self.atoms)

    def prob_below(self, x: float) -> float:
        """P(X < x)."""
        idx = bisect.bisect_left(self.values, x)
        return math.fsum(self.masses[:idx])

    def prob_at(self, x: float) -> float:
        """P(X = x); zero when x is not an atom."""
        idx = bisect.bisect_left(self.values, x)
        if idx < len(self.atoms) and self.values[idx] == x:
            return self.masses[idx]
        return 0.0

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return rng.choice(np.array(self.values), size=count, p=np.array(self.masses))


def randomized_pit(dist: DiscreteDistribution, observed: float, theta: float) -> float:
    """P(X < observed) + theta * P(X = observed).

    With observed drawn from dist and theta uniform on [0, 1], the output is
    uniform on [0, 1]; it never exceeds the CDF at the observed value.
    """
    if not 0.0 <= theta <= 1.0:
        raise ValueError(f"theta must lie in [0, 1], got {theta!r}")
    if observed not in dist.values:
        raise ValueError(f"observed value {observed!r} is not an atom of the distribution")
    return dist.prob_below(observed) + theta * dist.prob_at(observed)
