"""Decreasing subsets of the unit cube, given by a boundary rule.

A set is decreasing when lowering any coordinate of a member keeps it a
member; sub-level sets of increasing merging functions are exactly of this
kind.  Four families are supported:

* SumThreshold(s):   {u : u_1 + ... + u_K <= s}
* RugerSet(alpha,k): {u : #{j : u_j <= alpha} >= k}
* Box(u):            {v : v_j <= u_j for all j}
* GeneralBoundary:   an arbitrary decreasing indicator oracle

Thresholds are held as exact rationals.  Strings parse as exact decimals
("0.3" -> 3/10); floats convert exactly to their dyadic value, which for a
number like 0.3 sits just below the decimal, so pass a string or Fraction
when grid alignment matters.  Cell membership on an n-grid is decided in exact
integer arithmetic so aligned resolutions reproduce closed-form values with
no floating-point dust.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Union

import numpy as np

__all__ = [
    "RationalLike",
    "as_rational",
    "SumThreshold",
    "RugerSet",
    "Box",
    "GeneralBoundary",
    "DecreasingSetSpec",
    "index_sum_grid",
    "spec_to_json",
    "spec_from_json",
]

RationalLike = Union[Fraction, int, float, str]


def as_rational(x: RationalLike) -> Fraction:
    """Exact conversion: str parses as a decimal, float as its dyadic value."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, str)):
        return Fraction(x)
    if isinstance(x, float):
        if math.isnan(x) or math.isinf(x):
            raise ValueError(f"cannot convert {x!r} to a rational")
        return Fraction(x)
    raise TypeError(f"cannot convert {type(x).__name__} to a rational")


def index_sum_grid(n: int, k: int) -> np.ndarray:
    """(n,)*k integer array holding i_1 + ... + i_k at each cell."""
    total = np.zeros((n,) * k, dtype=np.int64)
    for axis in range(k):
        shape = [1] * k
        shape[axis] = n
        total = total + np.arange(n, dtype=np.int64).reshape(shape)
    return total


def _axis_indicator(n: int, k: int, axis: int, flags: np.ndarray) -> np.ndarray:
    shape = [1] * k
    shape[axis] = n
    return flags.reshape(shape)


@dataclass(frozen=True)
class SumThreshold:
    """{u : u_1 + ... + u_K <= s}, the simplex corner at level s."""

    s: Fraction

    def __post_init__(self):
        object.__setattr__(self, "s", as_rational(self.s))
        if self.s < 0:
            raise ValueError(f"sum threshold must be >= 0, got {self.s}")

    @property
    def is_symmetric(self) -> bool:
        return True

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts.sum(axis=-1) <= float(self.s)

    def cell_membership(self, n: int, k: int, offset: int) -> np.ndarray:
        # (sum(idx) + k*offset)/n <= s, decided over the integers
        thr = math.floor(self.s * n) - k * offset
        return index_sum_grid(n, k) <= thr

    def closed_form_ucp(self, k: int) -> float:
        return min(float(2 * self.s / k), 1.0)


@dataclass(frozen=True)
class RugerSet:
    """{u : at least `count` coordinates are <= alpha}."""

    alpha: Fraction
    count: int

    def __post_init__(self):
        object.__setattr__(self, "alpha", as_rational(self.alpha))
        if not 0 <= self.alpha <= 1:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.count < 1:
            raise ValueError(f"count must be >= 1, got {self.count}")

    @property
    def is_symmetric(self) -> bool:
        return True

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return (pts <= float(self.alpha)).sum(axis=-1) >= self.count

    def cell_membership(self, n: int, k: int, offset: int) -> np.ndarray:
        if self.count > k:
            return np.zeros((n,) * k, dtype=bool)
        thr = math.floor(self.alpha * n) - offset
        flags = np.arange(n) <= thr
        hits = np.zeros((n,) * k, dtype=np.int64)
        for axis in range(k):
            hits = hits + _axis_indicator(n, k, axis, flags.astype(np.int64))
        return hits >= self.count

    def closed_form_ucp(self, k: int) -> float:
        return min(float(Fraction(k, self.count) * self.alpha), 1.0)


@dataclass(frozen=True)
class Box:
    """[0, u_1] x ... x [0, u_K]."""

    u: tuple[Fraction, ...]

    def __post_init__(self):
        u = tuple(as_rational(v) for v in self.u)
        object.__setattr__(self, "u", u)
        if len(u) < 2:
            raise ValueError("box needs at least 2 coordinates")
        if any(not 0 <= v <= 1 for v in u):
            raise ValueError(f"box corner must lie in [0, 1]^K, got {u}")

    @property
    def is_symmetric(self) -> bool:
        return len(set(self.u)) == 1

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        bound = np.array([float(v) for v in self.u])
        return (pts <= bound).all(axis=-1)

    def cell_membership(self, n: int, k: int, offset: int) -> np.ndarray:
        if k != len(self.u):
            raise ValueError(f"box is {len(self.u)}-dimensional, grid asks for K={k}")
        member = np.ones((n,) * k, dtype=bool)
        idx = np.arange(n)
        for axis, bound in enumerate(self.u):
            thr = math.floor(bound * n) - offset
            member = member & _axis_indicator(n, k, axis, idx <= thr)
        return member

    def closed_form_ucp(self, k: int) -> float:
        return float(min(self.u))


@dataclass(frozen=True)
class GeneralBoundary:
    """Decreasing set given by an indicator oracle over [0,1]^k.

    The oracle should accept an (m, k) float array and return m booleans;
    plain scalar predicates on one point are wrapped automatically.
    Decreasingness is spot-checked on random dominated pairs at construction.
    """

    indicator: Callable[[np.ndarray], np.ndarray]
    k: int
    symmetric: bool = False
    spot_check_pairs: int = field(default=64, compare=False)

    def __post_init__(self):
        if self.k < 2:
            raise ValueError(f"dimension must be >= 2, got {self.k}")
        self._spot_check_decreasing()

    @property
    def is_symmetric(self) -> bool:
        return self.symmetric

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        try:
            out = np.asarray(self.indicator(pts))
            if out.shape == (pts.shape[0],):
                return out.astype(bool)
        except Exception:
            pass
        return np.array([bool(self.indicator(row)) for row in pts])

    def _spot_check_decreasing(self):
        rng = np.random.default_rng(0)
        hi = rng.uniform(size=(self.spot_check_pairs, self.k))
        lo = hi * rng.uniform(size=(self.spot_check_pairs, self.k))
        in_hi = self.contains(hi)
        in_lo = self.contains(lo)
        bad = in_hi & ~in_lo
        if bad.any():
            i = int(np.argmax(bad))
            raise ValueError(
                "indicator is not decreasing: "
                f"{hi[i]} is in the set but the dominated point {lo[i]} is not"
            )

    def cell_membership(self, n: int, k: int, offset: int) -> np.ndarray:
        if k != self.k:
            raise ValueError(f"oracle is {self.k}-dimensional, grid asks for K={k}")
        axes = np.meshgrid(*[(np.arange(n) + offset) / n] * k, indexing="ij")
        corners = np.stack([a.ravel() for a in axes], axis=-1)
        return self.contains(corners).reshape((n,) * k)


DecreasingSetSpec = Union[SumThreshold, RugerSet, Box, GeneralBoundary]


def spec_to_json(spec: DecreasingSetSpec) -> dict:
    """Tagged dict with exact rational thresholds rendered as strings."""
    if isinstance(spec, SumThreshold):
        return {"type": "sum_threshold", "s": str(spec.s)}
    if isinstance(spec, RugerSet):
        return {"type": "ruger_set", "alpha": str(spec.alpha), "count": spec.count}
    if isinstance(spec, Box):
        return {"type": "box", "u": [str(v) for v in spec.u]}
    raise TypeError(f"{type(spec).__name__} has no JSON form")


def spec_from_json(obj: dict) -> DecreasingSetSpec:
    kind = obj.get("type")
    if kind == "sum_threshold":
        return SumThreshold(Fraction(obj["s"]))
    if kind == "ruger_set":
        return RugerSet(Fraction(obj["alpha"]), int(obj["count"]))
    if kind == "box":
        return Box(tuple(Fraction(v) for v in obj["u"]))
    raise ValueError(f"unknown set spec type {kind!r}")
