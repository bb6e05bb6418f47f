"""Dual certificates: separable upper bounds on worst-case set probability.

A certificate for a decreasing set E assigns one function lambda_k to each
coordinate such that lambda_1(u_1) + ... + lambda_K(u_K) >= 1 everywhere on
E and >= 0 off it.  Integrating against any distribution with uniform
marginals then gives

    P(E) <= E[sum lambda_k(U_k)] = sum_k integral(lambda_k),

so the sum of integrals upper-bounds the worst-case probability no matter
the dependence.  Components are piecewise linear with rational breakpoints;
integrals and the feasibility scan are computed in exact rational
arithmetic, which is what lets a mathematically tight certificate report a
worst violation of exactly zero rather than float dust.

The closed-form certificate for {sum u_k <= s} is
lambda_k(u) = max(2/K - u/s, 0); its value is exactly 2s/K when s <= K/2.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from .grid import check_size_budget
from .sets import (
    Box,
    DecreasingSetSpec,
    GeneralBoundary,
    RationalLike,
    RugerSet,
    SumThreshold,
    as_rational,
    index_sum_grid,
    spec_from_json,
    spec_to_json,
)

__all__ = [
    "FEASIBILITY_TOL",
    "WEAK_DUALITY_TOL",
    "PiecewiseLinear",
    "DualCertificate",
    "CertificateReport",
    "build_ruschendorf_certificate",
    "certificate_value",
    "check_feasibility",
    "symmetrize_certificate",
    "clamp_nonnegative",
    "monotone_envelope",
    "weak_duality_check",
    "certificate_to_json",
    "certificate_from_json",
]

FEASIBILITY_TOL = Fraction(1, 10**9)
WEAK_DUALITY_TOL = 1e-7


@dataclass(frozen=True)
class PiecewiseLinear:
    """Piecewise-linear function on [0,1] with exact rational breakpoints."""

    points: tuple[tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        pts = tuple((as_rational(x), as_rational(y)) for x, y in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise ValueError("need at least two breakpoints")
        xs = [x for x, _ in pts]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("breakpoint x values must be strictly increasing")
        if xs[0] != 0 or xs[-1] != 1:
            raise ValueError("breakpoints must cover [0, 1] exactly")

    @property
    def xs(self) -> tuple[Fraction, ...]:
        return tuple(x for x, _ in self.points)

    @property
    def ys(self) -> tuple[Fraction, ...]:
        return tuple(y for _, y in self.points)

    def at(self, x: RationalLike) -> Fraction:
        """Exact value by linear interpolation between breakpoints."""
        x = as_rational(x)
        if not 0 <= x <= 1:
            raise ValueError(f"argument {x} outside [0, 1]")
        xs = self.xs
        i = bisect_right(xs, x) - 1
        if i == len(xs) - 1:
            return self.points[-1][1]
        (x0, y0), (x1, y1) = self.points[i], self.points[i + 1]
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0)

    def at_float(self, x) -> np.ndarray:
        xs = np.array([float(v) for v in self.xs])
        ys = np.array([float(v) for v in self.ys])
        return np.interp(np.asarray(x, dtype=float), xs, ys)

    def integral(self) -> Fraction:
        """Exact integral over [0,1]: trapezoids between breakpoints."""
        total = Fraction(0)
        for (x0, y0), (x1, y1) in zip(self.points, self.points[1:]):
            total += (x1 - x0) * (y0 + y1) / 2
        return total

    def scale(self, c: RationalLike) -> "PiecewiseLinear":
        c = as_rational(c)
        return PiecewiseLinear(tuple((x, c * y) for x, y in self.points))

    def positive_part(self) -> "PiecewiseLinear":
        """Pointwise max with zero, inserting exact zero-crossing breakpoints."""
        out: list[tuple[Fraction, Fraction]] = []
        for (x0, y0), (x1, y1) in zip(self.points, self.points[1:]):
            out.append((x0, max(y0, Fraction(0))))
            if (y0 > 0 > y1) or (y0 < 0 < y1):
                xc = x0 + (x1 - x0) * y0 / (y0 - y1)
                out.append((xc, Fraction(0)))
        out.append((self.points[-1][0], max(self.points[-1][1], Fraction(0))))
        return PiecewiseLinear(tuple(out))

    def right_running_max(self) -> "PiecewiseLinear":
        """Smallest decreasing majorant on the breakpoint grid."""
        ys = list(self.ys)
        for i in range(len(ys) - 2, -1, -1):
            ys[i] = max(ys[i], ys[i + 1])
        return PiecewiseLinear(tuple(zip(self.xs, ys)))

    @staticmethod
    def average(fns: Sequence["PiecewiseLinear"]) -> "PiecewiseLinear":
        """Pointwise mean, exact on the union of all breakpoint grids."""
        if not fns:
            raise ValueError("nothing to average")
        xs = sorted({x for f in fns for x in f.xs})
        k = len(fns)
        pts = tuple((x, sum((f.at(x) for f in fns), Fraction(0)) / k) for x in xs)
        return PiecewiseLinear(pts)


@dataclass(frozen=True)
class DualCertificate:
    """One piecewise-linear component per coordinate, plus the target set."""

    components: tuple[PiecewiseLinear, ...]
    target: DecreasingSetSpec

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        if len(self.components) < 2:
            raise ValueError("need at least two components")

    @property
    def k(self) -> int:
        return len(self.components)


@dataclass(frozen=True)
class CertificateReport:
    """Exact value and grid-scan feasibility outcome for one certificate."""

    value: Fraction
    feasible_on_grid: bool
    worst_violation: Fraction
    grid_resolution: int
    worst_point: Optional[tuple[float, ...]] = None


def build_ruschendorf_certificate(s: RationalLike, k: int) -> DualCertificate:
    """The closed-form certificate lambda(u) = max(2/K - u/s, 0) for {sum <= s}.

    The kink sits at u = 2s/K (or the component stays positive through u = 1
    when s > K/2).  All K components are identical.
    """
    s = as_rational(s)
    if s <= 0:
        raise ValueError(f"threshold must be > 0, got {s}")
    if k < 2:
        raise ValueError(f"dimension must be >= 2, got K={k}")
    peak = Fraction(2, k)
    z = peak * s  # where 2/K - u/s hits zero
    if z < 1:
        pts = ((Fraction(0), peak), (z, Fraction(0)), (Fraction(1), Fraction(0)))
    else:
        pts = ((Fraction(0), peak), (Fraction(1), peak - 1 / s))
    comp = PiecewiseLinear(pts)
    return DualCertificate((comp,) * k, SumThreshold(s))


def certificate_value(cert: DualCertificate) -> Fraction:
    """Sum of the exact component integrals (the dual objective)."""
    return sum((c.integral() for c in cert.components), Fraction(0))


def _grid_membership(spec: DecreasingSetSpec, grid_n: int, k: int) -> np.ndarray:
    """Exact membership of the closed scan grid {i/(grid_n-1)}^k in the set."""
    g = grid_n - 1
    if isinstance(spec, SumThreshold):
        return index_sum_grid(grid_n, k) <= math.floor(spec.s * g)
    if isinstance(spec, RugerSet):
        flags = np.arange(grid_n) <= math.floor(spec.alpha * g)
        hits = np.zeros((grid_n,) * k, dtype=np.int64)
        for axis in range(k):
            shape = [1] * k
            shape[axis] = grid_n
            hits = hits + flags.astype(np.int64).reshape(shape)
        return hits >= spec.count
    if isinstance(spec, Box):
        if k != len(spec.u):
            raise ValueError(f"box is {len(spec.u)}-dimensional, scan asks for K={k}")
        member = np.ones((grid_n,) * k, dtype=bool)
        idx = np.arange(grid_n)
        for axis, bound in enumerate(spec.u):
            shape = [1] * k
            shape[axis] = grid_n
            member = member & (idx <= math.floor(bound * g)).reshape(shape)
        return member
    if isinstance(spec, GeneralBoundary):
        axes = np.meshgrid(*[np.arange(grid_n) / g] * k, indexing="ij")
        pts = np.stack([a.ravel() for a in axes], axis=-1)
        return spec.contains(pts).reshape((grid_n,) * k)
    raise TypeError(f"unsupported set spec {type(spec).__name__}")


def check_feasibility(
    cert: DualCertificate,
    grid_n: int,
    budget: Optional[int] = None,
) -> CertificateReport:
    """Scan the closed uniform grid for violations of the covering constraint.

    At every scan point u the constraint is
    sum_k lambda_k(u_k) >= indicator(u in target); the violation is the
    positive shortfall.  All arithmetic is rational: component values at the
    rational scan coordinates are brought to a common denominator and summed
    as exact integers, so a certificate that is feasible in exact arithmetic
    reports a worst violation of exactly zero.
    """
    if grid_n < 2:
        raise ValueError(f"grid_n must be >= 2, got {grid_n}")
    k = cert.k
    check_size_budget(grid_n, k, budget)
    g = grid_n - 1

    tables = [
        [comp.at(Fraction(i, g)) for i in range(grid_n)] for comp in cert.components
    ]
    den = math.lcm(*[v.denominator for tab in tables for v in tab])
    int_tables = [
        np.array([v.numerator * (den // v.denominator) for v in tab], dtype=object)
        for tab in tables
    ]

    total = np.zeros((grid_n,) * k, dtype=object)
    for axis, tab in enumerate(int_tables):
        shape = [1] * k
        shape[axis] = grid_n
        total = total + tab.reshape(shape)

    member = _grid_membership(cert.target, grid_n, k)
    flat = total.ravel()
    mflat = member.ravel()

    worst = 0  # violation scaled by den
    worst_idx = None
    if mflat.any():
        inside = flat[mflat]
        j = int(np.argmin(inside))
        v = den - inside[j]
        if v > worst:
            worst = v
            worst_idx = int(np.flatnonzero(mflat)[j])
    if not mflat.all():
        outside = flat[~mflat]
        j = int(np.argmin(outside))
        v = -outside[j]
        if v > worst:
            worst = v
            worst_idx = int(np.flatnonzero(~mflat)[j])

    violation = Fraction(int(worst), den) if worst > 0 else Fraction(0)
    point = None
    if worst_idx is not None and worst > 0:
        idx = np.unravel_index(worst_idx, (grid_n,) * k)
        point = tuple(float(i) / g for i in idx)
    return CertificateReport(
        value=certificate_value(cert),
        feasible_on_grid=violation <= FEASIBILITY_TOL,
        worst_violation=violation,
        grid_resolution=grid_n,
        worst_point=point,
    )


def symmetrize_certificate(cert: DualCertificate) -> DualCertificate:
    """Replace every component by the mean of all K; the value is unchanged.

    Only meaningful when the target is permutation-invariant; for a
    symmetric target the averaged certificate stays feasible because the
    covering constraint is itself an average of permuted constraints.
    """
    if not cert.target.is_symmetric:
        raise ValueError("target set is not symmetric under coordinate permutations")
    avg = PiecewiseLinear.average(cert.components)
    return DualCertificate((avg,) * cert.k, cert.target)


def clamp_nonnegative(cert: DualCertificate) -> DualCertificate:
    """Positive part of every component; covering only improves."""
    return DualCertificate(
        tuple(c.positive_part() for c in cert.components), cert.target
    )


def monotone_envelope(cert: DualCertificate) -> DualCertificate:
    """Smallest decreasing majorant of each component on its breakpoint grid."""
    return DualCertificate(
        tuple(c.right_running_max() for c in cert.components), cert.target
    )


def weak_duality_check(primal_value: float, cert: DualCertificate) -> bool:
    """Primal (pessimistic grid LP) must not exceed the dual value."""
    return primal_value <= float(certificate_value(cert)) + WEAK_DUALITY_TOL


def certificate_to_json(cert: DualCertificate) -> dict:
    return {
        "target": spec_to_json(cert.target),
        "components": [
            [[str(x), str(y)] for x, y in comp.points] for comp in cert.components
        ],
    }


def certificate_from_json(obj: dict) -> DualCertificate:
    target = spec_from_json(obj["target"])
    comps = tuple(
        PiecewiseLinear(tuple((Fraction(x), Fraction(y)) for x, y in pts))
        for pts in obj["components"]
    )
    return DualCertificate(comps, target)
