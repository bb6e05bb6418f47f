"""Grid copulas and worst-case probability bounds over them.

A grid copula on resolution n assigns nonnegative mass to the n^K axis
cells so that every slab (all cells sharing one index along one axis) holds
exactly 1/n.  Spreading each cell's mass uniformly inside it yields a
distribution on [0,1]^K with exactly uniform marginals, so any achievable
grid value lower-bounds the true worst case.

Bounds come from evaluating a decreasing set at one of two cell corners:

* OPTIMISTIC, the small-coordinates corner.  A cell meets the set only if
  this corner is in it, so maximizing mass over marked cells upper-bounds
  the worst-case probability over all (not just grid) copulas.
* PESSIMISTIC, the large-coordinates corner.  The cell is then wholly inside
  the set, so the optimum is achieved by an actual distribution and is a
  lower bound.

The two corners squeeze the continuum answer; the gap shrinks as n grows.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .sets import DecreasingSetSpec, RationalLike, as_rational
from .simplex import matching_transport, transportation_lp

__all__ = [
    "DEFAULT_SIZE_BUDGET",
    "SIZE_BUDGET_ENV",
    "SizeBudgetError",
    "check_size_budget",
    "CellEvaluation",
    "MarginalReport",
    "GridCopula",
    "random_permutation_mixture",
    "UcpResult",
    "BoundPair",
    "ucp_primal_lp",
    "ucp_bounds",
    "ruschendorf_value",
    "sample_from_grid_copula",
]

DEFAULT_SIZE_BUDGET = 200_000
SIZE_BUDGET_ENV = "PVMERGE_SIZE_BUDGET"

MARGINAL_TOL = 1e-10
MASS_TOTAL_TOL = 1e-12
BOUND_ORDER_TOL = 1e-9


class SizeBudgetError(Exception):
    """Grid would exceed the allowed number of cells."""

    def __init__(self, n: int, k: int, requested: int, budget: int):
        self.n = n
        self.k = k
        self.requested = requested
        self.budget = budget
        super().__init__(
            f"grid of n^K = {n}^{k} = {requested} cells exceeds the budget of "
            f"{budget}; raise {SIZE_BUDGET_ENV} or lower the resolution"
        )


def check_size_budget(n: int, k: int, budget: Optional[int] = None) -> int:
    """Return n**k, raising SizeBudgetError when it exceeds the budget.

    The budget defaults to DEFAULT_SIZE_BUDGET and can be overridden per
    call or through the PVMERGE_SIZE_BUDGET environment variable.
    """
    if n < 1:
        raise ValueError(f"resolution must be >= 1, got n={n}")
    if k < 2:
        raise ValueError(f"dimension must be >= 2, got K={k}")
    if budget is None:
        env = os.environ.get(SIZE_BUDGET_ENV)
        budget = int(env) if env else DEFAULT_SIZE_BUDGET
    requested = n**k
    if requested > budget:
        raise SizeBudgetError(n, k, requested, budget)
    return requested


class CellEvaluation(Enum):
    OPTIMISTIC = "optimistic"
    PESSIMISTIC = "pessimistic"

    @property
    def corner_offset(self) -> int:
        return 0 if self is CellEvaluation.OPTIMISTIC else 1


@dataclass(frozen=True)
class MarginalReport:
    """Diagnostics from checking slab sums against the uniform target."""

    ok: bool
    max_deviation: float
    total_mass: float
    min_mass: float
    violations: tuple[tuple[int, int, float], ...]  # (axis, slab index, deviation)
    tol: float


@dataclass(frozen=True, eq=False)
class GridCopula:
    """Mass assignment on the n^k cell grid with uniform slab sums.

    Construction does not validate; call validate_marginals to get a report.
    That keeps near-miss objects (e.g. float LP output with 1e-13 dust)
    inspectable rather than unrepresentable.
    """

    k: int
    n: int
    mass: np.ndarray

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=float)
        if mass.shape != (self.n,) * self.k:
            raise ValueError(
                f"mass shape {mass.shape} does not match (n,)*k = {(self.n,) * self.k}"
            )
        object.__setattr__(self, "mass", mass)

    @classmethod
    def independent(cls, n: int, k: int) -> "GridCopula":
        return cls(k, n, np.full((n,) * k, 1.0 / n**k))

    @classmethod
    def from_permutation(cls, perm: Sequence[int]) -> "GridCopula":
        perm = np.asarray(perm, dtype=np.int64)
        n = perm.size
        if sorted(perm.tolist()) != list(range(n)):
            raise ValueError("not a permutation of 0..n-1")
        mass = np.zeros((n, n))
        mass[np.arange(n), perm] = 1.0 / n
        return cls(2, n, mass)

    def marginal(self, axis: int) -> np.ndarray:
        others = tuple(a for a in range(self.k) if a != axis)
        return self.mass.sum(axis=others)

    def validate_marginals(self, tol: float = MARGINAL_TOL) -> MarginalReport:
        violations = []
        worst = 0.0
        target = 1.0 / self.n
        for axis in range(self.k):
            dev = self.marginal(axis) - target
            for i in np.flatnonzero(np.abs(dev) > tol):
                violations.append((axis, int(i), float(dev[i])))
            worst = max(worst, float(np.abs(dev).max()))
        total = float(self.mass.sum())
        min_mass = float(self.mass.min())
        ok = (
            not violations
            and abs(total - 1.0) <= MASS_TOTAL_TOL
            and min_mass >= -tol
        )
        return MarginalReport(ok, worst, total, min_mass, tuple(violations), tol)

    def mass_on(self, spec: DecreasingSetSpec, evaluation: CellEvaluation) -> float:
        member = spec.cell_membership(self.n, self.k, evaluation.corner_offset)
        return float(self.mass[member].sum())

    def to_json(self) -> dict:
        return {"k": self.k, "n": self.n, "mass": self.mass.ravel().tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "GridCopula":
        k, n = int(obj["k"]), int(obj["n"])
        flat = np.asarray(obj["mass"], dtype=float)
        if flat.size != n**k:
            raise ValueError(f"mass list has {flat.size} entries, expected {n**k}")
        return cls(k, n, flat.reshape((n,) * k))


def random_permutation_mixture(n: int, terms: int, rng: np.random.Generator) -> GridCopula:
    """Average of `terms` random permutation copulas (K = 2).

    Convex mixtures of permutation matrices stay doubly stochastic, so the
    slab sums are exact by construction.
    """
    if terms < 1:
        raise ValueError("need at least one permutation")
    mass = np.zeros((n, n))
    for _ in range(terms):
        mass[np.arange(n), rng.permutation(n)] += 1.0
    mass /= terms * n
    return GridCopula(2, n, mass)


@dataclass(frozen=True)
class UcpResult:
    """One grid LP solve: the bound, a witness achieving it, and how."""

    value: float
    witness: GridCopula
    evaluation: CellEvaluation
    method: str
    iterations: int
    exact_value: Optional[Fraction] = None


@dataclass(frozen=True)
class BoundPair:
    """Pessimistic/optimistic sandwich around a worst-case probability."""

    lower: float
    upper: float
    n: int
    k: int
    lower_witness: Optional[GridCopula] = field(default=None, compare=False)
    upper_witness: Optional[GridCopula] = field(default=None, compare=False)

    def __post_init__(self):
        if self.lower > self.upper + BOUND_ORDER_TOL:
            raise ValueError(
                f"bound order violated: lower {self.lower} > upper {self.upper}"
            )

    @property
    def gap(self) -> float:
        return self.upper - self.lower


def ucp_primal_lp(
    spec: DecreasingSetSpec,
    k: int,
    n: int,
    evaluation: CellEvaluation = CellEvaluation.OPTIMISTIC,
    method: str = "auto",
    budget: Optional[int] = None,
) -> UcpResult:
    """Worst-case grid-copula mass on `spec`, per the chosen corner rule.

    method: "auto" picks the matching solver for K = 2 and the simplex
    otherwise; "transport" forces matching (K = 2 only); "simplex" the float
    tableau; "exact" the Fraction tableau (slow, small instances only).
    """
    check_size_budget(n, k, budget)
    good = spec.cell_membership(n, k, evaluation.corner_offset)
    if method == "auto":
        method = "transport" if k == 2 else "simplex"
    if method == "transport":
        if k != 2:
            raise ValueError("the matching solver only handles K = 2")
        exact_value, mass = matching_transport(good)
        return UcpResult(
            float(exact_value), GridCopula(2, n, mass), evaluation, "transport", 0,
            exact_value,
        )
    if method in ("simplex", "exact"):
        sol = transportation_lp(good, exact=(method == "exact"))
        if method == "exact":
            mass = np.vectorize(float)(sol.x) if sol.x.dtype == object else sol.x
            return UcpResult(
                float(sol.objective), GridCopula(k, n, mass), evaluation, method,
                sol.iterations, Fraction(sol.objective),
            )
        return UcpResult(
            float(sol.objective), GridCopula(k, n, sol.x), evaluation, method,
            sol.iterations,
        )
    raise ValueError(f"unknown method {method!r}")


def ucp_bounds(
    spec: DecreasingSetSpec,
    k: int,
    n: int,
    method: str = "auto",
    budget: Optional[int] = None,
) -> BoundPair:
    """Two-sided sandwich from the pessimistic and optimistic corner LPs."""
    lo = ucp_primal_lp(spec, k, n, CellEvaluation.PESSIMISTIC, method, budget)
    hi = ucp_primal_lp(spec, k, n, CellEvaluation.OPTIMISTIC, method, budget)
    return BoundPair(lo.value, hi.value, n, k, lo.witness, hi.witness)


def ruschendorf_value(s: RationalLike, k: int) -> float:
    """Exact worst-case probability of {sum <= s}: min(2s/K, 1)."""
    s = as_rational(s)
    if s < 0:
        raise ValueError(f"threshold must be >= 0, got {s}")
    return min(float(2 * s / k), 1.0)


def sample_from_grid_copula(
    copula: GridCopula,
    count: int,
    rng: Union[np.random.Generator, int, None] = None,
) -> np.ndarray:
    """Draw `count` points: pick a cell by mass, then uniform within it."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    flat = copula.mass.ravel()
    if flat.min() < 0:
        raise ValueError("negative cell mass")
    p = flat / flat.sum()
    cells = rng.choice(flat.size, size=count, p=p)
    idx = np.stack(np.unravel_index(cells, copula.mass.shape), axis=-1)
    return (idx + rng.uniform(size=(count, copula.k))) / copula.n
