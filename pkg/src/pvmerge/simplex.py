"""Dense two-phase primal simplex and transportation-problem front ends.

The LP we care about is small and dense: maximize the mass a discrete copula
places on a marked region of the n^K cell grid, subject to every axis-aligned
slab holding mass 1/n.  Two independent routes are provided on purpose:

* a generic tableau simplex (float64 or exact Fraction arithmetic) fed the
  slab equality constraints, and
* for K = 2, a bipartite-matching solver: slab constraints make the scaled
  mass matrix doubly stochastic, so the optimum is attained at a permutation
  and equals (maximum matching size)/n.

Both return a witness assignment achieving the reported objective.  Bland's
rule keeps the simplex free of cycling; the exact mode is the slow oracle of
record for cross-checking the float path on small instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "EPS",
    "LpSolution",
    "solve_lp_max",
    "transportation_constraints",
    "transportation_lp",
    "max_bipartite_matching",
    "matching_transport",
]

EPS = 1e-10


@dataclass(frozen=True)
class LpSolution:
    """Outcome of one LP solve: status, objective, primal point, pivot count."""

    status: str  # "optimal" | "infeasible" | "unbounded"
    objective: object
    x: Optional[np.ndarray]
    iterations: int


def _pivot(T: np.ndarray, basis: list, r: int, c: int) -> None:
    T[r] = T[r] / T[r, c]
    for i in range(T.shape[0]):
        if i != r:
            coeff = T[i, c]
            if coeff != 0:
                T[i] = T[i] - coeff * T[r]
    basis[r] = c


def _run_phase(T: np.ndarray, basis: list, allowed: int, tol, cap: int) -> tuple[str, int]:
    """Pivot to optimality under Bland's rule.

    `allowed` bounds the columns that may enter (used to bar artificials in
    phase 2).  Returns (status, iterations).
    """
    m = T.shape[0] - 1
    it = 0
    while True:
        enter = -1
        for j in range(allowed):
            if T[m, j] > tol:
                enter = j
                break
        if enter < 0:
            return "optimal", it
        # ratio test; ties broken by smallest basic variable index
        leave = -1
        best = None
        for i in range(m):
            a = T[i, enter]
            if a > tol:
                ratio = T[i, -1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave < 0:
            return "unbounded", it
        _pivot(T, basis, leave, enter)
        it += 1
        if it > cap:
            raise RuntimeError(f"simplex exceeded {cap} pivots")


def solve_lp_max(
    c: Sequence,
    A: Sequence,
    b: Sequence,
    exact: bool = False,
    max_iter: Optional[int] = None,
) -> LpSolution:
    """Maximize c.x subject to A x = b, x >= 0 (two-phase, Bland's rule).

    With exact=True all arithmetic is done in Fractions and the inputs must
    be Fraction-convertible; tolerances collapse to zero.
    """
    if exact:
        A = np.array([[Fraction(v) for v in row] for row in A], dtype=object)
        b = np.array([Fraction(v) for v in b], dtype=object)
        c = np.array([Fraction(v) for v in c], dtype=object)
        tol = 0
        zero, one = Fraction(0), Fraction(1)
    else:
        A = np.asarray(A, dtype=float).copy()
        b = np.asarray(b, dtype=float).copy()
        c = np.asarray(c, dtype=float)
        tol = EPS
        zero, one = 0.0, 1.0

    m, nvar = A.shape
    for i in range(m):
        if b[i] < 0:
            A[i] = -A[i]
            b[i] = -b[i]

    cap = max_iter if max_iter is not None else max(10_000, 50 * (m + nvar))

    # phase 1: artificial basis, maximize -(sum of artificials)
    ncols = nvar + m + 1
    T = np.zeros((m + 1, ncols), dtype=object if exact else float)
    T[:m, :nvar] = A
    for i in range(m):
        T[i, nvar + i] = one
        T[i, -1] = b[i]
    T[m, :nvar] = A.sum(axis=0)
    T[m, -1] = b.sum()
    basis = [nvar + i for i in range(m)]

    status, it1 = _run_phase(T, basis, nvar + m, tol, cap)
    if status != "optimal":  # pragma: no cover - phase 1 is always bounded
        raise RuntimeError("phase 1 terminated " + status)
    residual = T[m, -1]
    feas_tol = zero if exact else 1e-9
    if residual > feas_tol:
        return LpSolution("infeasible", None, None, it1)

    # drive surviving artificials out of the basis; drop truly redundant rows
    drop = []
    for i in range(m):
        if basis[i] >= nvar:
            for j in range(nvar):
                if (T[i, j] > tol) or (T[i, j] < -tol):
                    _pivot(T, basis, i, j)
                    break
            else:
                drop.append(i)
    if drop:
        keep = [i for i in range(m) if i not in drop]
        T = T[keep + [m]]
        basis = [basis[i] for i in keep]
        m = len(keep)

    # phase 2: rebuild the objective row for c (artificials stay but may not enter)
    obj = np.zeros(T.shape[1], dtype=object if exact else float)
    if exact:
        obj[:] = zero
    obj[:nvar] = c
    for i in range(m):
        cb = c[basis[i]] if basis[i] < nvar else zero
        if cb != 0:
            obj = obj - cb * T[i]
    T[m] = obj

    status, it2 = _run_phase(T, basis, nvar, tol, cap)
    if status == "unbounded":
        return LpSolution("unbounded", None, None, it1 + it2)

    x = np.zeros(nvar, dtype=object if exact else float)
    if exact:
        x[:] = zero
    for i in range(m):
        if basis[i] < nvar:
            x[basis[i]] = T[i, -1]
    value = (c * x).sum() if exact else float(np.dot(np.asarray(c, dtype=float), np.asarray(x, dtype=float)))
    return LpSolution("optimal", value, x, it1 + it2)


def transportation_constraints(n: int, k: int, exact: bool = False):
    """Slab-sum equalities for an n^k cell grid, redundancies removed.

    One constraint per (axis, slab index), except the last slab of every axis
    after the first: those are implied because each axis's slabs add to the
    total mass.  Returns (A, b) with b = 1/n per row.
    """
    rows = []
    for axis in range(k):
        last = n if axis == 0 else n - 1
        for i in range(last):
            ind = np.zeros((n,) * k, dtype=np.int64)
            sl = [slice(None)] * k
            sl[axis] = i
            ind[tuple(sl)] = 1
            rows.append(ind.ravel())
    A = np.array(rows, dtype=np.int64)
    if exact:
        b = [Fraction(1, n)] * A.shape[0]
    else:
        b = np.full(A.shape[0], 1.0 / n)
    return A, b


def transportation_lp(good: np.ndarray, exact: bool = False) -> LpSolution:
    """Maximize mass on the cells marked True, over grid copulas.

    `good` is a boolean (n,)*k array.  The solution's x reshapes to the same
    shape and is a valid grid copula mass assignment.
    """
    good = np.asarray(good, dtype=bool)
    k = good.ndim
    n = good.shape[0]
    if good.shape != (n,) * k:
        raise ValueError(f"expected a cubical grid, got shape {good.shape}")
    A, b = transportation_constraints(n, k, exact=exact)
    c = good.ravel().astype(np.int64)
    sol = solve_lp_max(c, A, b, exact=exact)
    if sol.status != "optimal":  # pragma: no cover - transportation is always feasible
        raise RuntimeError("transportation LP " + sol.status)
    x = sol.x.reshape((n,) * k)
    return LpSolution(sol.status, sol.objective, x, sol.iterations)


def max_bipartite_matching(adj: np.ndarray) -> tuple[int, np.ndarray]:
    """Kuhn's augmenting-path matching on a boolean (n, n) adjacency matrix.

    Returns (size, row_match) where row_match[r] is the matched column or -1.
    """
    adj = np.asarray(adj, dtype=bool)
    n = adj.shape[0]
    col_match = np.full(n, -1, dtype=np.int64)

    def try_augment(r: int, seen: np.ndarray) -> bool:
        for ci in np.flatnonzero(adj[r] & ~seen):
            seen[ci] = True
            if col_match[ci] < 0 or try_augment(col_match[ci], seen):
                col_match[ci] = r
                return True
        return False

    size = 0
    for r in range(n):
        if try_augment(r, np.zeros(n, dtype=bool)):
            size += 1
    row_match = np.full(n, -1, dtype=np.int64)
    for ci in range(n):
        if col_match[ci] >= 0:
            row_match[col_match[ci]] = ci
    return size, row_match


def matching_transport(good: np.ndarray) -> tuple[Fraction, np.ndarray]:
    """K = 2 transportation optimum via matching, with a permutation witness.

    The doubly-stochastic polytope's vertices are permutation matrices, so
    the best copula concentrates 1/n on each of n cells, one per row and
    column, hitting as many marked cells as a maximum matching allows.
    Unmatched rows and columns are paired off in order to complete the
    permutation.  Returns (exact value, float mass matrix).
    """
    good = np.asarray(good, dtype=bool)
    if good.ndim != 2 or good.shape[0] != good.shape[1]:
        raise ValueError(f"expected a square boolean matrix, got shape {good.shape}")
    n = good.shape[0]
    size, row_match = max_bipartite_matching(good)
    perm = row_match.copy()
    free_rows = np.flatnonzero(perm < 0)
    used = set(perm[perm >= 0].tolist())
    free_cols = [ci for ci in range(n) if ci not in used]
    for r, ci in zip(free_rows, free_cols):
        perm[r] = ci
    mass = np.zeros((n, n))
    mass[np.arange(n), perm] = 1.0 / n
    return Fraction(size, n), mass
