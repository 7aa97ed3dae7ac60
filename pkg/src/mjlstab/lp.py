"""Small dense linear-programming solver (two-phase primal simplex).

Solves max/min c^T x subject to A_ub x <= b_ub and finite box bounds
lb <= x <= ub. Box bounds are handled by shifting to y = x - lb >= 0 and
appending the upper bounds as ordinary rows; infeasible starts go through a
phase-1 artificial objective. Bland's rule is always on (the problems here
are tiny, so the anti-cycling guarantee is worth more than pivot speed).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_FEAS_TOL = 1e-8


@dataclass(eq=False)
class LpProblem:
    """max/min c^T x  s.t.  a_ub x <= b_ub,  lb <= x <= ub (all finite)."""

    c: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    sense: str = "max"

    def __post_init__(self):
        self.c = np.atleast_1d(np.asarray(self.c, dtype=float))
        n = self.c.shape[0]
        if self.a_ub is None:
            self.a_ub = np.zeros((0, n))
        if self.b_ub is None:
            self.b_ub = np.zeros(0)
        self.a_ub = np.atleast_2d(np.asarray(self.a_ub, dtype=float))
        self.b_ub = np.atleast_1d(np.asarray(self.b_ub, dtype=float))
        self.lb = np.atleast_1d(np.asarray(self.lb, dtype=float))
        self.ub = np.atleast_1d(np.asarray(self.ub, dtype=float))
        if self.a_ub.size == 0:
            self.a_ub = np.zeros((0, n))
        if self.a_ub.shape[1] != n:
            raise ValueError(
                f"a_ub has {self.a_ub.shape[1]} columns for {n} variables"
            )
        if self.b_ub.shape[0] != self.a_ub.shape[0]:
            raise ValueError("b_ub length does not match a_ub rows")
        if self.lb.shape[0] != n or self.ub.shape[0] != n:
            raise ValueError("bound vectors must have one entry per variable")
        for name, arr in (("c", self.c), ("a_ub", self.a_ub), ("b_ub", self.b_ub),
                          ("lb", self.lb), ("ub", self.ub)):
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} has non-finite entries")
        if np.any(self.lb > self.ub + 1e-15):
            raise ValueError("lb > ub for some variable")
        if self.sense not in ("max", "min"):
            raise ValueError(f"sense must be 'max' or 'min', got {self.sense!r}")


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None = field(default=None)
    objective: float | None = None


def lp_solve(problem: LpProblem, tol: float = 1e-9, max_iter: int = 20_000) -> LpResult:
    """Solve a small dense LP; see LpProblem for the accepted form."""
    n = problem.c.shape[0]
    sign = 1.0 if problem.sense == "max" else -1.0
    c = sign * problem.c

    # Shift x = lb + y so y >= 0, and fold the upper bounds in as rows.
    width = problem.ub - problem.lb
    rows = np.vstack([problem.a_ub, np.eye(n)])
    rhs = np.concatenate([problem.b_ub - problem.a_ub @ problem.lb, width])

    m = rows.shape[0]
    # Rows with negative rhs get flipped; their slack then has coefficient -1
    # and an artificial variable provides the starting basis instead.
    flip = rhs < 0
    rows = np.where(flip[:, None], -rows, rows)
    rhs = np.where(flip, -rhs, rhs)
    slack = np.diag(np.where(flip, -1.0, 1.0))
    art_rows = np.flatnonzero(flip)
    n_art = art_rows.size

    ncols = n + m + n_art
    tableau = np.zeros((m, ncols + 1))
    tableau[:, :n] = rows
    tableau[:, n : n + m] = slack
    for k, i in enumerate(art_rows):
        tableau[i, n + m + k] = 1.0
    tableau[:, -1] = rhs

    basis = np.empty(m, dtype=int)
    basis[~flip] = n + np.flatnonzero(~flip)
    basis[flip] = n + m + np.arange(n_art)

    if n_art:
        cost1 = np.zeros(ncols)
        cost1[n + m :] = -1.0
        status = _simplex(tableau, basis, cost1, ncols, tol, max_iter)
        if status != "optimal":
            return LpResult(status="infeasible")
        art_total = float(cost1[basis] @ tableau[:, -1])
        if art_total < -_FEAS_TOL:
            return LpResult(status="infeasible")
        _evict_artificials(tableau, basis, n + m, tol)

    cost2 = np.zeros(ncols)
    cost2[:n] = c
    status = _simplex(tableau, basis, cost2, n + m, tol, max_iter)
    if status == "unbounded":
        return LpResult(status="unbounded")

    y = np.zeros(ncols)
    y[basis] = tableau[:, -1]
    x = problem.lb + y[:n]
    # Snap roundoff back inside the box.
    x = np.clip(x, problem.lb, problem.ub)
    return LpResult(status="optimal", x=x, objective=float(problem.c @ x))


def _simplex(tableau, basis, cost, entering_limit, tol, max_iter) -> str:
    """Canonical-form simplex with Bland's rule; pivots tableau in place.

    Only columns below entering_limit may enter the basis (used to freeze
    phase-1 artificials out of phase 2).
    """
    m = tableau.shape[0]
    for _ in range(max_iter):
        reduced = cost[:entering_limit] - cost[basis] @ tableau[:, :entering_limit]
        candidates = np.flatnonzero(reduced > tol)
        if candidates.size == 0:
            return "optimal"
        col = int(candidates[0])  # Bland: smallest improving index
        column = tableau[:, col]
        feasible_rows = np.flatnonzero(column > tol)
        if feasible_rows.size == 0:
            return "unbounded"
        ratios = tableau[feasible_rows, -1] / column[feasible_rows]
        best = ratios.min()
        tied = feasible_rows[ratios <= best + tol * max(1.0, abs(best))]
        row = int(tied[np.argmin(basis[tied])])  # Bland: smallest basis index
        _pivot(tableau, row, col)
        basis[row] = col
    raise ArithmeticError(
        f"simplex hit the iteration cap of {max_iter} pivots"
    )


def _pivot(tableau, row, col):
    tableau[row] /= tableau[row, col]
    factors = tableau[:, col].copy()
    factors[row] = 0.0
    tableau -= np.outer(factors, tableau[row])
    tableau[:, col] = 0.0
    tableau[row, col] = 1.0


def _evict_artificials(tableau, basis, n_real, tol):
    """Pivot leftover zero-valued artificials out of the basis when a real
    column is available; fully redundant rows keep their artificial at 0."""
    for i in range(tableau.shape[0]):
        if basis[i] >= n_real:
            cols = np.flatnonzero(np.abs(tableau[i, :n_real]) > tol)
            if cols.size:
                col = int(cols[0])
                _pivot(tableau, i, col)
                basis[i] = col
