"""Robustness of the stability verdict to transition-matrix uncertainty.

Given a mode family and a nominal chain, the norm-based sufficient condition
says the perturbed system stays mean-square stable whenever, for every column
s, sum_r alpha_r |dp_rs| < beta_s, with alpha_r the infinity norm of the
Kronecker-squared mode matrix and beta_s = 1 - sum_r pbar_rs alpha_r the
nominal margin of that column. The two-step procedure below turns this into
per-row bounds eps_r: step 1 pushes each column's perturbation as far up and
as far down as the margin and the box constraints allow (one small LP per
column, which decouple), step 2 takes the per-row worst case over columns and
directions.

Perturbations are structured: each row of the chain must still sum to one, so
every admissible dP has zero row sums, and entries of nominal+dP must stay in
[0, 1] (which is where the per-column boxes come from).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._parallel import parallel_map
from .linalg import inf_norm, spectral_radius
from .lp import LpProblem, lp_solve
from .switched import ModeFamily


class BoundsInfeasibleError(RuntimeError):
    """The nominal chain already fails the norm margin (some beta <= 0)."""


def alphas(family: ModeFamily) -> np.ndarray:
    """Per-mode norm coefficients: the infinity norm of W_r kron W_r.

    Absolute row sums multiply under the Kronecker product, so this equals
    the squared infinity norm of W_r; computed that way to avoid
    materializing the product.
    """
    return np.array([inf_norm(w) ** 2 for w in family.matrices])


def betas(alpha, nominal) -> np.ndarray:
    """Per-column stability margins: beta_s = 1 - sum_r nominal[r, s] * alpha_r.

    Negative entries mean the nominal chain itself is outside the
    norm-certifiable region.
    """
    alpha = np.asarray(alpha, dtype=float)
    nominal = _check_nominal(nominal, alpha.shape[0])
    return 1.0 - alpha @ nominal


def _check_nominal(nominal, m: int) -> np.ndarray:
    p = np.asarray(nominal, dtype=float)
    if p.shape != (m, m):
        raise ValueError(f"nominal chain: expected ({m}, {m}), got {p.shape}")
    if np.any(p < -1e-12) or np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-9):
        raise ValueError("nominal chain is not row-stochastic")
    return p


def solve_bound_lp(
    family: ModeFamily,
    nominal=None,
    direction: str = "upper",
    margin: float = 0.0,
    threads: int | None = None,
) -> np.ndarray:
    """Step 1: per-column extremal perturbations under the norm margin.

    For each column s, maximize (direction="upper") or minimize ("lower")
    sum_r z_r subject to sum_r alpha_r z_r <= beta_s - margin and the box
    -nominal[r, s] <= z_r <= 1 - nominal[r, s]. Columns are independent;
    the result packs the per-column optimizers as columns of an m x m array.

    Requires beta_s > margin for every s (the nominal point must satisfy
    the margin strictly); raises BoundsInfeasibleError otherwise.
    """
    if direction not in ("upper", "lower"):
        raise ValueError(f"direction must be 'upper' or 'lower', got {direction!r}")
    m = family.mode_count
    nominal = _check_nominal(family.joint_P if nominal is None else nominal, m)
    alpha = alphas(family)
    beta = betas(alpha, nominal)
    if np.min(beta) <= margin:
        raise BoundsInfeasibleError(
            f"nominal chain fails the norm margin: min beta = {beta.min():.6g} "
            f"(margin {margin:.6g})"
        )

    def solve_column(s: int) -> np.ndarray:
        problem = LpProblem(
            c=np.ones(m),
            a_ub=alpha[None, :],
            b_ub=np.array([beta[s] - margin]),
            lb=-nominal[:, s],
            ub=1.0 - nominal[:, s],
            sense="max" if direction == "upper" else "min",
        )
        result = lp_solve(problem)
        if result.status != "optimal":
            raise ArithmeticError(
                f"bound LP for column {s} returned {result.status}"
            )
        return result.x

    columns = parallel_map(solve_column, range(m), threads=threads)
    return np.column_stack(columns)


def feasible_bound(z_lb, z_ub) -> np.ndarray:
    """Step 2: per-row bound eps_r = min over columns and directions of the
    absolute optimizer entries."""
    z_lb = np.asarray(z_lb, dtype=float)
    z_ub = np.asarray(z_ub, dtype=float)
    if z_lb.shape != z_ub.shape or z_lb.ndim != 2:
        raise ValueError("z_lb and z_ub must be equal-shape 2-d arrays")
    return np.minimum(np.abs(z_lb).min(axis=1), np.abs(z_ub).min(axis=1))


@dataclass(eq=False)
class BoundResult:
    """Outcome of the two-step bound estimation for one mode family."""

    alpha: np.ndarray
    beta: np.ndarray
    z_ub: np.ndarray = field(repr=False)
    z_lb: np.ndarray = field(repr=False)
    eps: np.ndarray
    feasible: bool

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha.tolist(),
            "beta": self.beta.tolist(),
            "eps": self.eps.tolist(),
            "feasible": self.feasible,
            "z_ub": self.z_ub.tolist(),
            "z_lb": self.z_lb.tolist(),
        }


def compute_bounds(
    family: ModeFamily,
    nominal=None,
    margin: float = 0.0,
    threads: int | None = None,
) -> BoundResult:
    """Full pipeline: alphas, betas, both LP directions, then eps.

    When some beta_s <= margin the nominal chain sits outside the
    norm-certifiable region; that is reported in-band as feasible=False with
    eps = 0 (the condition is only sufficient, so the exact spectral test may
    still pass there).
    """
    m = family.mode_count
    nominal = _check_nominal(family.joint_P if nominal is None else nominal, m)
    alpha = alphas(family)
    beta = betas(alpha, nominal)
    zeros = np.zeros((m, m))
    if np.min(beta) <= margin:
        return BoundResult(
            alpha=alpha,
            beta=beta,
            z_ub=zeros,
            z_lb=zeros.copy(),
            eps=np.zeros(m),
            feasible=False,
        )
    z_ub = solve_bound_lp(family, nominal, "upper", margin, threads)
    z_lb = solve_bound_lp(family, nominal, "lower", margin, threads)
    return BoundResult(
        alpha=alpha,
        beta=beta,
        z_ub=z_ub,
        z_lb=z_lb,
        eps=feasible_bound(z_lb, z_ub),
        feasible=True,
    )


def robust_sufficient(family: ModeFamily, nominal, delta) -> bool:
    """Norm-based sufficient stability check of a structured perturbation.

    delta must have zero row sums (rows of a chain keep summing to one) and
    nominal+delta must stay entrywise in [0, 1]; violations raise ValueError.
    True means every column satisfies sum_r alpha_r |delta_rs| < beta_s,
    which guarantees the perturbed spectral test still passes. False says
    nothing either way.
    """
    m = family.mode_count
    nominal = _check_nominal(nominal, m)
    delta = np.asarray(delta, dtype=float)
    if delta.shape != (m, m):
        raise ValueError(f"delta: expected ({m}, {m}), got {delta.shape}")
    if np.any(np.abs(delta.sum(axis=1)) > 1e-10):
        raise ValueError("perturbation rows must sum to zero")
    perturbed = nominal + delta
    if np.any(perturbed < -1e-12) or np.any(perturbed > 1.0 + 1e-12):
        raise ValueError("perturbed chain leaves [0, 1]")
    alpha = alphas(family)
    beta = betas(alpha, nominal)
    return bool(np.all(alpha @ np.abs(delta) < beta))


def grid_scan_max_rho(
    family: ModeFamily, nominal, eps, resolution: float = 1e-3
) -> float:
    """Worst spectral radius over the certified box, for 2-mode chains.

    Scans the two free perturbation parameters (one per row, since row sums
    are pinned to zero) on a grid of the given resolution, evaluating the
    spectral test at every admissible chain nominal + dP with |dp_r| <= eps_r.
    """
    m = family.mode_count
    if m != 2:
        raise ValueError("grid scan is implemented for 2-mode chains only")
    nominal = _check_nominal(nominal, m)
    eps = np.asarray(eps, dtype=float)
    if eps.shape != (2,):
        raise ValueError("eps must have one entry per mode")

    kron_sq = [np.kron(w, w) for w in family.matrices]
    d2 = kron_sq[0].shape[0]

    def axis(bound: float) -> np.ndarray:
        if bound <= 0:
            return np.zeros(1)
        count = int(round(2 * bound / resolution)) + 1
        return np.linspace(-bound, bound, count)

    worst = 0.0
    test = np.empty((2 * d2, 2 * d2))
    for t1 in axis(eps[0]):
        for t2 in axis(eps[1]):
            p = nominal + np.array([[t1, -t1], [t2, -t2]])
            if np.any(p < -1e-12) or np.any(p > 1.0 + 1e-12):
                continue
            for r in range(2):
                test[:, r * d2 : (r + 1) * d2] = np.kron(
                    p[r][:, None], kron_sq[r]
                )
            worst = max(worst, spectral_radius(test))
    return worst
