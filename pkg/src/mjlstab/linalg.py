"""Dense linear-algebra kernels shared by the analysis modules.

Everything here operates on plain numpy arrays. The only nontrivial piece is
`spectral_radius`, which dispatches between a full QR eigensolve for small
matrices and a power iteration for large ones (the stability test matrices
reach a few thousand rows and only the dominant eigenvalue magnitude is
needed there).
"""

from __future__ import annotations

import numpy as np

# Refuse to materialize Kronecker products beyond this many entries.
KRON_ENTRY_LIMIT = 100_000_000

# Dimension above which spectral_radius switches from the QR eigensolver to
# power iteration.
QR_CUTOFF = 512


class SizeLimitError(ValueError):
    """A requested dense product would exceed the configured entry limit."""


def _as_matrix(a) -> np.ndarray:
    m = np.asarray(a, dtype=float)
    if m.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError("matrix has non-finite entries")
    return m


def kron(a, b, limit: int = KRON_ENTRY_LIMIT) -> np.ndarray:
    """Kronecker product of two dense matrices.

    Raises SizeLimitError if the result would have more than `limit` entries.
    """
    a = _as_matrix(a)
    b = _as_matrix(b)
    entries = a.shape[0] * b.shape[0] * a.shape[1] * b.shape[1]
    if entries > limit:
        raise SizeLimitError(
            f"kron result would have {entries} entries (limit {limit})"
        )
    return np.kron(a, b)


def kron_power(p, exponent: int, limit: int = KRON_ENTRY_LIMIT) -> np.ndarray:
    """`exponent`-fold Kronecker power; exponent 0 gives the 1x1 identity."""
    p = _as_matrix(p)
    if exponent < 0:
        raise ValueError("exponent must be non-negative")
    out = np.ones((1, 1))
    for _ in range(exponent):
        out = kron(out, p, limit=limit)
    return out


def inf_norm(m) -> float:
    """Infinity norm: maximum absolute row sum (max |entry| for vectors)."""
    m = np.asarray(m, dtype=float)
    if m.ndim == 1:
        return float(np.max(np.abs(m))) if m.size else 0.0
    if m.size == 0:
        return 0.0
    return float(np.max(np.sum(np.abs(m), axis=1)))


def spectral_radius(m, tol: float = 1e-9, max_iter: int = 50_000) -> float:
    """Largest eigenvalue magnitude of a square matrix.

    Dimensions up to QR_CUTOFF go through numpy's full eigensolver
    (Hessenberg-QR). Above that, a power iteration is used: it tracks the
    per-step growth ratio and the two-step geometric mean of growth (the
    latter converges even when the dominant eigenvalues are a complex
    conjugate pair), restarting from a fresh deterministic vector if the
    iterate degenerates. Deterministic for fixed input.
    """
    m = _as_matrix(m)
    rows, cols = m.shape
    if rows != cols:
        raise ValueError(f"matrix is not square: shape {m.shape}")
    if rows == 0:
        return 0.0
    if rows <= QR_CUTOFF:
        return float(np.max(np.abs(np.linalg.eigvals(m))))
    return _power_radius(m, tol, max_iter)


def _power_radius(m: np.ndarray, tol: float, max_iter: int) -> float:
    n = m.shape[0]
    scale = inf_norm(m)
    if scale == 0.0:
        return 0.0
    rng = np.random.default_rng(0x5EED0)
    restarts = 3
    estimate = 0.0
    for attempt in range(restarts):
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        prev_growth = None
        prev_est = None
        stable_checks = 0
        for it in range(max_iter):
            w = m @ v
            growth = float(np.linalg.norm(w))
            if growth < scale * 1e-290:
                # Iterate collapsed toward a nilpotent direction; restart.
                break
            v = w / growth
            if prev_growth is not None:
                # Two-step geometric mean smooths the oscillation produced
                # by a dominant complex-conjugate pair.
                est = float(np.sqrt(growth * prev_growth))
                if prev_est is not None:
                    denom = max(est, scale * 1e-300)
                    if abs(est - prev_est) <= tol * denom:
                        stable_checks += 1
                        if stable_checks >= 5:
                            return est
                    else:
                        stable_checks = 0
                prev_est = est
                estimate = est
            prev_growth = growth
        else:
            # Iteration budget exhausted without meeting tol.
            raise ArithmeticError(
                f"power iteration did not converge within {max_iter} "
                f"iterations (attempt {attempt + 1}/{restarts}, "
                f"last estimate {estimate})"
            )
        # collapsed; try a new starting vector
        estimate = max(estimate, 0.0)
    # All restarts collapsed: the matrix annihilated every probe, which for
    # practical purposes means the spectral radius is zero (nilpotent-like).
    return 0.0
