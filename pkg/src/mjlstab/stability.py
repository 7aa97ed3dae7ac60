"""Mean-square stability tests for the switched representation.

The network is mean-square stable iff the spectral radius of the test matrix
built from the mode family (the second-moment propagation operator) is below
one. The full-network family is exponentially large, so the scalable route is
the per-agent reduced test: run the same spectral test on every agent's
neighborhood family and require all of them to pass. Symmetric agents can be
grouped first so each distinct subsystem is only analyzed once.

The covariance recursion implemented here is the exact second-moment
propagation of the switched system and serves as an independent oracle for
the spectral verdicts.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ._parallel import parallel_map
from .linalg import SizeLimitError, inf_norm, spectral_radius
from .model import DncsModel, neighborhood
from .switched import MODE_CAP, ModeFamily, build_mode_family, enumerate_links

# Spectral radii within this distance of 1 are reported as "marginal" rather
# than being forced into a stable/unstable boolean.
MARGINAL_BAND = 1e-9

# Above this neighborhood size, agent grouping falls back from canonical
# relabeling (factorial in the neighborhood size) to the identity labeling,
# which may split classes but never merges distinct subsystems.
_CANONICAL_LIMIT = 8


def verdict(rho: float, band: float = MARGINAL_BAND) -> str:
    """Classify a spectral radius: stable / unstable / marginal."""
    if rho < 1.0 - band:
        return "stable"
    if rho > 1.0 + band:
        return "unstable"
    return "marginal"


@dataclass(eq=False)
class MssTestMatrix:
    """Second-moment test matrix of one mode family (dimension m*d^2)."""

    matrix: np.ndarray = field(repr=False)
    scope: str = "global"


def mss_matrix(family: ModeFamily, transition=None) -> MssTestMatrix:
    """Build the test matrix whose spectral radius decides stability.

    Block (s, r) equals P[r, s] * (W_r kron W_r): it maps the stacked
    per-mode second moments forward one step. `transition` overrides the
    family's joint chain (used by robustness scans that try perturbed
    chains against fixed mode matrices).
    """
    p = family.joint_P if transition is None else np.asarray(transition, dtype=float)
    m = family.mode_count
    if p.shape != (m, m):
        raise ValueError(f"transition: expected ({m}, {m}), got {p.shape}")
    d = family.state_dim
    dim = m * d * d
    if dim * dim > 100_000_000:
        raise SizeLimitError(
            f"test matrix would be {dim}x{dim} ({dim * dim} entries)"
        )
    out = np.empty((dim, dim))
    d2 = d * d
    for r in range(m):
        w = family.matrices[r]
        kr = np.kron(w, w)
        # column block r: rows s get P[r, s] * (W_r kron W_r)
        out[:, r * d2 : (r + 1) * d2] = np.kron(p[r][:, None], kr)
    return MssTestMatrix(matrix=out, scope=family.label)


@dataclass(frozen=True)
class ScopeResult:
    """Spectral test outcome for one scope (global or one agent)."""

    scope: str
    rho: float
    stable: bool
    m: int
    dim: int
    verdict: str


@dataclass
class StabilityReport:
    """Per-scope spectral radii plus the overall verdict.

    `classes` lists the agent groups that were deduplicated (None when the
    test ran without grouping); scopes then hold one entry per class
    representative.
    """

    scopes: list
    overall: str
    classes: list | None = None

    def to_dict(self) -> dict:
        return {
            "overall": self.overall,
            "scopes": [
                {
                    "scope": s.scope,
                    "rho": s.rho,
                    "stable": s.stable,
                    "verdict": s.verdict,
                    "m": s.m,
                    "dim": s.dim,
                }
                for s in self.scopes
            ],
            "classes": self.classes,
        }


def _overall(scopes) -> str:
    verdicts = {s.verdict for s in scopes}
    if "unstable" in verdicts:
        return "unstable"
    if "marginal" in verdicts:
        return "marginal"
    return "stable"


def _scope_result(family: ModeFamily) -> ScopeResult:
    test = mss_matrix(family)
    rho = spectral_radius(test.matrix)
    return ScopeResult(
        scope=family.label,
        rho=rho,
        stable=rho < 1.0,
        m=family.mode_count,
        dim=test.matrix.shape[0],
        verdict=verdict(rho),
    )


def mss_test_family(family: ModeFamily) -> StabilityReport:
    """Spectral mean-square test of a single prebuilt mode family."""
    result = _scope_result(family)
    return StabilityReport(scopes=[result], overall=_overall([result]))


def mss_test_full(model: DncsModel, max_modes: int = MODE_CAP) -> StabilityReport:
    """Full-network test: enumerate every delay mode of the whole network.

    Exact but exponential in the link count; raises EnumerationCapError with
    a pointer to the reduced test when the network is too large.
    """
    family = build_mode_family(model, scope=None, max_modes=max_modes)
    return mss_test_family(family)


def dedup_agents(model: DncsModel) -> list[list[int]]:
    """Group agents whose reduced subsystems are identical up to relabeling.

    Two agents land in the same class when some bijection between their
    neighborhoods (mapping center to center) carries every stored block of
    one exactly onto the corresponding block of the other. Each class can
    then be analyzed through a single representative.
    """
    groups: dict = {}
    for agent in range(1, model.n_agents + 1):
        signature = _canonical_signature(model, agent)
        groups.setdefault(signature, []).append(agent)
    return sorted(groups.values(), key=min)


def _canonical_signature(model: DncsModel, agent: int):
    nb = neighborhood(model, agent)
    others = [a for a in nb if a != agent]
    links = enumerate_links(model, agent)
    if len(others) <= _CANONICAL_LIMIT:
        orderings = itertools.permutations(others)
    else:
        orderings = [tuple(others)]
    best = None
    for perm in orderings:
        pos = {agent: 0}
        for k, a in enumerate(perm):
            pos[a] = k + 1
        diag = tuple(
            sorted((pos[a], model.blocks[(a, a)].tobytes()) for a in nb)
        )
        link_sig = tuple(
            sorted(
                (pos[l], pos[j], model.blocks[(l, j)].tobytes()) for (l, j) in links
            )
        )
        candidate = (len(nb), diag, link_sig)
        if best is None or candidate < best:
            best = candidate
    return best


def mss_test_reduced(
    model: DncsModel,
    dedup: bool = False,
    threads: int | None = None,
    max_modes: int = MODE_CAP,
) -> StabilityReport:
    """Per-agent reduced test: the network is mean-square stable iff every
    agent's neighborhood subsystem passes the spectral test.

    With dedup=True, symmetric agents are grouped first and one
    representative per class is evaluated.
    """
    if dedup:
        classes = dedup_agents(model)
    else:
        classes = [[i] for i in range(1, model.n_agents + 1)]
    reps = [cls[0] for cls in classes]

    def run(rep: int) -> ScopeResult:
        family = build_mode_family(model, scope=rep, max_modes=max_modes)
        return _scope_result(family)

    scopes = parallel_map(run, reps, threads=threads)
    return StabilityReport(
        scopes=scopes,
        overall=_overall(scopes),
        classes=classes if dedup else None,
    )


def block_norm_sufficient(family: ModeFamily, transition=None) -> bool:
    """Quick sufficient test: row sums of mode-norm blocks all below one.

    For every block row s of the test matrix, sum_r P[r, s] * |W_r kron W_r|
    must be < 1 (the infinity norm bounds the spectral radius, and the norm
    of a Kronecker square is the squared norm). True implies the spectral
    test passes; false says nothing.
    """
    p = family.joint_P if transition is None else np.asarray(transition, dtype=float)
    alphas = np.array([inf_norm(w) ** 2 for w in family.matrices])
    column_sums = alphas @ p  # entry s: sum_r P[r, s] * alpha_r
    return bool(np.all(column_sums < 1.0))


# ---------------------------------------------------------------------------
# Exact covariance recursion (second-moment oracle)
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class CovarianceState:
    """Mode-conditioned second moments Q_s(k) (already weighted by the mode
    occupation probability) plus the mode distribution at step k."""

    Q: np.ndarray = field(repr=False)
    pi: np.ndarray
    k: int = 0


def covariance_init(family: ModeFamily) -> CovarianceState:
    """Isotropic start: Q_s(0) = pi0_s * I, exciting every direction."""
    d = family.state_dim
    q0 = np.stack([pi * np.eye(d) for pi in family.joint_pi0])
    return CovarianceState(Q=q0, pi=family.joint_pi0.copy(), k=0)


def covariance_step(family: ModeFamily, state: CovarianceState) -> CovarianceState:
    """One exact step: Q_s(k+1) = sum_r P[r, s] W_r Q_r(k) W_r^T."""
    w = family.matrices
    if state.Q.shape != w.shape:
        raise ValueError(
            f"covariance state shape {state.Q.shape} does not match family "
            f"{w.shape}"
        )
    pushed = np.einsum("rij,rjk,rlk->ril", w, state.Q, w)
    new_q = np.einsum("rs,ril->sil", family.joint_P, pushed)
    new_pi = state.pi @ family.joint_P
    return CovarianceState(Q=new_q, pi=new_pi, k=state.k + 1)


def covariance_trace(state: CovarianceState) -> float:
    """Total expected squared norm at the state's step: sum_s tr Q_s."""
    return float(np.trace(state.Q, axis1=1, axis2=2).sum())


def stack_covariance(state: CovarianceState) -> np.ndarray:
    """Column-major vectorization of every Q_s, stacked mode by mode.

    The test matrix propagates exactly this vector: stacking after
    covariance_step equals mss_matrix(family).matrix @ stacking before.
    """
    return np.concatenate([q.reshape(-1, order="F") for q in state.Q])
