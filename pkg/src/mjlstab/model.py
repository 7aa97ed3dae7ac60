"""Network model definition, JSON ingestion, and benchmark generators.

A DncsModel describes N coupled linear agents x_i(k+1) = sum_j A_ij x_j(k*),
where the off-diagonal terms arrive over communication links subject to a
random delay governed by a shared Markov chain. Blocks are stored sparsely:
only pairs (i, j) with a nonzero coupling are present, and the diagonal block
A_ii is always stored. Agent indices are one-based everywhere, matching the
JSON schema.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import spectral_radius

_STOCH_TOL = 1e-12


class ModelError(ValueError):
    """Raised for malformed model documents or invariant violations.

    The message starts with the path of the offending field when the error
    comes from document parsing (e.g. ``blocks[2].values``).
    """


def _frozen_array(values, shape=None) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if shape is not None and arr.shape != shape:
        raise ModelError(f"expected array of shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class DelayChain:
    """Per-link delay Markov chain: q delay states 0..tau_d.

    P is the q x q row-stochastic transition matrix, pi0 the initial
    distribution over delay values.
    """

    P: np.ndarray
    pi0: np.ndarray

    def __post_init__(self):
        p = _frozen_array(self.P)
        pi0 = _frozen_array(self.pi0)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] < 1:
            raise ModelError(f"chain.P: expected a square matrix, got shape {p.shape}")
        q = p.shape[0]
        if pi0.shape != (q,):
            raise ModelError(f"chain.pi0: expected length {q}, got shape {pi0.shape}")
        if np.any(p < -_STOCH_TOL) or np.any(p > 1 + _STOCH_TOL):
            raise ModelError("chain.P: entries must lie in [0, 1]")
        if np.any(np.abs(p.sum(axis=1) - 1.0) > _STOCH_TOL):
            bad = int(np.argmax(np.abs(p.sum(axis=1) - 1.0)))
            raise ModelError(
                f"chain.P[{bad}]: row not stochastic (sums to {p[bad].sum()!r})"
            )
        if np.any(pi0 < -_STOCH_TOL) or np.any(pi0 > 1 + _STOCH_TOL):
            raise ModelError("chain.pi0: entries must lie in [0, 1]")
        if abs(pi0.sum() - 1.0) > _STOCH_TOL:
            raise ModelError(f"chain.pi0: sums to {pi0.sum()!r}, not 1")
        object.__setattr__(self, "P", p)
        object.__setattr__(self, "pi0", pi0)

    @property
    def q(self) -> int:
        return self.P.shape[0]

    def __eq__(self, other):
        if not isinstance(other, DelayChain):
            return NotImplemented
        return np.array_equal(self.P, other.P) and np.array_equal(self.pi0, other.pi0)


@dataclass(frozen=True)
class PendulumParams:
    """Physical and control parameters of the coupled inverted-pendulum chain.

    Defaults: gravity 9.8, control gain 5, pendulum mass 0.5, length 1,
    sampling period 0.1, spring coupling 0.04. Endpoints of the chain have one
    spring (a_end = 1), interior pendulums two (a_mid = 2).
    """

    gravity: float = 9.8
    gain: float = 5.0
    mass: float = 0.5
    length: float = 1.0
    dt: float = 0.1
    coupling: float = 0.04
    a_end: float = 1.0
    a_mid: float = 2.0

    def __post_init__(self):
        for name in ("gravity", "gain", "mass", "length", "dt", "a_end", "a_mid"):
            if getattr(self, name) <= 0:
                raise ModelError(f"pendulum parameter {name} must be positive")
        if self.coupling < 0:
            raise ModelError("pendulum parameter coupling must be non-negative")


@dataclass(eq=False)
class DncsModel:
    """Networked model: agent count, per-agent dimension, sparse coupling
    blocks, delay bound and the shared per-link delay chain.

    Immutable by convention after construction (arrays are read-only); all
    operations on it are pure reads.
    """

    n_agents: int
    n: int
    tau_d: int
    blocks: dict = field(repr=False)
    chain: DelayChain

    def __post_init__(self):
        if not isinstance(self.n_agents, int) or self.n_agents < 1:
            raise ModelError("N: expected integer >= 1")
        if not isinstance(self.n, int) or self.n < 1:
            raise ModelError("n: expected integer >= 1")
        if not isinstance(self.tau_d, int) or self.tau_d < 0:
            raise ModelError("tau_d: expected integer >= 0")
        if self.chain.q != self.tau_d + 1:
            raise ModelError(
                f"chain: has {self.chain.q} delay states, expected tau_d+1 = "
                f"{self.tau_d + 1}"
            )
        frozen = {}
        for key, mat in self.blocks.items():
            i, j = key
            if not (1 <= i <= self.n_agents and 1 <= j <= self.n_agents):
                raise ModelError(f"blocks: agent pair {key} out of range")
            arr = _frozen_array(mat)
            if arr.shape != (self.n, self.n):
                raise ModelError(
                    f"blocks: block {key} has shape {arr.shape}, expected "
                    f"({self.n}, {self.n})"
                )
            if i != j and not arr.any():
                raise ModelError(
                    f"blocks: off-diagonal block {key} is zero; omit it instead"
                )
            frozen[(i, j)] = arr
        for i in range(1, self.n_agents + 1):
            if (i, i) not in frozen:
                raise ModelError(f"blocks: missing diagonal block for agent {i}")
        self.blocks = frozen

    @property
    def q(self) -> int:
        return self.tau_d + 1

    def __eq__(self, other):
        if not isinstance(other, DncsModel):
            return NotImplemented
        if (self.n_agents, self.n, self.tau_d) != (other.n_agents, other.n, other.tau_d):
            return False
        if self.chain != other.chain:
            return False
        if set(self.blocks) != set(other.blocks):
            return False
        return all(np.array_equal(self.blocks[k], other.blocks[k]) for k in self.blocks)


def neighborhood(model: DncsModel, i: int) -> list[int]:
    """Sorted neighbor set of agent i, including i itself.

    An agent j is a neighbor when either coupling block (i, j) or (j, i) is
    stored.
    """
    if not 1 <= i <= model.n_agents:
        raise ModelError(f"agent index {i} out of range (1..{model.n_agents})")
    nb = {i}
    for (a, b) in model.blocks:
        if a == i:
            nb.add(b)
        elif b == i:
            nb.add(a)
    return sorted(nb)


def build_global_matrix(model: DncsModel) -> np.ndarray:
    """Assemble the dense block matrix of the delay-free network."""
    n = model.n
    size = model.n_agents * n
    a = np.zeros((size, size))
    for (i, j), blk in model.blocks.items():
        a[(i - 1) * n : i * n, (j - 1) * n : j * n] = blk
    return a


def nominal_stability(model: DncsModel) -> tuple[float, bool]:
    """Spectral radius of the delay-free network matrix and whether it is
    Schur stable (rho < 1)."""
    rho = spectral_radius(build_global_matrix(model))
    return rho, rho < 1.0


# ---------------------------------------------------------------------------
# Benchmark generator: chain of spring-coupled inverted pendulums
# ---------------------------------------------------------------------------


def default_chain() -> DelayChain:
    """Two-state delay chain used by the pendulum benchmark: delays start at
    0 and persist with the transition matrix [[0.5, 0.5], [0.3, 0.7]]."""
    return DelayChain(P=[[0.5, 0.5], [0.3, 0.7]], pi0=[1.0, 0.0])


def build_pendulum_model(
    n_agents: int,
    params: PendulumParams | None = None,
    chain: DelayChain | None = None,
) -> DncsModel:
    """Chain of inverted pendulums coupled to nearest neighbors by springs,
    each stabilized by local state feedback.

    The discretized pendulum has state (angle, angular velocity). The local
    state feedback u_i = K_i x_i with K_i = [a_i*gain - (m l^2/4)(8 + 4g/l),
    -3 m l^2] cancels the open-loop gravity and spring-count terms exactly,
    placing the closed-loop poles at 1-dt and 1-2dt for every agent. The
    diagonal block is therefore built in its cancelled form [[1, dt],
    [-2dt, 1-3dt]]: agent grouping compares blocks bitwise, and evaluating
    A_i + B_i K_i per agent would leave ulp-level residue that differs
    between endpoint and interior agents. The spring coupling enters through
    the off-diagonal blocks to agents i-1 and i+1.
    """
    if n_agents < 2:
        raise ModelError("pendulum chain needs at least 2 agents")
    p = params if params is not None else PendulumParams()
    ch = chain if chain is not None else default_chain()

    ml2 = p.mass * p.length * p.length
    closed_loop = np.array([[1.0, p.dt], [-2.0 * p.dt, 1.0 - 3.0 * p.dt]])
    coupling_block = np.array([[0.0, 0.0], [p.coupling * p.gain * p.dt / ml2, 0.0]])

    blocks = {}
    coupled = p.coupling > 0  # coupling=0 decouples the chain: store no links
    for i in range(1, n_agents + 1):
        blocks[(i, i)] = closed_loop
        if coupled and i > 1:
            blocks[(i, i - 1)] = coupling_block
        if coupled and i < n_agents:
            blocks[(i, i + 1)] = coupling_block
    return DncsModel(n_agents=n_agents, n=2, tau_d=ch.q - 1, blocks=blocks, chain=ch)


# ---------------------------------------------------------------------------
# JSON ingestion / serialization
# ---------------------------------------------------------------------------


def _req(obj: dict, key: str, path: str):
    if key not in obj:
        raise ModelError(f"{path}: missing field '{key}'" if path else f"missing field '{key}'")
    return obj[key]


def _as_int(value, path: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ModelError(f"{path}: expected an integer")
    if value < minimum:
        raise ModelError(f"{path}: must be >= {minimum}")
    return value


def _as_number_list(value, count: int, path: str) -> list[float]:
    if not isinstance(value, list):
        raise ModelError(f"{path}: expected an array")
    if len(value) != count:
        raise ModelError(f"{path}: expected {count} numbers, got {len(value)}")
    out = []
    for idx, item in enumerate(value):
        if isinstance(item, bool) or not isinstance(item, (int, float)):
            raise ModelError(f"{path}[{idx}]: expected a number")
        if not math.isfinite(item):
            raise ModelError(f"{path}[{idx}]: non-finite value")
        out.append(float(item))
    return out


def load_model(text: str) -> DncsModel:
    """Parse and validate a JSON model document.

    Schema: {"N": int, "n": int, "tau_d": int,
             "blocks": [{"i": int, "j": int, "values": [n*n numbers]}],
             "chain": {"P": [[q*q numbers]], "pi0": [q numbers]}}
    with one-based agent indices and row-major block values. Errors carry the
    path of the offending field.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ModelError("top level: expected an object")

    n_agents = _as_int(_req(doc, "N", ""), "N", 1)
    n = _as_int(_req(doc, "n", ""), "n", 1)
    tau_d = _as_int(_req(doc, "tau_d", ""), "tau_d", 0)
    q = tau_d + 1

    raw_blocks = _req(doc, "blocks", "")
    if not isinstance(raw_blocks, list):
        raise ModelError("blocks: expected an array")
    blocks = {}
    for idx, entry in enumerate(raw_blocks):
        path = f"blocks[{idx}]"
        if not isinstance(entry, dict):
            raise ModelError(f"{path}: expected an object")
        i = _as_int(_req(entry, "i", path), f"{path}.i", 1)
        j = _as_int(_req(entry, "j", path), f"{path}.j", 1)
        if i > n_agents or j > n_agents:
            raise ModelError(f"{path}: agent pair ({i}, {j}) out of range (1..{n_agents})")
        if (i, j) in blocks:
            raise ModelError(f"{path}: duplicate block ({i}, {j})")
        values = _as_number_list(_req(entry, "values", path), n * n, f"{path}.values")
        mat = np.array(values).reshape(n, n)
        if i != j and not mat.any():
            raise ModelError(f"{path}: off-diagonal block ({i}, {j}) is zero; omit it instead")
        blocks[(i, j)] = mat
    for i in range(1, n_agents + 1):
        if (i, i) not in blocks:
            raise ModelError(f"blocks: missing diagonal block for agent {i}")

    raw_chain = _req(doc, "chain", "")
    if not isinstance(raw_chain, dict):
        raise ModelError("chain: expected an object")
    raw_p = _req(raw_chain, "P", "chain")
    if not isinstance(raw_p, list) or len(raw_p) != q:
        raise ModelError(f"chain.P: expected {q} rows")
    p_rows = [_as_number_list(row, q, f"chain.P[{r}]") for r, row in enumerate(raw_p)]
    for r, row in enumerate(p_rows):
        if any(not 0.0 <= v <= 1.0 for v in row):
            raise ModelError(f"chain.P[{r}]: probability out of [0, 1]")
        if abs(sum(row) - 1.0) > _STOCH_TOL:
            raise ModelError(f"chain.P[{r}]: row not stochastic (sums to {sum(row)!r})")
    pi0 = _as_number_list(_req(raw_chain, "pi0", "chain"), q, "chain.pi0")
    if any(not 0.0 <= v <= 1.0 for v in pi0):
        raise ModelError("chain.pi0: probability out of [0, 1]")
    if abs(sum(pi0) - 1.0) > _STOCH_TOL:
        raise ModelError(f"chain.pi0: sums to {sum(pi0)!r}, not 1")

    chain = DelayChain(P=p_rows, pi0=pi0)
    return DncsModel(n_agents=n_agents, n=n, tau_d=tau_d, blocks=blocks, chain=chain)


def dump_model(model: DncsModel) -> str:
    """Serialize a model to canonical JSON (blocks sorted by (i, j)).

    load_model(dump_model(m)) == m exactly; float values round-trip bit-for-bit.
    """
    doc = {
        "N": model.n_agents,
        "n": model.n,
        "tau_d": model.tau_d,
        "blocks": [
            {"i": i, "j": j, "values": [float(v) for v in model.blocks[(i, j)].ravel()]}
            for (i, j) in sorted(model.blocks)
        ],
        "chain": {
            "P": [[float(v) for v in row] for row in model.chain.P],
            "pi0": [float(v) for v in model.chain.pi0],
        },
    }
    return json.dumps(doc, indent=1)
