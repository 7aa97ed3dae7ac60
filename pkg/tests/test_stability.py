import numpy as np
import pytest

from mjlstab.linalg import spectral_radius
from mjlstab.model import DelayChain, DncsModel, build_pendulum_model
from mjlstab.stability import (
    MARGINAL_BAND,
    ScopeResult,
    _overall,
    block_norm_sufficient,
    covariance_init,
    covariance_step,
    covariance_trace,
    dedup_agents,
    mss_matrix,
    mss_test_family,
    mss_test_full,
    mss_test_reduced,
    stack_covariance,
    verdict,
)
from mjlstab.switched import EnumerationCapError, ModeFamily, build_mode_family


def scalar_family(a1=0.5, a2=1.25, p=None):
    if p is None:
        p = [[0.4, 0.6], [0.5, 0.5]]
    return ModeFamily.from_matrices([[[a1]], [[a2]]], p)


def random_model(seed, n_agents=5):
    rng = np.random.default_rng(seed)
    blocks = {
        (i, i): rng.uniform(-0.9, 0.9, size=(1, 1))
        for i in range(1, n_agents + 1)
    }
    for i in range(1, n_agents):
        blocks[(i, i + 1)] = rng.uniform(-0.3, 0.3, size=(1, 1))
        blocks[(i + 1, i)] = rng.uniform(-0.3, 0.3, size=(1, 1))
    chain = DelayChain(P=[[0.7, 0.3], [0.4, 0.6]], pi0=[1.0, 0.0])
    return DncsModel(n_agents=n_agents, n=1, tau_d=1, blocks=blocks, chain=chain)


# ---------------------------------------------------------------------------
# Test matrix layout
# ---------------------------------------------------------------------------


def test_mss_matrix_two_mode_scalar_layout():
    fam = scalar_family()
    test = mss_matrix(fam)
    assert np.array_equal(
        test.matrix,
        [[0.4 * 0.25, 0.5 * 1.5625], [0.6 * 0.25, 0.5 * 1.5625]],
    )
    assert test.scope == "family"


def test_mss_matrix_block_structure_matches_kron():
    rng = np.random.default_rng(3)
    mats = rng.normal(size=(3, 2, 2))
    p = np.array([[0.2, 0.3, 0.5], [0.1, 0.6, 0.3], [0.4, 0.4, 0.2]])
    fam = ModeFamily.from_matrices(mats, p)
    big = mss_matrix(fam).matrix
    assert big.shape == (12, 12)
    for r in range(3):
        kr = np.kron(mats[r], mats[r])
        for s in range(3):
            block = big[s * 4 : (s + 1) * 4, r * 4 : (r + 1) * 4]
            assert np.array_equal(block, p[r, s] * kr)


def test_mss_matrix_transition_override():
    fam = scalar_family()
    q = np.array([[0.9, 0.1], [0.2, 0.8]])
    test = mss_matrix(fam, transition=q)
    assert np.array_equal(
        test.matrix, [[0.9 * 0.25, 0.2 * 1.5625], [0.1 * 0.25, 0.8 * 1.5625]]
    )
    with pytest.raises(ValueError, match="transition"):
        mss_matrix(fam, transition=np.eye(3))


# ---------------------------------------------------------------------------
# Verdicts
# ---------------------------------------------------------------------------


def test_verdict_boundaries():
    assert verdict(1.0 - 2e-9) == "stable"
    assert verdict(1.0) == "marginal"
    assert verdict(1.0 + 2e-9) == "unstable"
    assert verdict(1.0 - 0.5e-9) == "marginal"
    assert verdict(1.0 + 0.5e-9) == "marginal"
    assert MARGINAL_BAND == 1e-9


def test_overall_precedence():
    def scope(v):
        return ScopeResult(
            scope="agent 1", rho=1.0, stable=False, m=1, dim=1, verdict=v
        )

    assert _overall([scope("stable"), scope("stable")]) == "stable"
    assert _overall([scope("stable"), scope("marginal")]) == "marginal"
    assert _overall([scope("marginal"), scope("unstable")]) == "unstable"
    assert _overall([scope("stable"), scope("unstable")]) == "unstable"


# ---------------------------------------------------------------------------
# Covariance recursion
# ---------------------------------------------------------------------------


def test_covariance_init_is_weighted_identity():
    fam = scalar_family()
    state = covariance_init(fam)
    assert state.k == 0
    assert np.array_equal(state.pi, fam.joint_pi0)
    for s in range(fam.mode_count):
        assert np.array_equal(state.Q[s], fam.joint_pi0[s] * np.eye(1))
    assert covariance_trace(state) == pytest.approx(fam.state_dim, abs=1e-12)


def test_covariance_step_updates_mode_distribution():
    fam = scalar_family()
    state = covariance_step(fam, covariance_init(fam))
    assert state.k == 1
    assert np.allclose(state.pi, fam.joint_pi0 @ fam.joint_P, atol=1e-15)


def test_covariance_step_rejects_mismatched_state():
    fam = scalar_family()
    other = ModeFamily.from_matrices(np.zeros((2, 2, 2)), np.full((2, 2), 0.5))
    with pytest.raises(ValueError, match="does not match"):
        covariance_step(fam, covariance_init(other))


def test_stacked_covariance_follows_test_matrix():
    """The stacked vectorized covariances evolve exactly by powers of the
    second-moment test matrix; this ties the recursion to the spectral test."""
    model = build_pendulum_model(2)
    fam = build_mode_family(model)
    lam = mss_matrix(fam).matrix
    state = covariance_init(fam)
    y0 = stack_covariance(state)
    for k in range(1, 9):
        state = covariance_step(fam, state)
        expected = np.linalg.matrix_power(lam, k) @ y0
        assert np.allclose(stack_covariance(state), expected, rtol=1e-12, atol=1e-14)


def test_covariance_trace_decays_for_stable_family():
    fam = scalar_family(a1=0.5, a2=0.6, p=[[0.5, 0.5], [0.5, 0.5]])
    state = covariance_init(fam)
    for _ in range(60):
        state = covariance_step(fam, state)
    assert covariance_trace(state) < 1e-8


# ---------------------------------------------------------------------------
# Full and reduced tests
# ---------------------------------------------------------------------------


def test_full_equals_family_on_same_enumeration():
    model = random_model(0, n_agents=3)
    direct = mss_test_family(build_mode_family(model))
    full = mss_test_full(model)
    assert full.scopes[0].rho == direct.scopes[0].rho
    assert full.scopes[0].scope == "global"
    assert full.classes is None


def test_full_equals_reduced_when_neighborhood_is_whole_network():
    model = build_pendulum_model(2)
    full = mss_test_full(model)
    reduced = mss_test_reduced(model)
    assert len(reduced.scopes) == 2
    for scope in reduced.scopes:
        assert scope.rho == full.scopes[0].rho
        assert scope.m == full.scopes[0].m == 4
    assert reduced.overall == full.overall == "stable"


def test_full_raises_cap_on_large_network():
    with pytest.raises(EnumerationCapError):
        mss_test_full(build_pendulum_model(100))


def test_reduced_report_shape():
    model = build_pendulum_model(4)
    report = mss_test_reduced(model)
    assert [s.scope for s in report.scopes] == [f"agent {i}" for i in (1, 2, 3, 4)]
    assert report.classes is None
    d = report.to_dict()
    assert set(d) == {"overall", "scopes", "classes"}
    assert d["classes"] is None
    assert set(d["scopes"][0]) == {"scope", "rho", "stable", "verdict", "m", "dim"}


def test_reduced_threads_do_not_change_results():
    model = build_pendulum_model(5)
    serial = mss_test_reduced(model, threads=1)
    parallel = mss_test_reduced(model, threads=2)
    assert [s.rho for s in serial.scopes] == [s.rho for s in parallel.scopes]
    assert [s.scope for s in serial.scopes] == [s.scope for s in parallel.scopes]


# ---------------------------------------------------------------------------
# Deduplication
# ---------------------------------------------------------------------------


def test_dedup_pendulum_two_classes():
    classes = dedup_agents(build_pendulum_model(100))
    assert classes == [[1, 100], list(range(2, 100))]


def test_dedup_two_agents_single_class():
    assert dedup_agents(build_pendulum_model(2)) == [[1, 2]]


def test_dedup_distinct_agents_stay_singletons():
    model = random_model(7)
    assert dedup_agents(model) == [[1], [2], [3], [4], [5]]


def test_dedup_class_members_share_exact_rho():
    model = build_pendulum_model(6)
    per_agent = mss_test_reduced(model, dedup=False)
    rhos = {s.scope: s.rho for s in per_agent.scopes}
    for cls in dedup_agents(model):
        class_rhos = {rhos[f"agent {i}"] for i in cls}
        assert len(class_rhos) == 1


def test_dedup_report_lists_classes_and_representatives():
    model = build_pendulum_model(100)
    report = mss_test_reduced(model, dedup=True)
    assert report.classes == [[1, 100], list(range(2, 100))]
    assert [s.scope for s in report.scopes] == ["agent 1", "agent 2"]
    plain = mss_test_reduced(build_pendulum_model(6), dedup=False)
    deduped = mss_test_reduced(build_pendulum_model(6), dedup=True)
    by_scope = {s.scope: s.rho for s in plain.scopes}
    for s in deduped.scopes:
        assert s.rho == by_scope[s.scope]


def test_dedup_is_relabel_aware_not_order_sensitive():
    # mirror-symmetric chain: agents 1 and 3 match under reversal
    blocks = {
        (1, 1): np.array([[0.5]]),
        (2, 2): np.array([[0.7]]),
        (3, 3): np.array([[0.5]]),
        (1, 2): np.array([[0.1]]),
        (2, 1): np.array([[0.2]]),
        (3, 2): np.array([[0.1]]),
        (2, 3): np.array([[0.2]]),
    }
    chain = DelayChain(P=[[0.5, 0.5], [0.5, 0.5]], pi0=[1.0, 0.0])
    model = DncsModel(n_agents=3, n=1, tau_d=1, blocks=blocks, chain=chain)
    assert dedup_agents(model) == [[1, 3], [2]]


# ---------------------------------------------------------------------------
# Norm-based sufficient test
# ---------------------------------------------------------------------------


def test_block_norm_sufficient_scalar_pair():
    fam = scalar_family()
    # column sums of p[r, s] * |a_r|^2 are 0.88125 and 0.93125
    assert block_norm_sufficient(fam) is True
    assert spectral_radius(mss_matrix(fam).matrix) < 1.0


def test_block_norm_sufficient_false_says_nothing():
    fam = scalar_family(a1=1.5, a2=0.1, p=[[0.5, 0.5], [0.5, 0.5]])
    assert block_norm_sufficient(fam) is False
    # the spectral test still settles it
    assert spectral_radius(mss_matrix(fam).matrix) > 1.0


def test_block_norm_sufficient_transition_override():
    fam = scalar_family(a1=0.9, a2=0.9, p=[[0.5, 0.5], [0.5, 0.5]])
    assert block_norm_sufficient(fam) is True
    assert block_norm_sufficient(fam, transition=np.eye(2)) is True


def test_block_norm_implies_spectral_pass():
    rng = np.random.default_rng(12)
    for _ in range(20):
        mats = rng.normal(size=(2, 2, 2))
        scale = rng.uniform(0.1, 1.2)
        mats *= scale / max(abs(mats).sum(axis=2).max(), 1e-9)
        p = rng.uniform(0.05, 1.0, size=(2, 2))
        p /= p.sum(axis=1, keepdims=True)
        fam = ModeFamily.from_matrices(mats, p)
        if block_norm_sufficient(fam):
            assert spectral_radius(mss_matrix(fam).matrix) < 1.0
