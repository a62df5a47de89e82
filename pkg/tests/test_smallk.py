import numpy as np
import pytest

from mclt import smallk
from mclt.smallk import (
    build_graph,
    default_switch,
    monte_carlo_success,
    optimize,
    success_probability,
)


def eq5_k3(P, Q):
    """Closed-form k=3 success probability for the two-configuration scheme."""
    p1, p2, p3 = P
    q1, q2, q3 = Q
    return (2 / 9) * p1 * p2 * (5 * p2 + 12 * p3 + 2 * q1 + 4 * q2 + 6 * q3) + (
        2 / 9
    ) * p1**2 * (2 * p2 + 6 * p3 + q1 + 2 * q2 + 3 * q3)


TABLE_K3_PURE = ([0.517, 0.397, 0.086], 0.452)
TABLE_K3_MC = ([0.701, 0.299, 0.0], [0.0, 0.0, 1.0], 0.742)
TABLE_K4_PURE = ([0.429, 0.430, 0.100, 0.041], 0.315)
TABLE_K4_MC = ([0.527, 0.473, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0], 0.554)


# ---------------- graph structure ----------------

def test_default_switch_points():
    assert default_switch(2) == 1
    assert default_switch(3) == 2
    assert default_switch(4) == 3


def test_k1_graph_trivial():
    g = build_graph(1)
    assert len(g) == 2
    assert success_probability(g, [1.0], n=1) == pytest.approx(1.0)


def test_k2_pure_graph_matches_hand_derivation():
    g = build_graph(2)
    # empty, one-solved, buffered-pair, recovered
    assert len(g) == 4
    states = {(s.u, tuple(sorted(map(tuple, map(sorted, s.buffered))))) for s in g.states}
    assert states == {(2, ()), (1, ()), (2, ((0, 1),)), (0, ())}
    # P2 = p1^2/2 + 2 p1 p2 at several points
    for p1 in (0.0, 0.25, 2 / 3, 1.0):
        P = [p1, 1 - p1]
        assert success_probability(g, P, n=2) == pytest.approx(
            p1**2 / 2 + 2 * p1 * (1 - p1), abs=1e-12
        )


def test_k2_mc_graph_matches_hand_derivation():
    g = build_graph(2, switch_after_solved=1)
    # P2 = p1 (q1/2 + q2) + p1 p2
    for p1, q1 in ((1.0, 0.0), (0.6, 0.3), (0.5, 1.0)):
        P, Q = [p1, 1 - p1], [q1, 1 - q1]
        expect = p1 * (q1 / 2 + (1 - q1)) + p1 * (1 - p1)
        assert success_probability(g, P, Q, n=2) == pytest.approx(expect, abs=1e-12)
    assert success_probability(g, [1, 0], [0, 1], n=2) == pytest.approx(1.0)


def test_k3_mc_graph_equals_closed_form(np_rng):
    g = build_graph(3, switch_after_solved=default_switch(3))
    for _ in range(40):
        P = np_rng.dirichlet(np.ones(3))
        Q = np_rng.dirichlet(np.ones(3))
        assert success_probability(g, P, Q, n=3) == pytest.approx(eq5_k3(P, Q), abs=1e-12)


def test_k3_table_point():
    g = build_graph(3, switch_after_solved=default_switch(3))
    P, Q, val = TABLE_K3_MC
    assert success_probability(g, P, Q) == pytest.approx(val, abs=1e-3)


def test_transition_rows_sum_to_one(np_rng):
    for k, switch in ((2, None), (3, None), (3, 2), (4, 3), (4, 2)):
        g = build_graph(k, switch)
        for _ in range(25):
            P = np_rng.dirichlet(np.ones(k))
            Q = np_rng.dirichlet(np.ones(k))
            pmfs = (P, Q)
            for sid, (targets, mat) in enumerate(g.edges):
                out = mat @ pmfs[g.pmf_index[sid]]
                assert np.all(out >= -1e-12)
                assert out.sum() == pytest.approx(1.0, abs=1e-9)


def test_per_reception_homogeneity(np_rng):
    # one pmf factor per reception: scaling the pmf by t scales the n-step
    # reach probability by t^n
    g = build_graph(3)
    P = np_rng.dirichlet(np.ones(3))
    for n in (1, 2, 3):
        base = smallk._propagate(g, P, None, n)
        scaled = smallk._propagate(g, 2.0 * P, None, n)
        assert scaled == pytest.approx(2.0**n * base, rel=1e-9)


def test_graph_rejects_bad_inputs():
    with pytest.raises(ValueError):
        build_graph(6)
    with pytest.raises(ValueError):
        build_graph(3, switch_after_solved=4)
    g = build_graph(2, switch_after_solved=1)
    with pytest.raises(ValueError):
        success_probability(g, [1.0, 0.0])  # Q required
    with pytest.raises(ValueError):
        success_probability(g, [0.9, 0.2], [1.0, 0.0])  # not a pmf


def test_decode_state_canonicalization_is_stable():
    g = build_graph(4, switch_after_solved=3)
    # states must be unique under relabeling: re-canonicalizing every stored
    # family is the identity
    from mclt.smallk import _canonical_family

    for s in g.states:
        assert _canonical_family(s.u, s.buffered) == s.buffered
    assert len({(s.u, s.buffered) for s in g.states}) == len(g.states)


# ---------------- optimizer ----------------

def test_optimize_k2_pure_closed_form():
    res = optimize(2, restarts=12, seed=1)
    assert res.value == pytest.approx(2 / 3, abs=1e-6)
    assert res.P[0] == pytest.approx(2 / 3, abs=1e-6)


def test_optimize_k2_mc_perfect():
    res = optimize(2, switch_after_solved=1, restarts=12, seed=1)
    assert res.value == pytest.approx(1.0, abs=1e-9)
    assert res.P[0] == pytest.approx(1.0, abs=1e-6)
    assert res.Q[1] == pytest.approx(1.0, abs=1e-6)


def test_optimize_k3_reproduces_table():
    pure = optimize(3, restarts=25, seed=2)
    assert pure.value == pytest.approx(TABLE_K3_PURE[1], abs=0.005)
    assert np.max(np.abs(pure.P - TABLE_K3_PURE[0])) < 0.02
    mc = optimize(3, switch_after_solved=default_switch(3), restarts=25, seed=2)
    assert mc.value == pytest.approx(TABLE_K3_MC[2], abs=0.005)
    assert np.max(np.abs(mc.P - TABLE_K3_MC[0])) < 0.02
    assert np.max(np.abs(mc.Q - TABLE_K3_MC[1])) < 0.02


# ---------------- Monte-Carlo oracle ----------------

def test_mc_k1_trivial():
    est, _ = monte_carlo_success(1, [1.0], trials=1000, seed=0)
    assert est == 1.0


def test_mc_k2_pure_optimum():
    est, se = monte_carlo_success(2, [2 / 3, 1 / 3], trials=200_000, seed=5)
    assert est == pytest.approx(2 / 3, abs=0.004)
    assert se < 0.002


@pytest.mark.parametrize(
    "k,P,Q,switch,expect",
    [
        (3, TABLE_K3_PURE[0], None, None, None),
        (3, TABLE_K3_MC[0], TABLE_K3_MC[1], 2, None),
        (4, TABLE_K4_PURE[0], None, None, None),
        (4, TABLE_K4_MC[0], TABLE_K4_MC[1], 3, None),
    ],
)
def test_exact_matches_mc_oracle_at_table_points(k, P, Q, switch, expect):
    # the oracle run: 1e6 simulated sessions against the exact graph value
    g = build_graph(k, switch)
    exact = success_probability(g, P, Q)
    est, se = monte_carlo_success(k, P, Q, switch, trials=1_000_000, seed=17)
    assert abs(est - exact) <= 3 * se


def test_exact_matches_mc_on_random_grid(np_rng):
    for k, switch in ((2, 1), (3, 2), (4, 3)):
        g = build_graph(k, switch)
        for _ in range(2):
            P = np_rng.dirichlet(np.ones(k))
            Q = np_rng.dirichlet(np.ones(k))
            exact = success_probability(g, P, Q)
            est, se = monte_carlo_success(k, P, Q, switch, trials=150_000,
                                          seed=int(np_rng.integers(2**31)))
            assert abs(est - exact) <= 3 * max(se, 1e-4)
