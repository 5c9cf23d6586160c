import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from metaregret import cfr
from metaregret import games as G
from metaregret.analysis import lp as LP
from metaregret.analysis import theory as TH
from metaregret.analysis.replay import external_regret_replay


def matrix_expl(M, s1, s2):
    return 0.5 * (float((M @ s2).max()) + float((-M.T @ s1).max()))


def test_lp_matching_pennies():
    (s1, s2), v = LP.lp_nash([[1, -1], [-1, 1]])
    np.testing.assert_allclose(s1, [0.5, 0.5], atol=1e-12)
    np.testing.assert_allclose(s2, [0.5, 0.5], atol=1e-12)
    assert v == pytest.approx(0.0, abs=1e-12)


def test_lp_rps(rps):
    (s1, s2), _ = LP.lp_nash(rps.matrix)
    assert cfr.exploitability(rps, {0: s1, 1: s2}) <= 1e-8


def test_lp_random_3x3():
    rng = np.random.default_rng(0)
    for _ in range(100):
        M = rng.uniform(-1, 1, (3, 3))
        (s1, s2), v = LP.lp_nash(M)
        assert matrix_expl(M, s1, s2) <= 1e-8
        assert s1 @ M @ s2 == pytest.approx(v, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.integers(0, 2**31))
def test_lp_value_matches_scipy(m, n, seed):
    M = np.random.default_rng(seed).uniform(-1, 1, (m, n))
    _, v = LP.lp_nash(M)
    # oracle: scipy's HiGHS on the same max-min program
    res = linprog(np.r_[np.zeros(m), -1.0], A_ub=np.hstack([-M.T, np.ones((n, 1))]), b_ub=np.zeros(n),
                  A_eq=np.r_[np.ones(m), 0.0][None], b_eq=[1.0], bounds=[(0, None)] * m + [(None, None)])
    assert v == pytest.approx(-res.fun, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31))
def test_simplex_matches_scipy(seed):
    rng = np.random.default_rng(seed)
    n, k = 4, 3
    A = rng.uniform(0.1, 1, (k, n))
    b = rng.uniform(1, 2, k)
    c = -rng.uniform(0, 1, n)
    ours = LP.simplex(c, A, b)
    ref = linprog(c, A_ub=A, b_ub=b, bounds=[(0, None)] * n)
    assert ours.objective == pytest.approx(ref.fun, abs=1e-9)


def test_simplex_infeasible():
    with pytest.raises(LP.LPError):
        LP.simplex(np.ones(2), A_eq=np.ones((1, 2)), b_eq=[-1.0])


def test_sequence_form_kuhn(kuhn):
    sigma, v = LP.sequence_form_nash(kuhn)
    assert v == pytest.approx(-1 / 18, abs=1e-10)
    assert G.expected_utility(kuhn, sigma) == pytest.approx(v, abs=1e-10)
    assert cfr.exploitability(kuhn, sigma) <= 1e-8


def test_sequence_form_matches_lp_on_matrix():
    rng = np.random.default_rng(5)
    for _ in range(10):
        M = rng.uniform(-1, 1, (3, 4))
        _, v_lp = LP.lp_nash(M)
        sigma, v_sf = LP.sequence_form_nash(G.matrix_game(M))
        assert v_sf == pytest.approx(v_lp, abs=1e-10)
        assert cfr.exploitability(G.matrix_game(M), sigma) <= 1e-8


def test_sequence_form_perturbed_kuhn():
    dist = G.GameDistribution("kuhn_poker", seed=8)
    for k in range(10):
        g = G.sample_game(dist, k)
        sigma, v = LP.sequence_form_nash(g)
        assert cfr.exploitability(g, sigma) <= 1e-8
        assert G.expected_utility(g, sigma) == pytest.approx(v, abs=1e-9)


def test_replay_constant_equilibrium(kuhn):
    sigma, _ = LP.sequence_form_nash(kuhn)
    traj = [sigma] * 20
    for i in (1, 2):
        assert external_regret_replay(traj, kuhn, i) <= 1e-9


def test_replay_normal_form_closed_form():
    rng = np.random.default_rng(2)
    M = rng.uniform(-1, 1, (3, 3))
    g = G.matrix_game(M)
    prof = [np.stack([rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))]) for _ in range(15)]
    x1 = sum(M @ p[1] for p in prof)
    got = sum(p[0] @ M @ p[1] for p in prof)
    assert external_regret_replay(prof, g, 1) == pytest.approx(x1.max() - got, abs=1e-12)
    x2 = sum(-M.T @ p[0] for p in prof)
    assert external_regret_replay(prof, g, 2) == pytest.approx(x2.max() + got, abs=1e-12)


def test_replay_below_bound_on_kuhn(kuhn):
    run = cfr.solve(kuhn, "RM", 100, keep_trajectory=True)
    total = sum(external_regret_replay(run.trajectory, kuhn, i) for i in (1, 2))
    assert total <= cfr.regret_bound_eq1(run) + 1e-7


def test_locally_optimal_ensemble_example():
    s1, s2 = TH.locally_optimal(TH.FiniteDistribution.uniform(TH.MATRIX_ENSEMBLE_EXAMPLE))
    np.testing.assert_allclose(s1, [0.5, 0.5], atol=1e-6)
    np.testing.assert_allclose(s2, [0.5, 0.5], atol=1e-6)


def test_locally_optimal_singleton_is_equilibrium():
    rng = np.random.default_rng(1)
    for _ in range(20):
        M = rng.uniform(-1, 1, (3, 3))
        _, v = LP.lp_nash(M)
        s1, s2 = TH.locally_optimal(TH.FiniteDistribution.uniform([M]))
        assert (M.T @ s1).min() >= v - 1e-9
        assert (M @ s2).max() <= v + 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_locally_optimal_beats_random(seed):
    dist = TH.random_ensemble(seed, 0, max_games=4)
    s1, s2 = TH.locally_optimal(dist)
    rng = np.random.default_rng(seed)
    n, m = dist.matrices[0].shape
    f1, f2 = TH.expected_max_reward(dist, 1, s1), TH.expected_max_reward(dist, 2, s2)
    for _ in range(1000):
        assert f1 <= TH.expected_max_reward(dist, 1, rng.dirichlet(np.ones(n))) + 1e-12
        assert f2 <= TH.expected_max_reward(dist, 2, rng.dirichlet(np.ones(m))) + 1e-12


def test_restrict_indistinguishable_pair():
    rd = TH.RestrictedDistribution.of(TH.FiniteDistribution.uniform(TH.INDISTINGUISHABLE_PAIR))
    u = np.array([0.5, 0.5])
    M = rd.dist.matrices[0]
    out = TH.restrict(rd, (u, u), TH.rewards(M, u, u))
    assert out.support == [0, 1]


def test_restrict_pure_opponent_separates():
    rd = TH.RestrictedDistribution.of(TH.FiniteDistribution.uniform(TH.INDISTINGUISHABLE_PAIR))
    s = (np.array([0.5, 0.5]), np.array([1.0, 0.0]))
    out = TH.restrict(rd, s, TH.rewards(rd.dist.matrices[1], *s))
    assert out.support == [1]


def test_restrict_singleton_unchanged():
    rd = TH.RestrictedDistribution.of(TH.FiniteDistribution.uniform([np.eye(2)]))
    s = (np.array([0.3, 0.7]), np.array([0.6, 0.4]))
    assert TH.restrict(rd, s, TH.rewards(np.eye(2), *s)).support == [0]


def test_restrict_inconsistent_raises():
    rd = TH.RestrictedDistribution.of(TH.FiniteDistribution.uniform([np.eye(2)]))
    with pytest.raises(ValueError):
        TH.restrict(rd, (np.array([1.0, 0]), np.array([1.0, 0])), (np.array([9.0, 9]), np.array([9.0, 9])))


def test_driver_singleton():
    M = np.random.default_rng(3).uniform(-1, 1, (3, 3))
    steps = TH.last_iterate_driver(TH.FiniteDistribution.uniform([M]), 1)
    assert steps[0].expl <= 1e-8


@pytest.mark.parametrize("index", range(20))
def test_driver_support_shrinks_or_solves(index):
    dist = TH.random_ensemble(17, index)
    k = len(dist)
    for j in range(k):
        steps = TH.last_iterate_driver(dist, k, j)
        sizes = [s.support_size for s in steps]
        assert all(a >= b for a, b in zip(sizes, sizes[1:]))
        for a, b, s in zip(sizes, sizes[1:] + [0], steps):
            # each step either solves the hidden game or removes a game
            assert s.expl <= 1e-8 or b < a
        assert steps[-1].expl <= 1e-6


def test_indistinguishable_pair_shared_equilibrium():
    pair = TH.FiniteDistribution.uniform(TH.INDISTINGUISHABLE_PAIR)
    for j in range(2):
        steps = TH.last_iterate_driver(pair, 4, j)
        assert steps[-1].support_size == 2
        for M in pair.matrices:
            assert TH.matrix_exploitability(M, steps[-1].sigma1, steps[-1].sigma2) <= 1e-8


def test_expected_curve_monotone():
    curve = TH.expected_exploitability_curve(TH.random_ensemble(2, 3, max_games=5), 5)
    assert np.all(np.diff(curve) <= 1e-9)


def test_distribution_validation():
    with pytest.raises(ValueError):
        TH.FiniteDistribution([np.eye(2)], [0.5])
    with pytest.raises(ValueError):
        TH.FiniteDistribution([np.eye(2), np.eye(3)], [0.5, 0.5])


def test_convex_hull_membership():
    V = np.eye(3)
    assert TH.in_convex_hull([0.2, 0.3, 0.5], V)
    assert not TH.in_convex_hull([0.6, 0.6, 0.0], V)
