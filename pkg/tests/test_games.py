import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from ivelvp.errors import ProblemError
from ivelvp.games import (IntervalGame, aggregate_bifunction, aggregate_tables, bifunction_premise,
                          epsilon_nash_mask, find_epsilon_nash, random_game, verify_epsilon_nash)
from ivelvp.interval import Interval, gh_diff
from ivelvp.ivfunc import FinitePoints
from ivelvp.problems import game_from_json, load


def dists(G):
    return [s.dist.tolist() for s in G.strategy_sets]


def one_player(values, coords):
    v = np.asarray(values, dtype=float)
    return IntervalGame([FinitePoints(coords=coords)], v[None])


def test_dominated_example():
    G = game_from_json(load("bundled:dominated"))
    ok, witness = verify_epsilon_nash(G, ["A", "A"], 0.0)
    assert not ok
    assert witness["player"] == 0 and witness["deviation"] == "B"


def test_huge_epsilon_makes_every_profile_nash():
    G = random_game(np.random.default_rng(1))
    spread = G.losses.max() - G.losses.min()
    dmin = min(s.dist[s.dist > 0].min() for s in G.strategy_sets)
    eps = spread / dmin
    assert all(verify_epsilon_nash(G, G.profile(k), eps)[0] for k in range(G.n_profiles))


def test_aggregate_examples():
    G = game_from_json(load("bundled:coordination"))
    for k in range(G.n_profiles):
        x = G.profile(k)
        assert aggregate_bifunction(G, x, x) == Interval(0, 0)
    x, y = (0, 1), (1, 1)
    assert aggregate_bifunction(G, x, y) == gh_diff(G.loss(0, (1, 1)), G.loss(0, x))
    H = one_player([[0, 1], [2, 2.5], [-1, 3]], [0.0, 1.0, 2.0])
    assert aggregate_bifunction(H, (0,), (2,)) == gh_diff(H.loss(0, (2,)), H.loss(0, (0,)))


def test_aggregate_tables_match_pointwise():
    G = random_game(np.random.default_rng(2), sizes=(3, 4))
    lo, hi = aggregate_tables(G)
    for a in range(G.n_profiles):
        for b in range(G.n_profiles):
            v = aggregate_bifunction(G, G.profile(a), G.profile(b))
            assert abs(v.lo - lo[a, b]) <= 1e-12 and abs(v.hi - hi[a, b]) <= 1e-12


def test_one_player_game_matches_enumeration_and_ekeland_condition():
    rng = np.random.default_rng(4)
    for _ in range(20):
        lo = rng.uniform(0, 1, 10)
        H = one_player(np.stack([lo, lo + rng.uniform(0, 0.5, 10)], axis=1), rng.uniform(0, 1, 10))
        eps = 0.1
        res = find_epsilon_nash(H, eps)
        want = oracles.nash_set(H.losses, dists(H), eps)
        assert res.verified and tuple(res.profile) in want
        s_lo, s_hi = H.losses[0, :, 0], H.losses[0, :, 1]
        for k in range(10):
            c = oracles.ekeland_conditions(s_lo.tolist(), s_hi.tolist(), dists(H)[0], eps, k, k)
            assert verify_epsilon_nash(H, (k,), eps)[0] == c["strict"]


def test_constant_game_returns_start():
    sets = [FinitePoints(coords=np.arange(3.0)) for _ in range(2)]
    losses = np.zeros((2, 3, 3, 2))
    losses[..., 1] = 1.0
    G = IntervalGame(sets, losses)
    res = find_epsilon_nash(G, 0.1, x0=(2, 1))
    assert res.profile == (2, 1) and res.verified


def test_random_games_against_enumeration():
    rng = np.random.default_rng(99)
    for _ in range(30):
        G = random_game(rng, sizes=(3, 4))
        want = oracles.nash_set(G.losses, dists(G), 0.2)
        mask = epsilon_nash_mask(G, 0.2)
        assert [G.profile(k) for k in np.flatnonzero(mask)] == want
        if want:
            res = find_epsilon_nash(G, 0.2)
            assert tuple(res.profile) in want


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0, 2))
def test_monotone_in_epsilon(seed, eps):
    G = random_game(np.random.default_rng(seed), sizes=(3, 3))
    small = epsilon_nash_mask(G, eps)
    for bigger in (eps + 0.01, eps * 2 + 0.1, eps + 10):
        assert np.all(epsilon_nash_mask(G, bigger)[small])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 1))
def test_premise_implies_nash(seed, eps):
    rng = np.random.default_rng(seed)
    G = random_game(rng, sizes=(3, 3))
    tables, metric = aggregate_tables(G), G.product_metric()
    for k in range(G.n_profiles):
        if bifunction_premise(G, G.profile(k), eps, tables, metric):
            assert verify_epsilon_nash(G, G.profile(k), eps)[0]


def test_solver_output_always_verifies():
    rng = np.random.default_rng(0)
    for _ in range(10):
        G = random_game(rng)
        res = find_epsilon_nash(G, 0.1)
        assert verify_epsilon_nash(G, res.profile, 0.1)[0]
        assert res.verified
        assert res.heuristic == (not res.triangle.holds) or res.route == "enumeration"
        if res.route == "enumeration":
            assert res.heuristic


def test_validation():
    G = game_from_json(load("bundled:dominated"))
    with pytest.raises(ProblemError):
        verify_epsilon_nash(G, ["A", "A"], -1)
    with pytest.raises(ProblemError):
        find_epsilon_nash(G, 0.0)
    with pytest.raises(ProblemError):
        G.parse_profile(["A"])
    with pytest.raises(ProblemError):
        G.parse_profile([0, 7])
    bad = np.zeros((1, 2, 2))
    bad[0, 0] = [1, 0]
    with pytest.raises(ProblemError):
        IntervalGame([FinitePoints(coords=[0.0, 1.0])], bad)


def test_json_round_trip():
    G = random_game(np.random.default_rng(8), sizes=(2, 3))
    H = IntervalGame.from_json(G.to_json())
    assert np.array_equal(G.losses, H.losses)
    assert all(np.array_equal(a.dist, b.dist) for a, b in zip(G.strategy_sets, H.strategy_sets))
