import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from ivelvp.ekeland import (Bifunction, caristi_fixed_point, check_ekeland_point, check_triangle,
                            ekeland_bifunction, ekeland_descent, ekeland_minimize,
                            takahashi_minimize)
from ivelvp.errors import HypothesisViolation, ProblemError
from ivelvp.interval import Interval
from ivelvp.ivfunc import Box, FinitePoints, IntervalFn, minimal_solutions
from ivelvp.problems import bifunction_from_json, function_from_json, load


def random_instance(rng, n=None):
    n = n or int(rng.integers(2, 31))
    dist = oracles.random_metric(rng, n)
    lo = rng.uniform(-2, 2, n)
    hi = lo + rng.uniform(0, 1.5, n)
    f = IntervalFn(lo, hi, FinitePoints(dist))
    return f, lo.tolist(), hi.tolist(), dist


def check_against_oracle(rng):
    f, lo, hi, dist = random_instance(rng)
    eps = float(rng.choice([0.05, 0.3, 1.0, 3.0]))
    i0 = int(rng.integers(len(lo)))
    cert = ekeland_minimize(f, eps, index=i0)
    want = oracles.ekeland_conditions(lo, hi, dist, eps, i0, cert.index)
    assert cert.cond_a == want["a"]
    assert cert.premise == want["premise"]
    assert cert.cond_b == want["b"]
    assert (cert.cond_c_witness is None) == want["c"]
    assert (cert.strict_c_witness is None) == want["strict"]
    assert cert.index in oracles.ekeland_set(lo, hi, dist, eps, i0)
    assert cert.verified
    s = f.sample()
    for j in range(len(lo)):
        got = check_ekeland_point(s, eps, i0, j)
        ref = oracles.ekeland_conditions(lo, hi, dist, eps, i0, j)
        assert (got["cond_a"], got["cond_b"], got["cond_c_witness"] is None,
                got["strict_c_witness"] is None) == (ref["a"], ref["b"], ref["c"], ref["strict"])
    return cert, lo, hi, dist, eps


def test_random_instances_match_exhaustive_checker():
    rng = np.random.default_rng(12345)
    for _ in range(100):
        check_against_oracle(rng)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_oracle_equivalence_property(seed):
    check_against_oracle(np.random.default_rng(seed))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_descent_monotonicity(seed):
    rng = np.random.default_rng(seed)
    f, lo, hi, dist = random_instance(rng)
    eps = 0.2
    s = f.sample()
    cert = ekeland_descent(s, eps, 0)
    path = [int(label) for label in cert.trace]
    tol = 1e-12 * max(1.0, max(map(abs, lo + hi)))
    for a, b in zip(path, path[1:]):
        d = dist[a][b]
        assert lo[b] + eps * d <= lo[a] + tol
        assert hi[b] + eps * d <= hi[a] + tol
        assert lo[b] + hi[b] < lo[a] + hi[a]


def test_fixed_start_is_returned():
    # x0 is the unique minimizer and everything else is far away
    dom = FinitePoints(coords=[0.0, 10.0, 20.0])
    f = IntervalFn([0, 1, 2], [1, 2, 3], dom)
    cert = ekeland_minimize(f, 0.5, index=0)
    assert cert.index == 0 and cert.verified and cert.trace == ["0"]


def test_exp_example_certificate():
    data = load("bundled:ekeland_exp")
    f = function_from_json(data)
    x0 = math.log(0.2)
    cert = ekeland_minimize(f, 0.25, [x0])
    assert cert.verified and cert.premise
    s = f.sample(extra=[np.array([x0]), np.array([x0 - 1.0])])
    v = check_ekeland_point(s, 0.25, s.index_of([x0]), s.index_of([x0 - 1.0]))
    assert v["cond_a"] and v["cond_b"] and v["cond_c_witness"] is None


def test_epsilon_must_be_positive():
    f = IntervalFn([0, 1], [1, 2], FinitePoints(coords=[0.0, 1.0]))
    with pytest.raises(ProblemError):
        ekeland_minimize(f, 0.0, index=0)


def test_box_start_outside_domain():
    f = IntervalFn("x", "x + 1", Box([0], [1]))
    with pytest.raises(ProblemError):
        ekeland_minimize(f, 0.1, [2.0])


def test_abs_bifunction_example():
    data = load("bundled:abs_bifunction")
    F = bifunction_from_json(data)
    for i0 in (0, 10, 20, 40):
        res = ekeland_bifunction(F, 0.5, i0)
        assert res.verified and res.triangle.holds and not res.heuristic
        assert res.cond_a


def test_zero_bifunction_certifies_start():
    F = Bifunction.from_tables(np.zeros((5, 5)), np.zeros((5, 5)), 1 - np.eye(5))
    res = ekeland_bifunction(F, 0.1, 3)
    assert res.verified and res.index == 3


def test_bifunction_reduces_to_scalar_ekeland():
    rng = np.random.default_rng(7)
    for _ in range(20):
        n = int(rng.integers(3, 15))
        dist = oracles.random_metric(rng, n)
        g = rng.uniform(-1, 1, n)
        # F(x, y) = g(y) - g(x) for degenerate g
        table = g[None, :] - g[:, None]
        F = Bifunction.from_tables(table, table, dist)
        eps, i0 = 0.3, int(rng.integers(n))
        res = ekeland_bifunction(F, eps, i0)
        scalar = oracles.ekeland_set(g.tolist(), g.tolist(), dist, eps, i0)
        assert res.verified
        # (c) of the scalar principle is conclusion (b) of the bifunction form here
        j = res.index
        assert all(g[x] + eps * dist[j][x] > g[j] - 1e-12 for x in range(n) if x != j)
        assert j in scalar


def test_triangle_violation_rejected_with_witness():
    lo = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], dtype=float)
    F = Bifunction.from_tables(lo, lo, [[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    with pytest.raises(HypothesisViolation) as info:
        ekeland_bifunction(F, 0.1, 0)
    x, y, z = info.value.witness
    assert lo[x, z] > lo[x, y] + lo[y, z]
    res = ekeland_bifunction(F, 0.1, 0, require_triangle=False)
    assert res.heuristic


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_accepted_bifunctions_are_nonnegative_on_diagonal(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 8))
    lo = rng.uniform(-0.2, 1, (n, n))
    hi = lo + rng.uniform(0, 0.5, (n, n))
    F = Bifunction.from_tables(lo, hi, 1 - np.eye(n))
    if check_triangle(F).holds:
        assert np.all(np.diag(lo) >= -1e-12) and np.all(np.diag(hi) >= -1e-12)


def test_sampled_triangle_check_for_large_sets():
    n = 1100
    pts = np.linspace(0, 1, n)
    d = np.abs(pts[:, None] - pts[None, :])
    rep = check_triangle(Bifunction.from_tables(d, d + 1, d))
    assert rep.holds and not rep.exhaustive and rep.checked == n + 10_000


def caristi_instance(seed=3, n=10):
    rng = np.random.default_rng(seed)
    coords = rng.uniform(-1, 1, (n, 2))
    dom = FinitePoints(coords=coords)
    target = int(rng.integers(n))
    phi = dom.dist[:, target]
    f = IntervalFn(phi, phi + 1, dom)
    # every point may move straight to the target
    T = [[target] for _ in range(n)]
    return dom, f, T, target


def test_caristi_returns_the_target():
    dom, f, T, target = caristi_instance()
    fixed = [k for k in range(dom.n) if k in T[k]]
    assert fixed == [target]
    for x0 in range(dom.n):
        res = caristi_fixed_point(T, f, x0)
        assert res.index == target and res.certificate.verified


def test_caristi_identity_map():
    dom, f, _, _ = caristi_instance()
    res = caristi_fixed_point([[k] for k in range(dom.n)], f, 4)
    assert res.index in range(dom.n)


def test_caristi_violation_rejected_with_pair():
    dom, f, T, target = caristi_instance()
    x = (target + 1) % dom.n
    y = int(np.argmax(dom.dist[x]))
    T[x] = [target, y]
    with pytest.raises(HypothesisViolation) as info:
        caristi_fixed_point(T, f, 0)
    assert info.value.witness == [str(x), str(y)]


def test_caristi_rejects_empty_image():
    dom, f, T, _ = caristi_instance()
    T[2] = []
    with pytest.raises(HypothesisViolation):
        caristi_fixed_point(T, f, 0)


def test_takahashi_matches_minimal_solutions():
    rng = np.random.default_rng(11)
    hits = 0
    for _ in range(200):
        n = int(rng.integers(2, 12))
        dom = FinitePoints(coords=rng.uniform(0, 0.2, n))
        lo = rng.integers(0, 6, n).astype(float)
        hi = lo + rng.integers(0, 3, n)
        f = IntervalFn(lo, hi, dom)
        try:
            res = takahashi_minimize(f, int(rng.integers(n)))
        except HypothesisViolation as exc:
            k = dom.labels.index(exc.witness)
            d = dom.dist[k]
            assert not any(lo[y] + d[y] <= lo[k] and hi[y] + d[y] <= hi[k]
                           for y in range(n) if y != k)
            continue
        hits += 1
        assert res.index in oracles.minimal_set(lo.tolist(), hi.tolist())
        assert res.minimal == [dom.labels[i] for i in minimal_solutions(f)]
    assert hits > 100


def test_takahashi_trivial_cases():
    dom = FinitePoints(coords=[0.0, 1.0, 2.0])
    res = takahashi_minimize(IntervalFn([1, 1, 1], [2, 2, 2], dom), 2)
    assert res.index == 2
    single = FinitePoints(coords=[5.0])
    assert takahashi_minimize(IntervalFn([0], [1], single)).index == 0


def test_finite_only_checkers():
    f = IntervalFn("x", "x + 1", Box([0], [1]))
    with pytest.raises(ProblemError):
        takahashi_minimize(f)
    with pytest.raises(ProblemError):
        caristi_fixed_point([], f)


def test_certificate_json_shape():
    f, *_ = random_instance(np.random.default_rng(0), 6)
    out = ekeland_minimize(f, 0.5, index=0).to_json()
    assert {"x_bar", "cond_a", "cond_b", "cond_c_witness", "verified", "verified_over"} <= set(out)
    assert Interval.from_json(out["value"])
