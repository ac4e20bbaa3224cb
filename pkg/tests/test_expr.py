import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ivelvp.expr import EvalError, ParseError, parse, to_source


@pytest.mark.parametrize("src, env, want", [
    ("1/(x^2+1)", {"x": 1}, 0.5),
    ("exp(x)", {"x": 0}, 1.0),
    ("ite(x<0, exp(x), exp(-x))", {"x": -1}, math.exp(-1)),
    ("x*y", {"x": 2, "y": 3}, 6.0),
    ("abs(-2)^3", {}, 8.0),
    ("-2^2", {}, -4.0),
    ("2^3^2", {}, 512.0),
    ("8-3-2", {}, 3.0),
    ("8/4/2", {}, 1.0),
    ("1+2*3", {}, 7.0),
    ("-x*2", {"x": 3}, -6.0),
    ("min(1, 2) + max(1, 2)", {}, 3.0),
    ("sqrt(4) + ln(1) + sin(0) + cos(0)", {}, 3.0),
    ("1.5e2 + .5", {}, 150.5),
    ("ite(x <= 0, 1, 2) + ite(x >= 0, 10, 20) + ite(x == 0, 100, 200)", {"x": 0}, 111.0),
])
def test_evaluation(src, env, want):
    assert parse(src).eval(env) == pytest.approx(want, rel=1e-15, abs=0)


@pytest.mark.parametrize("src, env", [
    ("1/x", {"x": 0}),
    ("ln(x)", {"x": 0}),
    ("ln(x)", {"x": -1}),
    ("sqrt(x)", {"x": -1}),
    ("exp(x)", {"x": 1e6}),
])
def test_evaluation_errors(src, env):
    with pytest.raises(EvalError):
        parse(src).eval(env)


@pytest.mark.parametrize("src, offset", [
    ("1 +", 3),
    ("(1 + 2", 6),
    ("2 x", 2),
    ("1 $ 2", 2),
])
def test_syntax_errors_carry_offset(src, offset):
    with pytest.raises(ParseError) as info:
        parse(src)
    assert info.value.offset == offset
    assert info.value.kind == "expr"


def test_offset_is_in_bytes():
    # "ε" is two bytes in UTF-8
    with pytest.raises(ParseError) as info:
        parse("1 + ε")
    assert info.value.offset == 4


@pytest.mark.parametrize("src", ["foo(1)", "exp(1, 2)", "min(1)", "ite(1, 2, 3)", "x < 1"])
def test_rejected_calls_and_comparisons(src):
    with pytest.raises(ParseError):
        parse(src)


def test_unknown_identifier_against_declared_variables():
    parse("x1 + x2", ["x1", "x2"])
    with pytest.raises(ParseError):
        parse("x1 + y", ["x1", "x2"])


def test_unbound_variable_at_evaluation():
    with pytest.raises(EvalError):
        parse("x + 1").eval({})


def test_variables():
    assert parse("ite(t < 1, xl * u1, xu)").variables() == {"t", "xl", "u1", "xu"}


def test_ite_branches_only_evaluated_where_selected():
    e = parse("ite(x > 0, ln(x), 0)")
    got = e.eval_array({"x": np.array([-1.0, 0.0, np.e])})
    assert got.tolist() == [0.0, 0.0, 1.0]


def test_ite_boundary_is_strict():
    e = parse("ite(x < 0, 1, 2)")
    assert e.eval({"x": 0.0}) == 2.0


def test_array_matches_scalar():
    e = parse("sin(x) * exp(-y) + abs(x - y)^1.5")
    xs = np.linspace(-2, 2, 17)
    ys = np.linspace(3, -1, 17)
    arr = e.eval_array({"x": xs, "y": ys})
    assert arr.tolist() == [e.eval({"x": a, "y": b}) for a, b in zip(xs, ys)]


def test_constant_broadcasts():
    assert parse("2").eval_array({"x": np.zeros(4)}, size=4).tolist() == [2.0] * 4


# random expression trees as source text
_leaf = st.one_of(
    st.sampled_from(["x", "y", "t"]),
    st.floats(0, 1e6, allow_nan=False, allow_infinity=False).map(repr),
    st.integers(0, 1000).map(str),
)


def _extend(sub):
    binop = st.tuples(sub, st.sampled_from(["+", "-", "*", "/", "^"]), sub).map(
        lambda p: f"{p[0]} {p[1]} {p[2]}")
    neg = sub.map(lambda s: f"-{s}")
    paren = sub.map(lambda s: f"({s})")
    call1 = st.tuples(st.sampled_from(["exp", "ln", "sin", "cos", "abs", "sqrt"]), sub).map(
        lambda p: f"{p[0]}({p[1]})")
    call2 = st.tuples(st.sampled_from(["min", "max"]), sub, sub).map(
        lambda p: f"{p[0]}({p[1]}, {p[2]})")
    ite = st.tuples(sub, st.sampled_from(["<", "<=", ">", ">=", "=="]), sub, sub, sub).map(
        lambda p: f"ite({p[0]} {p[1]} {p[2]}, {p[3]}, {p[4]})")
    return st.one_of(binop, neg, paren, call1, call2, ite)


sources = st.recursive(_leaf, _extend, max_leaves=12)


@given(sources)
def test_print_parse_round_trip(src):
    e = parse(src)
    printed = to_source(e)
    assert parse(printed) == e
    assert to_source(parse(printed)) == printed


@given(sources, st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 2))
def test_evaluation_is_deterministic(src, x, y, t):
    e = parse(src)
    env = {"x": x, "y": y, "t": t}
    try:
        first = e.eval(env)
    except EvalError:
        with pytest.raises(EvalError):
            e.eval(env)
        return
    assert e.eval(env) == first or (math.isnan(first) and math.isnan(e.eval(env)))
    assert parse(to_source(e)).eval(env) == first
