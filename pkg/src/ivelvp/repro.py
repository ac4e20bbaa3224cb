"""Re-run the worked examples and tabulate pass/fail.

Each row loads its problem from the problems directory (the bundled one by
default), so a damaged file shows up as a failed row rather than a crash.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .calculus import gateaux
from .critical import critical_point_check, palais_smale_probe, stationary_sequence
from .ekeland import check_ekeland_point, ekeland_bifunction, ekeland_minimize
from .errors import IvelvpError
from .games import aggregate_bifunction
from .interval import Interval, add, compare, gh_diff, hausdorff
from .ivfunc import infimum
from .problems import bifunction_from_json, function_from_json, game_from_json, load

__all__ = ["MODULES", "ReproRow", "run", "format_table"]

MODULES = ("interval-core", "ivfunc", "gh-calculus", "ekeland", "games")


@dataclass
class ReproRow:
    module: str
    example: str
    expected: str
    got: str
    passed: bool

    def to_json(self) -> dict:
        return {"module": self.module, "example": self.example, "expected": self.expected,
                "got": self.got, "passed": self.passed}


def _fmt(v) -> str:
    if isinstance(v, Interval):
        return f"[{_fmt(v.lo)}, {_fmt(v.hi)}]"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.6g}"
    return str(v)


def _close(v: Interval, lo: float, hi: float, tol: float) -> bool:
    return hausdorff(v, Interval(lo, hi)) <= tol


def _fn(name: str, d):
    data = load(f"bundled:{name}", d)
    return data, function_from_json(data)


# each example: (module, label, expected, thunk(problems_dir) -> (got, passed))
_EXAMPLES: list[tuple[str, str, str, Callable]] = []


def _example(module: str, label: str, expected: str):
    def register(fn):
        _EXAMPLES.append((module, label, expected, fn))
        return fn
    return register


@_example("interval-core", "A + B with A=[1,3], B=[-3,0]", "[-2, 3]")
def _(d):
    s = add(Interval(1, 3), Interval(-3, 0))
    return _fmt(s), _close(s, -2, 3, 0)


@_example("interval-core", "[1,3] ⊖gH [1,2]", "[0, 1]")
def _(d):
    v = gh_diff(Interval(1, 3), Interval(1, 2))
    return _fmt(v), _close(v, 0, 1, 0)


@_example("interval-core", "A ⊖gH A with A=[1,3]", "[0, 0]")
def _(d):
    v = gh_diff(Interval(1, 3), Interval(1, 3))
    return _fmt(v), _close(v, 0, 0, 0)


def _compare_case(a, b, want):
    def thunk(d):
        v = compare(Interval(*a), Interval(*b))
        got = (v.le, v.lt) if want[1] is not None else (v.le, None)
        text = f"le={v.le} lt={v.lt}"
        return text, got == want
    return thunk


for _a, _b, _want in (((1, 3), (2, 3), (True, False)), ((0, 2), (0, 3), (True, None)),
                      ((-2, 3), (1, 2), (False, None))):
    _exp = f"le={_want[0]}" + ("" if _want[1] is None else f" lt={_want[1]}")
    _example("interval-core", f"compare({list(_a)}, {list(_b)})", _exp)(_compare_case(_a, _b, _want))


@_example("ivfunc", "f=[-x,x] at x=0.5", "[-0.5, 0.5]")
def _(d):
    _, f = _fn("abs_spread", d)
    v = f(0.5)
    return _fmt(v), _close(v, -0.5, 0.5, 1e-12)


@_example("ivfunc", "infimum of the piecewise exp example on [-10,10]", "≈ [0, 1] (grid tol 1e-3)")
def _(d):
    _, f = _fn("ekeland_exp", d)
    v = infimum(f)
    return _fmt(v), _close(v, 0, 1, 1e-3)


@_example("ivfunc", "infimum of [1/(x²+1), 1/(x²+1)+1] on [-100,100]", "≈ [0, 1] (grid tol 1e-3)")
def _(d):
    _, f = _fn("bump", d)
    v = infimum(f)
    return _fmt(v), _close(v, 0, 1, 1e-3)


def _derivative_case(name, lo, hi):
    def thunk(d):
        data, f = _fn(name, d)
        g = gateaux(f, data["point"], data["direction"])
        return _fmt(g.value), g.converged and _close(g.value, lo, hi, 1e-5)
    return thunk


for _name, _label, (_lo, _hi) in (("bump", "f'(1)(1) for [1/(x²+1), 1/(x²+1)+1]", (-0.5, -0.5)),
                                  ("abs_spread", "f'(0.5)(1) for [-x,x]", (-1.0, 1.0)),
                                  ("square_spread", "f'(1)(1) for [-x²,x²]", (-2.0, 2.0))):
    _example("gh-calculus", _label, _fmt(Interval(_lo, _hi)))(_derivative_case(_name, _lo, _hi))


@_example("ekeland", "piecewise exp, ε=0.25, x0=ln 0.2", "certificate verified; x̄=x0-1 meets (a)(b)(c)")
def _(d):
    data, f = _fn("ekeland_exp", d)
    eps = float(data["epsilon"])
    x0 = float(data["x0"][0])
    cert = ekeland_minimize(f, eps, [x0])
    s = f.sample(extra=[np.array([x0]), np.array([x0 - 1.0])])
    v = check_ekeland_point(s, eps, s.index_of([x0]), s.index_of([x0 - 1.0]))
    c_ok = v["cond_c_witness"] is None
    got = (f"verified={cert.verified}; x0-1: a={v['cond_a']} b={v['cond_b']} c={c_ok}")
    return got, cert.verified and v["cond_a"] and bool(v["cond_b"]) and c_ok


@_example("ekeland", "F(x,y)=[|x-y|, |x-y|+1] on a grid", "x̄ certifies (a)(b)")
def _(d):
    data = load("bundled:abs_bifunction", d)
    F = bifunction_from_json(data)
    i0 = int(np.flatnonzero(np.isclose(F.points[:, 0], float(data["x0"])))[0])
    res = ekeland_bifunction(F, float(data["epsilon"]), i0)
    return f"verified={res.verified}", res.verified


def _critical_case(name):
    def thunk(d):
        data, f = _fn(name, d)
        verdicts = [critical_point_check(f, x).verdict for x in data["points"]]
        n_ok = sum(v is True for v in verdicts)
        return f"{n_ok}/{len(verdicts)}", n_ok == len(verdicts)
    return thunk


_example("ekeland", "f=[-x,x]: sampled points are critical", "all")(_critical_case("abs_spread"))
_example("ekeland", "f=[-x²,x²]: 0 ∈ f'(x)(h) at sampled (x,h)", "all")(_critical_case("square_spread"))


@_example("ekeland", "stationary sequence for [1/(x²+1), 1/(x²+1)+1]", "f(xₙ)→[0,1], f'(xₙ)(h)→[0,0]")
def _(d):
    data, f = _fn("bump", d)
    rep = stationary_sequence(f, data["epsilons"])
    last = rep.steps[-1]
    return (f"f={_fmt(last.value)} derivatives vanish={rep.derivatives_vanish}",
            rep.approaches_infimum and rep.derivatives_vanish)


@_example("ekeland", "Palais–Smale probe for [-x²,x²]", "cluster found, probe passes")
def _(d):
    data, f = _fn("square_spread", d)
    ps = palais_smale_probe(f, data["sequence"])
    return f"cluster={ps.cluster} passed={ps.passed}", ps.passed and not ps.vacuous


@_example("games", "aggregate bifunction, deviation by player 1 only", "f1(y1,x2) ⊖gH f1(x1,x2)")
def _(d):
    data = load("bundled:coordination", d)
    G = game_from_json(data)
    x = G.parse_profile(data["probe"]["x"])
    y = G.parse_profile(data["probe"]["y"])
    if tuple(x[1:]) != tuple(y[1:]):
        raise ValueError("the probe must be a deviation by player 1 only")
    agg = aggregate_bifunction(G, x, y)
    direct = gh_diff(G.loss(0, (y[0], *x[1:])), G.loss(0, x))
    return f"{_fmt(agg)} vs {_fmt(direct)}", hausdorff(agg, direct) <= 1e-12


def run(only: str | None = None, problems_dir=None) -> list[ReproRow]:
    if only is not None and only not in MODULES:
        raise ValueError(f"unknown module {only!r}; choose from {', '.join(MODULES)}")
    rows = []
    for module, label, expected, thunk in _EXAMPLES:
        if only is not None and module != only:
            continue
        try:
            got, ok = thunk(problems_dir)
        except (IvelvpError, ValueError, KeyError, IndexError, TypeError) as exc:
            msg = exc.message if isinstance(exc, IvelvpError) else f"{type(exc).__name__}: {exc}"
            got, ok = f"error: {msg}", False
        rows.append(ReproRow(module, label, expected, got, bool(ok)))
    return rows


def format_table(rows: list[ReproRow]) -> str:
    keys = ("module", "example", "expected", "got")
    widths = {k: max([len(k)] + [len(getattr(r, k)) for r in rows]) for k in keys}
    lines = ["  ".join(k.ljust(widths[k]) for k in keys) + "  status"]
    for r in rows:
        cells = "  ".join(getattr(r, k).ljust(widths[k]) for k in keys)
        lines.append(cells + ("  PASS" if r.passed else "  FAIL"))
    lines.append(f"{sum(r.passed for r in rows)}/{len(rows)} examples passed")
    return "\n".join(lines)
