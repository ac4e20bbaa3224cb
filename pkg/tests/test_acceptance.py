"""Acceptance criteria 1-9, each at its stated tolerance and time budget.

Every criterion prints one ``criterion N: PASS|FAIL`` line; the lines are
collected again in the pytest terminal summary. Run this file directly
(``python3 tests/test_acceptance.py``) to get only those lines.
"""

import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import oracles  # noqa: E402
from ivelvp.calculus import gateaux  # noqa: E402
from ivelvp.critical import stationary_sequence  # noqa: E402
from ivelvp.ekeland import check_ekeland_point, ekeland_minimize  # noqa: E402
from ivelvp.games import (aggregate_tables, bifunction_premise, find_epsilon_nash,  # noqa: E402
                          random_game, verify_epsilon_nash)
from ivelvp.interval import Interval, gh_diff, hausdorff, leq, less, scalar_mul  # noqa: E402
from ivelvp.ivfunc import Box, FinitePoints, IntervalFn  # noqa: E402
from ivelvp.ivode import (ControlFamily, IntervalIVP, batch_costs,  # noqa: E402
                          epsilon_minimal_control, integral_residual, solve_ivp)
from ivelvp.mountain_pass import mountain_pass  # noqa: E402
from ivelvp.problems import control_from_json, function_from_json, load  # noqa: E402

CRITERIA = {}


def criterion(number, label, budget):
    def register(fn):
        CRITERIA[number] = (label, budget, fn)
        return fn
    return register


def evaluate(number):
    """Run one criterion; returns (passed, line)."""
    label, budget, fn = CRITERIA[number]
    start = time.perf_counter()
    try:
        ok, detail = fn()
    except Exception as exc:  # noqa: BLE001 - a crash is a failed criterion
        ok, detail = False, f"raised {type(exc).__name__}: {exc}"
    secs = time.perf_counter() - start
    within = budget is None or secs < budget
    if not within:
        detail += f"; over budget ({budget:g}s)"
    passed = ok and within
    limit = f", budget {budget:g}s" if budget else ""
    line = f"criterion {number}: {'PASS' if passed else 'FAIL'} ({secs:.1f}s{limit}) {label}: {detail}"
    return passed, line


# ---------------------------------------------------------------- 1

def _dyadic_intervals(rng, n):
    ends = np.sort(rng.integers(-40, 41, (n, 2)), axis=1) / 4
    return [Interval(a, b) for a, b in ends.tolist()]


@criterion(1, "interval algebra", 1.0)
def interval_algebra():
    bad = []
    # worked values
    if gh_diff(Interval(1, 3), Interval(1, 2)) != Interval(0, 1):
        bad.append("[1,3] ⊖gH [1,2]")
    A, B, C = Interval(1, 3), Interval(-3, 0), Interval(1, 2)
    if A + B != Interval(-2, 3) or leq(A + B, C) or not leq(gh_diff(A, C), -B):
        bad.append("sum [1,3]+[-3,0]")
    rng = np.random.default_rng(2024)
    n_tuples = 10_000
    As, Bs, Cs, Ds = (_dyadic_intervals(rng, n_tuples) for _ in range(4))
    shifts = (np.sort(rng.integers(0, 9, (n_tuples, 4)).reshape(n_tuples, 2, 2), axis=2) / 4).tolist()
    lams = (rng.integers(0, 17, n_tuples) / 4).tolist()
    zero = Interval(0, 0)
    hits = dict.fromkeys(["p21i", "p21ii", "p21iii", "p21iii_conv", "r25a", "r25b", "r25c"], 0)
    for k in range(n_tuples):
        A, C, lam = As[k], Cs[k], lams[k]
        if k % 2:
            # make the order premises hold half the time
            s, t = shifts[k]
            B = Interval(A.lo + s[0] + (k % 4 == 1), A.hi + s[1] + 1)
            D = Interval(C.lo + t[0] + 1, C.hi + t[1] + 1)
        else:
            B, D = Bs[k], Ds[k]
        g = gh_diff(A, B)
        # gH-difference formula, antisymmetry, A ⊖gH A = [0,0]
        lo, hi = sorted((A.lo - B.lo, A.hi - B.hi))
        if g != Interval(lo, hi) or -g != gh_diff(B, A) or gh_diff(A, A) != zero:
            bad.append(("gH formula", A, B))
        # orders read off the gH-difference
        if leq(A, B) != leq(g, zero) or less(A, B) != less(g, zero):
            bad.append(("order via gH", A, B))
        if less(A, B) and not leq(A, B):
            bad.append(("≺ implies ≼", A, B))
        # ≼ is kept by sums and nonnegative scaling; sum bounds give gH bounds
        if leq(A, B) and leq(C, D):
            hits["p21i"] += 1
            if not leq(A + C, B + D):
                bad.append(("≼ sum", A, B, C, D))
        if leq(A, B):
            hits["p21ii"] += 1
            if not leq(scalar_mul(lam, A), scalar_mul(lam, B)):
                bad.append(("≼ scaling", A, B, lam))
        if leq(A + B, C):
            hits["p21iii"] += 1
            if not leq(gh_diff(A, C), -B):
                bad.append(("≼ sum bound", A, B, C))
        b = Interval(B.lo, B.lo)
        if leq(gh_diff(A, C), -b):
            hits["p21iii_conv"] += 1
            if not leq(A + b, C):
                bad.append(("≼ sum bound converse", A, b, C))
        # the same with ≺
        if less(A, B) and less(C, D):
            hits["r25a"] += 1
            if not less(A + C, B + D):
                bad.append(("≺ sum", A, B, C, D))
        if less(A, B) and lam > 0:
            hits["r25b"] += 1
            if not less(scalar_mul(lam, A), scalar_mul(lam, B)):
                bad.append(("≺ scaling", A, B, lam))
        if less(A + B, C):
            hits["r25c"] += 1
            if not less(gh_diff(A, C), -B):
                bad.append(("≺ sum bound", A, B, C))
        if less(gh_diff(A, C), -b) and not less(A + b, C):
            bad.append(("≺ sum bound converse", A, b, C))
    # ⊀ passes to the limit: sequences converging to a limit on the boundary of B
    seqs = 0
    for B in _dyadic_intervals(rng, 300):
        limit = Interval(B.lo, max(B.lo, B.hi - float(rng.integers(0, 3))))
        terms = [Interval(limit.lo + 1 / n, limit.hi + 1 / n) for n in range(1, 101)]
        if all(not less(t, B) for t in terms):
            seqs += 1
            gaps = [hausdorff(t, limit) - 1 / n for n, t in enumerate(terms, 1)]
            if max(gaps) > 1e-12 or less(limit, B):
                bad.append(("⊀ limit", B, limit))
    exercised = min(hits.values())
    ok = not bad and exercised >= 500 and seqs >= 100
    return ok, (f"{n_tuples} tuples, min premise count {exercised}, {seqs} sequences, "
                f"{len(bad)} violations" + (f", first {bad[0]}" if bad else ""))


# ---------------------------------------------------------------- 2

@criterion(2, "gH-derivatives", 5.0)
def derivatives():
    rng = np.random.default_rng(7)
    bump = IntervalFn("1/(x^2+1)", "1/(x^2+1)+1", Box([-100], [100]))
    spread = IntervalFn("-x", "x", Box([0], [1]))
    square = IntervalFn("-x^2", "x^2", Box([-5], [5]))
    worst = 0.0
    for _ in range(20):
        x, h = rng.uniform(-5, 5), rng.uniform(-3, 3)
        v = -2 * h * x / (x * x + 1) ** 2
        worst = max(worst, hausdorff(gateaux(bump, x, h).value, Interval(v, v)))
        x, h = rng.uniform(0.05, 0.95), rng.uniform(0, 3)
        worst = max(worst, hausdorff(gateaux(spread, x, h).value, Interval(-h, h)))
        x, h = rng.uniform(-4, 4), rng.uniform(0, 3)
        h = math.copysign(h, x)
        worst = max(worst, hausdorff(gateaux(square, x, h).value, Interval(-2 * h * x, 2 * h * x)))
    fd_worst = 0.0
    for src in ("sin(x)", "exp(x)", "x^3 - 2*x", "1/(x^2+1)"):
        f = IntervalFn(src, src, Box([-3], [3]))
        for x in rng.uniform(-2, 2, 5):
            e = 1e-5
            fd = (f(x + e).lo - f(x - e).lo) / (2 * e)
            g = gateaux(f, x, 1.0).value
            fd_worst = max(fd_worst, abs(g.lo - fd), abs(g.hi - fd))
    ok = worst <= 1e-5 and fd_worst <= 1e-6
    return ok, f"max d_H {worst:.2e} over 60 closed forms, max finite-difference gap {fd_worst:.2e}"


# ---------------------------------------------------------------- 3

@criterion(3, "Ekeland certificates", 30.0)
def ekeland():
    rng = np.random.default_rng(12345)
    disagreements = 0
    for _ in range(100):
        n = int(rng.integers(2, 31))
        dist = oracles.random_metric(rng, n)
        lo = rng.uniform(-2, 2, n)
        hi = lo + rng.uniform(0, 1.5, n)
        eps = float(rng.choice([0.05, 0.3, 1.0, 3.0]))
        i0 = int(rng.integers(n))
        cert = ekeland_minimize(IntervalFn(lo, hi, FinitePoints(dist)), eps, index=i0)
        want = oracles.ekeland_conditions(lo.tolist(), hi.tolist(), dist, eps, i0, cert.index)
        got = (cert.cond_a, cert.cond_b, cert.cond_c_witness is None, cert.strict_c_witness is None)
        if got != (want["a"], want["b"], want["c"], want["strict"]) or not cert.verified:
            disagreements += 1
        elif cert.index not in oracles.ekeland_set(lo.tolist(), hi.tolist(), dist, eps, i0):
            disagreements += 1
    data = load("bundled:ekeland_exp")
    f = function_from_json(data)
    x0 = math.log(0.2)
    cert = ekeland_minimize(f, 0.25, [x0])
    spacing = float(f.domain.spacing[0])
    d = abs(cert.x_bar[0] - x0) if np.ndim(cert.x_bar) else abs(cert.x_bar - x0)
    exp_ok = cert.verified and cert.cond_a and cert.cond_b and cert.cond_c_witness is None
    exp_ok = exp_ok and d <= 1 + spacing
    # the hand-derived point x0 - 1 meets all three conclusions on the same grid
    s = f.sample(extra=[np.array([x0]), np.array([x0 - 1.0])])
    v = check_ekeland_point(s, 0.25, s.index_of([x0]), s.index_of([x0 - 1.0]))
    exp_ok = exp_ok and v["cond_a"] and v["cond_b"] and v["cond_c_witness"] is None
    ok = disagreements == 0 and exp_ok and s.lower.size >= 10_000
    return ok, (f"{disagreements} discrepancies in 100 instances; exp example on {s.lower.size} points, "
                f"d(x0, x̄) = {d:.3g} <= {1 + spacing:.4g}, x0-1 certified={bool(exp_ok)}")


# ---------------------------------------------------------------- 4

@criterion(4, "near-stationary sequence", 10.0)
def stationary():
    f = IntervalFn("1/(x^2+1)", "1/(x^2+1)+1", Box([-100], [100], 10001))
    rep = stationary_sequence(f, [0.1, 0.03, 0.01, 0.003, 0.001])
    last = rep.steps[-1]
    dv = hausdorff(last.value, Interval(0, 1))
    dd = max(hausdorff(g.value, Interval(0, 0)) for g in last.derivatives)
    return dv <= 1e-2 and dd <= 1e-2, f"d_H(f(x_n), [0,1]) = {dv:.2e}, max d_H(f'(x_n)(h), [0,0]) = {dd:.2e}"


# ---------------------------------------------------------------- 5

def _grid_levels(lower, upper):
    xs = np.linspace(-3, 3, 601)
    i0, i1 = int(np.argmin(np.abs(xs + 1))), int(np.argmin(np.abs(xs - 1)))
    out = []
    for g in (lower, upper):
        vals = [g(x) for x in xs]
        monotone = oracles.monotone_path_max(vals, i0, i1)
        if oracles.bottleneck_value(vals, i0, i1) != monotone:
            raise AssertionError("a non-monotone grid path beat the monotone ones")
        out.append(monotone)
    return Interval(*out)


@criterion(5, "Mountain Pass", 60.0)
def mountain():
    well = lambda x: (x * x - 1) ** 2  # noqa: E731
    parts = []
    ok = True
    for name, oracle in (("double_well", _grid_levels(well, well)),
                         ("double_well_interval", _grid_levels(well, lambda x: well(x) + 1))):
        data = load(f"bundled:{name}")
        f = function_from_json(data)
        omega = Box(data["omega"]["lower"], data["omega"]["upper"], 101)
        res = mountain_pass(f, data["p0"], data["p1"], omega, seed=0)
        err = hausdorff(res.C, oracle)
        target = Interval(1, 1) if name == "double_well" else Interval(1, 2)
        ok = ok and err <= 1e-2 and oracle == target and res.alpha_bound_holds
        parts.append(f"{name} C={res.C} oracle={oracle} d_H={err:.1e}")
    return ok, "; ".join(parts)


# ---------------------------------------------------------------- 6

@criterion(6, "ε-Nash games", 30.0)
def games():
    rng = np.random.default_rng(0)
    verified = member = 0
    games_ = []
    for _ in range(50):
        G = random_game(rng, sizes=(5, 5))
        games_.append(G)
        res = find_epsilon_nash(G, 0.1)
        verified += bool(verify_epsilon_nash(G, res.profile, 0.1)[0])
        want = oracles.nash_set(G.losses, [s.dist.tolist() for s in G.strategy_sets], 0.1)
        member += tuple(res.profile) in want
    probe_rng = np.random.default_rng(1)
    counter = premises = 0
    cache = [(aggregate_tables(G), G.product_metric()) for G in games_]
    for _ in range(10_000):
        g = int(probe_rng.integers(len(games_)))
        G = games_[g]
        x = G.profile(int(probe_rng.integers(G.n_profiles)))
        eps = float(probe_rng.uniform(0, 1))
        if bifunction_premise(G, x, eps, *cache[g]):
            premises += 1
            if not verify_epsilon_nash(G, x, eps)[0]:
                counter += 1
    ok = verified == 50 and member == 50 and counter == 0 and premises > 0
    return ok, (f"verified {verified}/50, in enumerated set {member}/50; "
                f"10000 probes, {premises} with the premise, {counter} counterexamples")


# ---------------------------------------------------------------- 7

@criterion(7, "interval IVPs", 10.0)
def ode():
    tr = solve_ivp(IntervalIVP("1", "2", Interval(0, 0), 1.0))
    e1 = max(np.max(np.abs(tr.lower - tr.times)), np.max(np.abs(tr.upper - 2 * tr.times)))
    p = IntervalIVP("0", "1", Interval(0, 2), 3.0, mode="ii")
    tr = solve_ivp(p)
    e2 = max(np.max(np.abs(tr.lower - tr.times)), np.max(np.abs(tr.upper - 2)))
    vu = abs(tr.valid_until - 2)
    e3 = 0.0
    for mode in ("i", "ii"):
        tr = solve_ivp(IntervalIVP("xl", "xu", Interval(1, 1), 1.0, mode=mode, step=1e-3))
        e3 = max(e3, abs(tr.lower[-1] - math.e), abs(tr.upper[-1] - math.e))
    dyn = ("-xu + sin(3*t)", "-xl + sin(3*t) + 1 + 0.5*xu*xu")
    r1 = integral_residual(IntervalIVP(*dyn, Interval(0, 1), 1.0, step=0.01))
    r2 = integral_residual(IntervalIVP(*dyn, Interval(0, 1), 1.0, step=0.005))
    ok = e1 <= 1e-10 and e2 <= 1e-10 and vu <= p.step and e3 <= 1e-6 and r1 / r2 >= 12
    return ok, (f"[t,2t] err {e1:.1e}; [t,2] err {e2:.1e}, |valid_until-2| {vu:.1e}; "
                f"e^t err {e3:.1e}; residual ratio {r1 / r2:.1f}")


# ---------------------------------------------------------------- 8

@criterion(8, "ε-minimal control", 60.0)
def control():
    prob = control_from_json(load("bundled:control_zero"))
    res = epsilon_minimal_control(prob.ivp, prob.cost, prob.epsilon, prob.family, prob.u0)
    U = prob.family.controls()
    lo, hi, vu = batch_costs(prob.ivp, U, prob.cost)
    j = res.index
    d = ControlFamily.sup_distance(U, U[j])
    eps = prob.epsilon
    beaten = int(np.sum((lo + eps * d < lo[j]) & (hi + eps * d < hi[j])))
    ok = (res.control == [[0.0]] * prob.family.K and res.verified and beaten == 0
          and len(U) <= 10_000 and np.all(vu >= prob.ivp.T))
    return ok, f"returned {res.control}, family {len(U)}, enumerated violations {beaten}"


# ---------------------------------------------------------------- 9

@criterion(9, "repro determinism", None)
def determinism():
    cmd = [sys.executable, "-m", "ivelvp", "repro", "--seed", "0"]
    a = subprocess.run(cmd, capture_output=True, check=False)
    b = subprocess.run(cmd, capture_output=True, check=False)
    ok = a.returncode == 0 and a.stdout == b.stdout and b.returncode == 0 and len(a.stdout) > 0
    return ok, f"two runs, {len(a.stdout)} bytes each, identical={a.stdout == b.stdout}"


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number):
    import conftest
    passed, line = evaluate(number)
    print(line)
    conftest.ACCEPTANCE_LINES.append((number, line))
    assert passed, line


if __name__ == "__main__":
    results = [evaluate(n) for n in sorted(CRITERIA)]
    for _, line in results:
        print(line)
    sys.exit(0 if all(p for p, _ in results) else 1)
