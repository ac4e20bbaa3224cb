"""Command-line entry point: ``ivelvp <subcommand> [problem.json] [flags]``.

Every result is a JSON object ``{"schema": "ivelvp/1", "command": ..., "result": ...}``.
Rejections print ``{"schema": ..., "error": {"kind", "message", "witness"}}``
and exit with status 1; internal errors exit with status 2.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import repro as repro_mod
from .calculus import IntervalCurve, gateaux, generalized_derivative, linearity_defect
from .critical import critical_point_check, palais_smale_probe, stationary_sequence
from .ekeland import caristi_fixed_point, ekeland_bifunction, ekeland_minimize, takahashi_minimize
from .errors import InternalError, IOFailure, IvelvpError, ProblemError
from .games import find_epsilon_nash, verify_epsilon_nash
from .interval import Interval, add, compare, gh_diff, hausdorff, hukuhara_diff, scalar_mul
from .ivfunc import Box, FinitePoints, infimum
from .ivode import cost_functional, epsilon_minimal_control, solve_ivp
from .mountain_pass import mountain_pass
from .problems import (bifunction_from_json, control_from_json, function_from_json,
                       game_from_json, interval_arg, load)

SCHEMA = "ivelvp/1"

EXIT_OK, EXIT_REJECTED, EXIT_INTERNAL = 0, 1, 2


class _UsageError(IvelvpError):
    kind = "usage"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


# ---------------------------------------------------------------- helpers

def _json_arg(text):
    """A JSON value from the command line; bare words are kept as strings."""
    if text is None:
        return None
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _positive(name: str, value, allow_zero: bool = False) -> float:
    if value is None:
        raise ProblemError(f"{name} is required (flag or problem file)")
    v = float(value)
    if not np.isfinite(v) or v < 0 or (v == 0 and not allow_zero):
        raise ProblemError(f"{name} must be {'nonnegative' if allow_zero else 'positive'}", witness=v)
    return v


def _pick(flag, data: dict, key: str, default=None):
    return flag if flag is not None else data.get(key, default)


def _point(value) -> list:
    return np.atleast_1d(np.asarray(value, dtype=float)).tolist()


def _finite_index(domain: FinitePoints, x) -> int:
    if isinstance(x, str):
        if x in domain.labels:
            return domain.labels.index(x)
        raise ProblemError("unknown point label", witness=x)
    if isinstance(x, int) and domain.dim == 1 and not np.any(domain.coords[:, 0] == x):
        raise ProblemError("no point with these coordinates", witness=x)
    p = np.atleast_1d(np.asarray(x, dtype=float))
    hit = np.flatnonzero(np.all(domain.coords == p, axis=1))
    if hit.size == 0:
        raise ProblemError("no point with these coordinates", witness=p.tolist())
    return int(hit[0])


def _grid_index(points: np.ndarray, x) -> int:
    p = np.atleast_1d(np.asarray(x, dtype=float))
    d = np.max(np.abs(points - p), axis=1)
    k = int(np.argmin(d))
    if d[k] > 1e-9 * max(1.0, float(np.max(np.abs(p)))):
        raise ProblemError("x0 is not a point of the evaluated grid", witness=p.tolist())
    return k


# ---------------------------------------------------------------- commands

def cmd_interval(args):
    a = interval_arg(args.a)
    op = args.op
    if op in ("width", "neg"):
        value = a.width if op == "width" else -a
        out = {"op": op, "a": a.to_json()}
    else:
        if args.b is None:
            raise ProblemError(f"operation {op!r} needs a second operand")
        if op == "scale":
            lam = float(args.b)
            return {"op": op, "a": a.to_json(), "lambda": lam, "value": scalar_mul(lam, a).to_json()}, None
        b = interval_arg(args.b)
        out = {"op": op, "a": a.to_json(), "b": b.to_json()}
        if op == "add":
            value = add(a, b)
        elif op == "gh-diff":
            value = gh_diff(a, b)
        elif op == "h-diff":
            value = hukuhara_diff(a, b)
            out["exists"] = value is not None
        elif op == "hausdorff":
            value = hausdorff(a, b)
        else:
            v, w = compare(a, b), compare(b, a)
            out.update({"le": v.le, "lt": v.lt, "ge": w.le, "gt": w.lt})
            return out, None
    out["value"] = value.to_json() if isinstance(value, Interval) else value
    return out, None


def cmd_derive(args):
    data = load(args.problem)
    tol = args.tol if args.tol is not None else 1e-6
    if "t_range" in data:
        c = IntervalCurve(data["lower"], data["upper"], data["t_range"])
        t0 = float(_pick(args.t0, data, "t0"))
        v = generalized_derivative(c, t0, args.mode, tol)
        res = {"t0": t0, "mode": args.mode, "exists": bool(v)}
        res["value"] = v.to_json() if isinstance(v, Interval) else None
        if not v:
            res["reason"] = v.reason
        return res, None
    f = function_from_json(data, args.grid)
    x = _point(_pick(_json_arg(args.x0), data, "point"))
    h = _point(_pick(_json_arg(args.direction), data, "direction"))
    d = gateaux(f, x, h, tol)
    res = {"point": x, "direction": h, **d.to_json()}
    if args.homogeneity:
        res["homogeneity_defect"] = linearity_defect(f, x, h, tol=tol)
    return res, None


def cmd_minimize(args):
    data = load(args.problem)
    f = function_from_json(data, args.grid)
    eps = _positive("epsilon", _pick(args.epsilon, data, "epsilon"))
    x0 = _pick(_json_arg(args.x0), data, "x0")
    if x0 is None:
        raise ProblemError("x0 is required (flag or problem file)")
    if isinstance(f.domain, FinitePoints):
        cert = ekeland_minimize(f, eps, index=_finite_index(f.domain, x0))
    else:
        cert = ekeland_minimize(f, eps, _point(x0))
    res = cert.to_json()
    res["infimum_on_grid"] = infimum(f).to_json()
    return res, None


def cmd_bifunction(args):
    data = load(args.problem)
    F = bifunction_from_json(data, args.grid)
    eps = _positive("epsilon", _pick(args.epsilon, data, "epsilon"))
    x0 = _pick(_json_arg(args.x0), data, "x0")
    if x0 is None:
        raise ProblemError("x0 is required (flag or problem file)")
    if F.labels is not None and isinstance(x0, str):
        i0 = F.labels.index(x0) if x0 in F.labels else _grid_index(F.points, x0)
    else:
        i0 = _grid_index(F.points, x0)
    res = ekeland_bifunction(F, eps, i0, require_triangle=not args.allow_heuristic, seed=args.seed)
    return res.to_json(), None


def _finite_problem(args):
    data = load(args.problem)
    f = function_from_json(data, args.grid)
    if not isinstance(f.domain, FinitePoints):
        raise ProblemError("this command needs a finite domain")
    x0 = _pick(_json_arg(args.x0), data, "x0")
    i0 = 0 if x0 is None else _finite_index(f.domain, x0)
    return data, f, i0


def cmd_caristi(args):
    data, f, i0 = _finite_problem(args)
    if "T" not in data:
        raise ProblemError("the problem file needs the set-valued map 'T'")
    labels = f.domain.labels
    T = []
    for lab in labels:
        ys = data["T"].get(lab, [])
        T.append([_finite_index(f.domain, y if isinstance(y, str) else y) for y in ys])
    return caristi_fixed_point(T, f, i0).to_json(), None


def cmd_takahashi(args):
    _, f, i0 = _finite_problem(args)
    return takahashi_minimize(f, i0).to_json(), None


def cmd_critical(args):
    data = load(args.problem)
    f = function_from_json(data, args.grid)
    if args.stationary:
        eps = data.get("epsilons")
        if eps is None:
            raise ProblemError("--stationary needs 'epsilons' in the problem file")
        x0 = _json_arg(args.x0)
        tol = args.tol if args.tol is not None else 1e-2
        return stationary_sequence(f, eps, None if x0 is None else _point(x0), tol=tol).to_json(), None
    x0 = _json_arg(args.x0)
    points = [x0] if x0 is not None else data.get("points", [data.get("point")])
    if not points or points[0] is None:
        raise ProblemError("give a point with --x0 or 'points' in the problem file")
    tol = args.tol if args.tol is not None else 1e-6
    reports = [critical_point_check(f, _point(p), data.get("directions"), tol).to_json() for p in points]
    return {"points": reports}, None


def cmd_ps_probe(args):
    data = load(args.problem)
    f = function_from_json(data, args.grid)
    if "sequence" not in data:
        raise ProblemError("the problem file needs a 'sequence'")
    C = interval_arg(data["C"]) if "C" in data else None
    tol = args.tol if args.tol is not None else 1e-3
    return palais_smale_probe(f, data["sequence"], C, tol, data.get("directions")).to_json(), None


def cmd_mountain_pass(args):
    data = load(args.problem)
    f = function_from_json(data, args.grid)
    for k in ("p0", "p1", "omega"):
        if k not in data:
            raise ProblemError(f"the problem file needs {k!r}")
    om = data["omega"]
    omega = Box(om["lower"], om["upper"], args.grid or om.get("grid", 101))
    res = mountain_pass(f, data["p0"], data["p1"], omega, m=args.nodes, restarts=args.restarts,
                        seed=args.seed)
    return res.to_json(), None


def cmd_game(args):
    data = load(args.problem)
    G = game_from_json(data)
    if args.action == "verify":
        eps = _positive("epsilon", _pick(args.epsilon, data, "epsilon"), allow_zero=True)
        prof = _pick(_json_arg(args.x0), data, "profile")
        if prof is None:
            raise ProblemError("a profile is required (--x0 or 'profile' in the file)")
        p = G.parse_profile(prof)
        ok, witness = verify_epsilon_nash(G, p, eps)
        return {"profile": list(p), "labels": G.labels(p), "epsilon": eps, "verdict": ok,
                "witness": witness}, None
    eps = _positive("epsilon", _pick(args.epsilon, data, "epsilon"))
    x0 = _pick(_json_arg(args.x0), data, "x0")
    res = find_epsilon_nash(G, eps, x0, seed=args.seed)
    return res.to_json(), None


def cmd_ode(args):
    data = load(args.problem)
    cp = control_from_json(data)
    u = _json_arg(args.control)
    u = cp.u if u is None else np.asarray(u, dtype=float)
    traj = solve_ivp(cp.ivp, u if cp.ivp.m else None)
    res = traj.to_json()
    if cp.cost is not None and traj.complete:
        res["cost"] = cost_functional(cp.ivp, u if cp.ivp.m else None, cp.cost).to_json()
    return res, (["t", "lower", "upper"], traj.rows())


def cmd_control(args):
    data = load(args.problem)
    cp = control_from_json(data)
    if cp.cost is None or cp.family is None:
        raise ProblemError("control search needs cost_lower/cost_upper and a family")
    eps = _positive("epsilon", _pick(args.epsilon, data, "epsilon"))
    u0 = _json_arg(args.x0)
    u0 = cp.u0 if u0 is None else np.asarray(u0, dtype=float)
    if u0 is None:
        raise ProblemError("a starting control u0 is required (--x0 or 'u0' in the file)")
    res = epsilon_minimal_control(cp.ivp, cp.cost, eps, cp.family, u0)
    return res.to_json(), None


def cmd_repro(args):
    try:
        rows = repro_mod.run(args.only, args.problems_dir)
    except ValueError as exc:
        raise ProblemError(str(exc)) from None
    failed = sum(not r.passed for r in rows)
    payload = {"rows": [r.to_json() for r in rows], "passed": len(rows) - failed, "failed": failed}
    table = (["module", "example", "expected", "got", "passed"],
             [[r.module, r.example, r.expected, r.got, r.passed] for r in rows])
    return payload, table, (EXIT_REJECTED if failed else EXIT_OK), repro_mod.format_table(rows)


# ---------------------------------------------------------------- parser

def _common(p, *, epsilon=True, x0=True, grid=True, tol=True, seed=True):
    if epsilon:
        p.add_argument("--epsilon", type=float, help="overrides the file's epsilon")
    if x0:
        p.add_argument("--x0", help="starting point, profile or control as JSON (overrides the file)")
    if seed:
        p.add_argument("--seed", type=int, default=0, help="seed for every randomized step (default 0)")
    if grid:
        p.add_argument("--grid", type=int, help="grid points per dimension for box domains")
    if tol:
        p.add_argument("--tol", type=float, help="tolerance for the command's convergence test")
    p.add_argument("--output", help="write the result here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ivelvp", description="Interval-valued variational solvers")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("interval", help="interval arithmetic and comparisons")
    p.add_argument("op", choices=("add", "gh-diff", "h-diff", "hausdorff", "compare", "scale", "width", "neg"))
    p.add_argument("a", help="interval as JSON, e.g. [1,3]")
    p.add_argument("b", nargs="?", help="second interval, or the scalar for 'scale'")
    _common(p, epsilon=False, x0=False, grid=False, tol=False, seed=False)
    p.set_defaults(handler=cmd_interval)

    p = sub.add_parser("derive", help="gH-Gateaux derivative, or a curve's generalized derivative")
    p.add_argument("problem")
    p.add_argument("--direction", help="direction h as JSON")
    p.add_argument("--t0", type=float, help="curve problems: the point t0")
    p.add_argument("--mode", choices=("i", "ii"), default="i", help="curve problems: derivative mode")
    p.add_argument("--homogeneity", action="store_true", help="also report the positive-homogeneity defect")
    _common(p, epsilon=False, seed=False)
    p.set_defaults(handler=cmd_derive)

    for name, fn, helptext in (("minimize", cmd_minimize, "ε-minimizer with certificate"),
                               ("caristi", cmd_caristi, "Caristi fixed point on a finite space"),
                               ("takahashi", cmd_takahashi, "Takahashi minimal solution on a finite space"),
                               ("ps-probe", cmd_ps_probe, "Palais–Smale probe along a sequence")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("problem")
        _common(p)
        p.set_defaults(handler=fn)

    p = sub.add_parser("bifunction", help="Ekeland principle for a bifunction")
    p.add_argument("problem")
    p.add_argument("--allow-heuristic", action="store_true",
                   help="continue when the triangle property fails and mark the result heuristic")
    _common(p)
    p.set_defaults(handler=cmd_bifunction)

    p = sub.add_parser("critical", help="critical-point check, or a near-stationary sequence")
    p.add_argument("problem")
    p.add_argument("--stationary", action="store_true", help="run the decreasing-ε sequence from the file")
    _common(p)
    p.set_defaults(handler=cmd_critical)

    p = sub.add_parser("mountain-pass", help="minimax level over polygonal paths")
    p.add_argument("problem")
    p.add_argument("--nodes", type=int, default=8, help="free path nodes (default 8)")
    p.add_argument("--restarts", type=int, default=5, help="descent restarts (default 5)")
    _common(p, epsilon=False, x0=False, tol=False)
    p.set_defaults(handler=cmd_mountain_pass)

    p = sub.add_parser("game", help="ε-Nash equilibria of interval games")
    p.add_argument("action", choices=("solve", "verify"))
    p.add_argument("problem")
    _common(p, grid=False, tol=False)
    p.set_defaults(handler=cmd_game)

    p = sub.add_parser("ode", help="interval IVP trajectories")
    p.add_argument("action", choices=("solve",))
    p.add_argument("problem")
    p.add_argument("--control", help="piecewise-constant control as JSON (K x m)")
    _common(p, epsilon=False, x0=False, grid=False, tol=False, seed=False)
    p.set_defaults(handler=cmd_ode)

    p = sub.add_parser("control", help="ε-minimal control over a quantized family")
    p.add_argument("action", choices=("search",))
    p.add_argument("problem")
    _common(p, grid=False, tol=False, seed=False)
    p.set_defaults(handler=cmd_control)

    p = sub.add_parser("repro", help="re-run the worked examples and print a pass/fail table")
    p.add_argument("--only", choices=repro_mod.MODULES, help="restrict to one module")
    p.add_argument("--problems-dir", help="read example problems from this directory")
    p.add_argument("--seed", type=int, default=0, help="accepted for uniformity; the examples are deterministic")
    p.add_argument("--output")
    p.add_argument("--format", choices=("table", "json", "csv"), default="table")
    p.set_defaults(handler=cmd_repro)
    return parser


# ---------------------------------------------------------------- output

def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    return obj


def _render(command: str, payload: dict, table, fmt: str, text: str | None) -> str:
    if fmt == "table" and text is not None:
        return text + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if table is not None:
            header, rows = table
            w.writerow(header)
            w.writerows(_clean(rows))
        else:
            w.writerow(["key", "value"])
            for k, v in _clean(payload).items():
                w.writerow([k, v if isinstance(v, (str, int, float)) else json.dumps(v, ensure_ascii=False)])
        return buf.getvalue()
    doc = {"schema": SCHEMA, "command": command, "result": _clean(payload)}
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def _emit(text: str, output: str | None) -> None:
    if output:
        try:
            with open(output, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise IOFailure(f"cannot write output: {exc.strerror or exc}", witness=output) from None
    else:
        sys.stdout.write(text)


def _error(exc: IvelvpError) -> int:
    err = exc.to_json()
    sys.stdout.write(json.dumps({"schema": SCHEMA, "error": _clean(err)}, indent=2, ensure_ascii=False) + "\n")
    return EXIT_INTERNAL if err["kind"] == "internal" else EXIT_REJECTED


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        out = args.handler(args)
        payload, table = out[0], out[1]
        code = out[2] if len(out) > 2 else EXIT_OK
        text = out[3] if len(out) > 3 else None
        command = args.command + (f" {args.action}" if hasattr(args, "action") else "")
        _emit(_render(command, payload, table, args.format, text), args.output)
        return code
    except IvelvpError as exc:
        return _error(exc)
    except Exception as exc:  # noqa: BLE001 - anything else is a bug
        return _error(InternalError(f"{type(exc).__name__}: {exc}"))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
