"""JSON problem files: reading, validation and construction of solver inputs.

Intervals are ``[lo, hi]`` arrays. A domain is either

* ``{"type": "box", "lower": [...], "upper": [...], "grid": 101}`` or
* ``{"type": "finite", "coords": [...], "dist": [[...]], "labels": [...]}``
  (``coords`` or ``dist`` may be omitted, not both).

Function problems carry endpoint expressions (or, on finite domains, value
lists) under ``"lower"`` and ``"upper"``. Control problems use the keys
``dynamics_lower``, ``dynamics_upper``, ``cost_lower`` and ``cost_upper``.
A path of the form ``bundled:NAME`` refers to a file shipped with the package.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .ekeland import Bifunction
from .errors import IOFailure, ProblemError
from .games import IntervalGame
from .interval import Interval
from .ivfunc import Box, FinitePoints, IntervalFn
from .ivode import ControlFamily, CostFn, IntervalIVP

__all__ = [
    "BUNDLED_DIR",
    "resolve",
    "load",
    "domain_from_json",
    "function_from_json",
    "bifunction_from_json",
    "game_from_json",
    "ControlProblem",
    "control_from_json",
    "interval_arg",
]

BUNDLED_DIR = Path(__file__).parent / "problems"


def resolve(path, problems_dir=None) -> Path:
    path = str(path)
    if path.startswith("bundled:"):
        name = path[len("bundled:"):]
        base = Path(problems_dir) if problems_dir is not None else BUNDLED_DIR
        return base / (name if name.endswith(".json") else name + ".json")
    return Path(path)


def load(path, problems_dir=None) -> dict:
    p = resolve(path, problems_dir)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise IOFailure(f"cannot read problem file: {exc.strerror or exc}", witness=str(p)) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise IOFailure(f"problem file is not valid JSON: {exc.msg}",
                        witness={"file": str(p), "line": exc.lineno, "column": exc.colno}) from None
    if not isinstance(data, dict):
        raise ProblemError("a problem file must hold a JSON object", witness=str(p))
    return data


def _require(data: dict, *keys):
    missing = [k for k in keys if k not in data]
    if missing:
        raise ProblemError(f"missing key(s): {', '.join(missing)}", witness=missing)
    return [data[k] for k in keys]


def interval_arg(value) -> Interval:
    """An interval from JSON (``[lo, hi]`` or a number) or from its JSON text."""
    if isinstance(value, str):
        try:
            value = json.loads(value)
        except json.JSONDecodeError:
            raise ProblemError(f"not an interval: {value!r}") from None
    try:
        return Interval.from_json(value)
    except (TypeError, ValueError) as exc:
        raise ProblemError(f"not an interval: {value!r} ({exc})") from None


def domain_from_json(d: dict, grid: int | None = None):
    if not isinstance(d, dict):
        raise ProblemError("domain must be a JSON object")
    kind = d.get("type", "box")
    if kind == "box":
        lower, upper = _require(d, "lower", "upper")
        n = int(grid if grid is not None else d.get("grid", 101))
        return Box(lower, upper, n)
    if kind == "finite":
        if "dist" not in d and "coords" not in d:
            raise ProblemError("a finite domain needs 'dist' or 'coords'")
        return FinitePoints(d.get("dist"), coords=d.get("coords"), labels=d.get("labels"))
    raise ProblemError(f"unknown domain type {kind!r}")


def function_from_json(data: dict, grid: int | None = None) -> IntervalFn:
    dom, lower, upper = _require(data, "domain", "lower", "upper")
    return IntervalFn(lower, upper, domain_from_json(dom, grid))


def bifunction_from_json(data: dict, grid: int | None = None) -> Bifunction:
    """Expressions in ``x``/``y`` (or ``x1..``, ``y1..``) or ``N x N`` value tables."""
    dom, lower, upper = _require(data, "domain", "lower", "upper")
    domain = domain_from_json(dom, grid)
    if isinstance(lower, list):
        if not isinstance(domain, FinitePoints):
            raise ProblemError("tabulated bifunctions need a finite domain")
        return Bifunction.from_tables(lower, upper, domain.dist, labels=domain.labels,
                                      points=domain.coords, description=f"all {domain.n} points")
    return Bifunction.from_exprs(lower, upper, domain)


def game_from_json(data: dict) -> IntervalGame:
    _require(data, "strategies", "losses")
    try:
        return IntervalGame.from_json(data)
    except (TypeError, IndexError, KeyError) as exc:
        raise ProblemError(f"malformed game: {exc}") from None


class ControlProblem:
    """Dynamics, optional cost and family, and the controls named in the file."""

    def __init__(self, ivp: IntervalIVP, cost: CostFn | None, family: ControlFamily | None,
                 u0=None, u=None, epsilon: float | None = None):
        self.ivp, self.cost, self.family = ivp, cost, family
        self.u0, self.u, self.epsilon = u0, u, epsilon


def control_from_json(data: dict) -> ControlProblem:
    lower, upper, x0, T = _require(data, "dynamics_lower", "dynamics_upper", "x0", "T")
    controls = data.get("controls")
    fam = None
    if "family" in data:
        f = data["family"]
        K, lo, hi, levels = _require(f, "K", "lower", "upper", "levels")
        fam = ControlFamily(K, lo, hi, levels)
        if controls is None:
            controls = fam.m
    ivp = IntervalIVP(lower, upper, interval_arg(x0), float(T), data.get("mode", "i"),
                      data.get("step"), controls)
    cost = None
    if "cost_lower" in data or "cost_upper" in data:
        cl, cu = _require(data, "cost_lower", "cost_upper")
        cost = CostFn(cl, cu, ivp.m)
    u0 = data.get("u0")
    u = data.get("u")
    return ControlProblem(ivp, cost, fam, None if u0 is None else np.asarray(u0, dtype=float),
                          None if u is None else np.asarray(u, dtype=float), data.get("epsilon"))
