"""Critical points, near-stationary sequences and the Palais–Smale probe."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .calculus import DERIV_TOL, gateaux
from .errors import ProblemError
from .interval import ZERO, Interval, contains_zero, hausdorff, less
from .ivfunc import Box, IntervalFn, infimum
from .ekeland import ekeland_descent

__all__ = [
    "default_directions",
    "DirectionReport",
    "CriticalReport",
    "critical_point_check",
    "StationaryStep",
    "StationaryReport",
    "stationary_sequence",
    "PSReport",
    "palais_smale_probe",
]


def default_directions(dim: int) -> np.ndarray:
    """The ± unit coordinate vectors."""
    eye = np.eye(dim)
    return np.vstack([eye, -eye])


@dataclass
class DirectionReport:
    h: list
    value: Interval
    converged: bool
    contains_zero: bool

    def to_json(self) -> dict:
        return {"h": self.h, "value": self.value.to_json(), "converged": self.converged,
                "contains_zero": self.contains_zero}


@dataclass
class CriticalReport:
    """``verdict`` is True (critical), False, or None when some derivative did not converge."""

    x: list
    verdict: bool | None
    directions: list

    def to_json(self) -> dict:
        return {"x": self.x, "verdict": self.verdict,
                "directions": [d.to_json() for d in self.directions]}


def _directions(f: IntervalFn, directions) -> np.ndarray:
    dim = f.domain.dim if f.domain is not None else 1
    if directions is None:
        return default_directions(dim)
    d = np.asarray(directions, dtype=float)
    return d[:, None] if d.ndim == 1 else d


def critical_point_check(f: IntervalFn, x, directions=None, tol: float = DERIV_TOL) -> CriticalReport:
    """Does ``0 ∈ f'(x)(h)`` (within ``tol``) for every sampled direction ``h``?"""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    reports = []
    for h in _directions(f, directions):
        d = gateaux(f, x, h)
        reports.append(DirectionReport(h.tolist(), d.value, d.converged, contains_zero(d.value, tol)))
    if not all(r.converged for r in reports):
        verdict = None
    else:
        verdict = all(r.contains_zero for r in reports)
    return CriticalReport(x.tolist(), verdict, reports)


@dataclass
class StationaryStep:
    epsilon: float
    start: list
    x: list
    value: Interval
    derivatives: list
    # f'(x)(h) ⊀ [-ε, -ε] in every direction
    no_steep_descent: bool
    # per direction: 0 ∈ f'(x)(h), or f'(x)(h) within tol of [0, 0]
    disjunction: list

    def to_json(self) -> dict:
        return {"epsilon": self.epsilon, "start": self.start, "x": self.x,
                "value": self.value.to_json(),
                "derivatives": [d.to_json() for d in self.derivatives],
                "no_steep_descent": self.no_steep_descent, "disjunction": self.disjunction}


@dataclass
class StationaryReport:
    infimum: Interval
    steps: list = field(default_factory=list)
    approaches_infimum: bool = False
    derivatives_vanish: bool = False
    tol: float = 1e-2

    def to_json(self) -> dict:
        return {"infimum": self.infimum.to_json(), "tol": self.tol,
                "approaches_infimum": self.approaches_infimum,
                "derivatives_vanish": self.derivatives_vanish,
                "steps": [s.to_json() for s in self.steps]}


def stationary_sequence(f: IntervalFn, epsilons, x0=None, directions=None,
                        tol: float = 1e-2) -> StationaryReport:
    """Near-stationary iterates for a decreasing sequence of ε on a box grid.

    For each ε the descent starts from the previous iterate when that point is
    ε-close to both endpoint infima, otherwise from the nearest grid point that
    is. Each iterate records its value and directional derivatives; the report
    states whether the last value is within ``tol`` of the componentwise
    infimum and whether every last-iterate derivative contains 0 or is within
    ``tol`` of [0, 0].
    """
    eps = np.asarray(epsilons, dtype=float)
    if eps.size == 0 or np.any(eps <= 0) or np.any(np.diff(eps) > 0):
        raise ProblemError("epsilons must be a nonempty, nonincreasing sequence of positive numbers")
    if not isinstance(f.domain, Box):
        raise ProblemError("stationary sequences are computed on box domains")
    s = f.sample(extra=None if x0 is None else [np.atleast_1d(np.asarray(x0, dtype=float))])
    inf = infimum(s)
    dirs = _directions(f, directions)
    cur = s.index_of(x0) if x0 is not None else int(np.argmin(s.lower + s.upper))
    report = StationaryReport(inf, tol=tol)
    for e in eps:
        ok = (s.lower <= inf.lo + e) & (s.upper <= inf.hi + e)
        if not ok[cur]:
            d = s.dist_row(cur)
            d = np.where(ok, d, np.inf)
            cur = int(np.argmin(d))
        start = cur
        cert = ekeland_descent(s, float(e), start)
        cur = cert.index
        x = s.points[cur]
        ders = []
        for h in dirs:
            g = gateaux(f, x, h)
            ders.append(DirectionReport(h.tolist(), g.value, g.converged, contains_zero(g.value)))
        steep = Interval(-e, -e)
        report.steps.append(StationaryStep(
            float(e), s.points[start].tolist(), x.tolist(), s.value(cur), ders,
            all(not less(d.value, steep) for d in ders),
            [d.contains_zero or hausdorff(d.value, ZERO) <= tol for d in ders],
        ))
    last = report.steps[-1]
    report.approaches_infimum = hausdorff(last.value, inf) <= tol
    report.derivatives_vanish = all(last.disjunction)
    return report


@dataclass
class PSReport:
    """Heuristic Palais–Smale probe; ``passed`` only means no counterexample was seen."""

    bounded: bool
    derivative_small: bool
    cluster: list | None
    passed: bool
    vacuous: bool
    heuristic: bool = True

    def to_json(self) -> dict:
        return {"bounded": self.bounded, "derivative_small": self.derivative_small,
                "cluster": self.cluster, "passed": self.passed, "vacuous": self.vacuous,
                "verdict": ("HEURISTIC-PASS" if self.passed else "FAIL"), "heuristic": True}


def palais_smale_probe(f: IntervalFn, sequence, C: Interval | None = None, tol: float = 1e-3,
                       directions=None, deriv_tol: float = 1e-2, value_tol: float = 1e-2,
                       bound: float = 1e6) -> PSReport:
    """Probe the Palais–Smale condition along one finite sequence.

    (i) values ≼-bounded (every endpoint within ``bound`` in absolute value), or
    with ``C`` given, tail values within ``value_tol`` of ``C``; (ii) on the
    tail, each direction's derivative contains 0 or is within ``deriv_tol`` of
    [0, 0]; (iii) some pair in the tail lies within ``tol``. The tail is the
    second half of the sequence. The probe fails only when (i) and (ii) hold
    and (iii) does not.
    """
    pts = np.asarray(sequence, dtype=float)
    if pts.size == 0:
        return PSReport(True, True, None, True, True)
    if pts.ndim == 1:
        pts = pts[:, None]
    lo, hi = f.values(pts)
    tail = pts[pts.shape[0] // 2:]
    tlo, thi = lo[pts.shape[0] // 2:], hi[pts.shape[0] // 2:]
    if C is None:
        bounded = bool(np.all(np.abs(lo) <= bound) and np.all(np.abs(hi) <= bound))
    else:
        gaps = np.maximum(np.abs(tlo - C.lo), np.abs(thi - C.hi))
        bounded = bool(np.all(gaps <= value_tol))
    dirs = _directions(f, directions)
    small = True
    for x in tail:
        for h in dirs:
            v = gateaux(f, x, h).value
            if not (contains_zero(v) or hausdorff(v, ZERO) <= deriv_tol):
                small = False
                break
        if not small:
            break
    cluster = None
    if tail.shape[0] >= 2:
        pairs = cKDTree(tail).query_pairs(tol, output_type="ndarray")
        if len(pairs):
            i, j = sorted(pairs.tolist())[0]
            off = pts.shape[0] // 2
            cluster = [i + off, j + off]
    premises = bounded and small
    return PSReport(bounded, small, cluster, passed=(not premises) or cluster is not None,
                    vacuous=not premises)
