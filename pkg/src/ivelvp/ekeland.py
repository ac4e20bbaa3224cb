"""Ekeland-type ε-descent for interval-valued functions, with certificates.

Everything here works on a finite evaluated set (a :class:`~ivelvp.ivfunc.Sample`):
all points of a finite metric space, or the grid of a box. The descent is

    S(x) = {y : f(y) + [ε d(x, y), ε d(x, y)] ≼ f(x)}
    x_{n+1} = argmin_{y in S(x_n)} f_lo(y) + f_hi(y)    (lowest index on ties)

stopping when S(x_n) = {x_n}. Each step lowers f_lo + f_hi by at least
2 ε d(x_n, x_{n+1}), so the loop terminates on a finite set. The returned
point is then re-checked against every evaluated point.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import HypothesisViolation, InternalError, ProblemError, SolverError
from .expr import as_expr
from .interval import Interval
from .ivfunc import FinitePoints, IntervalFn, Sample, minimal_mask, point_env, variable_names

__all__ = [
    "EkelandCertificate",
    "ekeland_descent",
    "ekeland_minimize",
    "check_ekeland_point",
    "ekeland_points",
    "Bifunction",
    "TriangleReport",
    "BifunctionResult",
    "check_triangle",
    "ekeland_bifunction",
    "CaristiResult",
    "caristi_fixed_point",
    "TakahashiResult",
    "takahashi_minimize",
]

MAX_ITER = 100_000
# rounding slack for the ≼ tests inside the descent and the checkers
ORDER_TOL = 1e-12


def _slack(*arrays) -> float:
    scale = max([1.0] + [float(np.max(np.abs(a))) for a in arrays if np.size(a)])
    return ORDER_TOL * scale


@dataclass
class EkelandCertificate:
    """The descent's output plus the brute-force verdicts on the evaluated set.

    ``cond_b`` is ``None`` when x0 does not satisfy both ε-approximate
    minimality premises; (b) is then not a claim of the theorem.
    ``strict_c_witness`` checks the ⊀ form of (c) over every point including
    ``x_bar`` itself.
    """

    x_bar: object
    index: int
    epsilon: float
    x0: object
    x0_index: int
    value: Interval
    cond_a: bool
    cond_b: bool | None
    premise: bool
    cond_c_witness: object | None
    strict_c_witness: object | None
    near_infimum: bool
    verified_over: str
    trace: list = field(default_factory=list)

    @property
    def verified(self) -> bool:
        return (self.cond_a and self.cond_b is not False and self.cond_c_witness is None
                and self.strict_c_witness is None)

    def to_json(self) -> dict:
        return {
            "x_bar": self.x_bar,
            "index": self.index,
            "value": self.value.to_json(),
            "epsilon": self.epsilon,
            "x0": self.x0,
            "x0_index": self.x0_index,
            "premise": self.premise,
            "cond_a": self.cond_a,
            "cond_b": self.cond_b,
            "cond_c_witness": self.cond_c_witness,
            "strict_c_witness": self.strict_c_witness,
            "near_infimum": self.near_infimum,
            "verified": self.verified,
            "verified_over": self.verified_over,
            "iterations": len(self.trace) - 1,
            "trace": self.trace,
        }


def _premise(s: Sample, i0: int, eps: float) -> bool:
    tol = _slack(s.lower, s.upper)
    return bool(s.lower[i0] <= s.lower.min() + eps + tol and s.upper[i0] <= s.upper.min() + eps + tol)


def check_ekeland_point(s: Sample, eps: float, i0: int, j: int) -> dict:
    """Exhaustively test conclusions (a), (b), (c) for candidate ``j`` from ``i0``.

    Returns a dict with ``cond_a``, ``premise``, ``cond_b`` (``None`` without
    the premise), ``cond_c_witness`` and ``strict_c_witness`` (indices or None).
    """
    tol = _slack(s.lower, s.upper)
    lo, hi = s.lower, s.upper
    cond_a = bool(lo[j] <= lo[i0] + tol and hi[j] <= hi[i0] + tol)
    premise = _premise(s, i0, eps)
    cond_b = bool(s.distance(i0, j) <= 1.0 + 1e-12) if premise else None
    shift = eps * s.dist_row(j)
    weak = (lo + shift <= lo[j] - tol) & (hi + shift <= hi[j] - tol)
    weak[j] = False
    strict = (lo + shift < lo[j] - tol) & (hi + shift < hi[j] - tol)
    hits = np.flatnonzero(weak)
    strict_hits = np.flatnonzero(strict)
    return {
        "cond_a": cond_a,
        "premise": premise,
        "cond_b": cond_b,
        "cond_c_witness": int(hits[0]) if hits.size else None,
        "strict_c_witness": int(strict_hits[0]) if strict_hits.size else None,
    }


def ekeland_points(s: Sample, eps: float, i0: int) -> np.ndarray:
    """All indices satisfying (a), (b) when applicable, and (c): the brute-force oracle."""
    out = []
    for j in range(len(s)):
        v = check_ekeland_point(s, eps, i0, j)
        if v["cond_a"] and v["cond_b"] is not False and v["cond_c_witness"] is None:
            out.append(j)
    return np.array(out, dtype=int)


def ekeland_descent(s: Sample, eps: float, i0: int, max_iter: int = MAX_ITER) -> EkelandCertificate:
    """Run the ε-descent on an evaluated set from index ``i0`` and certify the result."""
    if not eps > 0:
        raise ProblemError(f"epsilon must be positive, got {eps}")
    if not 0 <= i0 < len(s):
        raise ProblemError("starting index outside the evaluated set", witness=i0)
    lo, hi = s.lower, s.upper
    tol = _slack(lo, hi)
    total = lo + hi
    mask = np.ones(len(s), dtype=bool)
    x = i0
    trace = [x]
    for _ in range(max_iter):
        shift = eps * s.dist_row(x)
        mask &= (lo + shift <= lo[x] + tol) & (hi + shift <= hi[x] + tol)
        # members other than x that do not lower f_lo + f_hi only pass through the
        # rounding slack; requiring a strict decrease keeps the loop finite
        cand = np.flatnonzero(mask & (total < total[x]))
        if cand.size == 0:
            break
        x = int(cand[np.argmin(total[cand])])
        trace.append(x)
    else:
        raise SolverError("descent did not terminate within the iteration cap", witness=trace[-20:])

    v = check_ekeland_point(s, eps, i0, x)
    near = bool(lo[x] <= lo.min() + eps + tol and hi[x] <= hi.min() + eps + tol)
    return EkelandCertificate(
        x_bar=s.label(x),
        index=x,
        epsilon=float(eps),
        x0=s.label(i0),
        x0_index=i0,
        value=s.value(x),
        cond_a=v["cond_a"],
        cond_b=v["cond_b"],
        premise=v["premise"],
        cond_c_witness=None if v["cond_c_witness"] is None else s.label(v["cond_c_witness"]),
        strict_c_witness=None if v["strict_c_witness"] is None else s.label(v["strict_c_witness"]),
        near_infimum=near,
        verified_over=s.description,
        trace=[s.label(i) for i in trace],
    )


def _start_index(f: IntervalFn, x0, index: int | None) -> tuple[Sample, int]:
    if index is not None:
        s = f.sample()
        return s, int(index)
    if x0 is None:
        raise ProblemError("a starting point x0 (or its index) is required")
    if isinstance(f.domain, FinitePoints):
        s = f.sample()
        i0 = s.index_of(x0)
        if i0 is None and f.domain.labels is not None and str(x0) in f.domain.labels:
            i0 = f.domain.labels.index(str(x0))
        if i0 is None:
            raise ProblemError("x0 is not a point of the finite space", witness=x0)
        return s, i0
    if not f.domain.contains(x0):
        raise ProblemError("x0 lies outside the box", witness=np.atleast_1d(x0).tolist())
    s = f.sample(extra=[np.atleast_1d(np.asarray(x0, dtype=float))])
    return s, s.index_of(x0)


def ekeland_minimize(f: IntervalFn, epsilon: float, x0=None, *, index: int | None = None,
                     max_iter: int = MAX_ITER) -> EkelandCertificate:
    """ε-descent from ``x0`` over the function's domain.

    On a box, ``x0`` is added to the grid if it is not a grid point.
    """
    if not epsilon > 0:
        raise ProblemError(f"epsilon must be positive, got {epsilon}")
    s, i0 = _start_index(f, x0, index)
    cert = ekeland_descent(s, epsilon, i0, max_iter)
    if isinstance(f.domain, FinitePoints) and not cert.verified:
        raise InternalError("descent result fails its own certificate on a finite space",
                            witness=cert.to_json())
    return cert


class Bifunction:
    """An interval bifunction ``F(x, y)`` tabulated over a finite evaluated set.

    ``lower[i, j]`` and ``upper[i, j]`` hold ``F(x_i, x_j)``.
    """

    def __init__(self, lower, upper, points=None, dist=None, labels=None, description: str = ""):
        self.lower = np.asarray(lower, dtype=float)
        self.upper = np.asarray(upper, dtype=float)
        n = self.lower.shape[0]
        if self.lower.shape != (n, n) or self.upper.shape != (n, n):
            raise ProblemError("bifunction tables must be square and of equal shape")
        bad = self.lower > self.upper + _slack(self.lower, self.upper)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise ProblemError("bifunction endpoints inverted", witness=[int(i), int(j)])
        self.upper = np.maximum(self.lower, self.upper)
        self.points = np.asarray(points, dtype=float) if points is not None else np.arange(n, dtype=float)[:, None]
        if self.points.ndim == 1:
            self.points = self.points[:, None]
        self.dist = dist
        self.labels = labels
        self.description = description or f"all {n} evaluated points"

    @classmethod
    def from_tables(cls, lower, upper, dist, labels=None, points=None, description: str = "") -> "Bifunction":
        return cls(lower, upper, points=points, dist=np.asarray(dist, dtype=float), labels=labels,
                   description=description)

    @classmethod
    def from_exprs(cls, lower, upper, domain) -> "Bifunction":
        """Endpoints as expressions in ``x1..xn`` and ``y1..yn`` (``x``, ``y`` in 1-D)."""
        names = variable_names(domain.dim, "x") + variable_names(domain.dim, "y")
        lo_e, hi_e = as_expr(lower, names), as_expr(upper, names)
        pts = domain.points()
        n = pts.shape[0]
        xi = np.repeat(pts, n, axis=0)
        yj = np.tile(pts, (n, 1))
        env = {**point_env(xi, "x"), **point_env(yj, "y")}
        lo = lo_e.eval_array(env, size=n * n).reshape(n, n)
        hi = hi_e.eval_array(env, size=n * n).reshape(n, n)
        if isinstance(domain, FinitePoints):
            return cls(lo, hi, points=pts, dist=domain.dist, labels=domain.labels)
        return cls(lo, hi, points=pts, description=f"{n}-point grid on {domain!r}")

    @classmethod
    def from_callable(cls, func, sample: Sample) -> "Bifunction":
        n = len(sample)
        lo = np.empty((n, n))
        hi = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                v = Interval.from_json(func(sample.points[i], sample.points[j]))
                lo[i, j], hi[i, j] = v.lo, v.hi
        return cls(lo, hi, points=sample.points, dist=sample.dist, labels=sample.labels,
                   description=sample.description)

    def __len__(self) -> int:
        return self.lower.shape[0]

    def row(self, i: int) -> Sample:
        """The function ``F(x_i, ·)`` as an evaluated set."""
        return Sample(self.points, self.lower[i], self.upper[i], dist=self.dist,
                      labels=self.labels, description=self.description)

    def distances_from(self, i: int) -> np.ndarray:
        return self.row(i).dist_row(i)

    def value(self, i: int, j: int) -> Interval:
        return Interval(self.lower[i, j], self.upper[i, j])


@dataclass
class TriangleReport:
    holds: bool
    exhaustive: bool
    checked: int
    witness: list | None = None


# above this many points the triangle property is sampled rather than enumerated
TRIANGLE_EXHAUSTIVE_MAX = 1000
TRIANGLE_SAMPLES = 10_000


def check_triangle(F: Bifunction, seed: int = 0) -> TriangleReport:
    """Test ``F(x, z) ≼ F(x, y) + F(y, z)``.

    All triples when there are at most 1000 points, otherwise 10^4 random
    triples plus every diagonal triple ``x = y = z``.
    """
    lo, hi = F.lower, F.upper
    n = len(F)
    tol = _slack(lo, hi)
    if n <= TRIANGLE_EXHAUSTIVE_MAX:
        for y in range(n):
            bad = (lo > lo[:, y][:, None] + lo[y, :][None, :] + tol) | (
                hi > hi[:, y][:, None] + hi[y, :][None, :] + tol)
            if bad.any():
                x, z = np.argwhere(bad)[0]
                return TriangleReport(False, True, (y + 1) * n * n, [int(x), y, int(z)])
        return TriangleReport(True, True, n**3)
    rng = np.random.default_rng(seed)
    diag = np.arange(n)
    xs = np.concatenate([diag, rng.integers(0, n, TRIANGLE_SAMPLES)])
    ys = np.concatenate([diag, rng.integers(0, n, TRIANGLE_SAMPLES)])
    zs = np.concatenate([diag, rng.integers(0, n, TRIANGLE_SAMPLES)])
    bad = (lo[xs, zs] > lo[xs, ys] + lo[ys, zs] + tol) | (hi[xs, zs] > hi[xs, ys] + hi[ys, zs] + tol)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        return TriangleReport(False, False, xs.size, [int(xs[k]), int(ys[k]), int(zs[k])])
    return TriangleReport(True, False, xs.size)


@dataclass
class BifunctionResult:
    """Outcome of the bifunction principle.

    ``cond_b_witness`` is a point ``x ≠ x̄`` with ``F(x̄, x) + [εd, εd] ≼ [0, 0]``;
    ``strict_witness`` a point (possibly ``x̄``) with the ≺ version.
    """

    x_bar: object
    index: int
    epsilon: float
    x0: object
    x0_index: int
    cond_a: bool
    cond_b_witness: object | None
    strict_witness: object | None
    triangle: TriangleReport
    heuristic: bool
    inner: EkelandCertificate
    verified_over: str

    @property
    def verified(self) -> bool:
        return self.cond_a and self.cond_b_witness is None and self.strict_witness is None

    def to_json(self) -> dict:
        return {
            "x_bar": self.x_bar,
            "index": self.index,
            "epsilon": self.epsilon,
            "x0": self.x0,
            "x0_index": self.x0_index,
            "cond_a": self.cond_a,
            "cond_b_witness": self.cond_b_witness,
            "strict_witness": self.strict_witness,
            "verified": self.verified,
            "heuristic": self.heuristic,
            "triangle": {"holds": self.triangle.holds, "exhaustive": self.triangle.exhaustive,
                         "checked": self.triangle.checked, "witness": self.triangle.witness},
            "verified_over": self.verified_over,
        }


def bifunction_violations(F: Bifunction, j: int, eps: float) -> tuple[int | None, int | None]:
    """First ``x ≠ x̄`` with ``F(x̄,x)+[εd,εd] ≼ [0,0]`` and first ``x`` with the ≺ version."""
    tol = _slack(F.lower, F.upper)
    shift = eps * F.distances_from(j)
    lo, hi = F.lower[j] + shift, F.upper[j] + shift
    weak = (lo <= -tol) & (hi <= -tol)
    weak[j] = False
    strict = (lo < -tol) & (hi < -tol)
    w, s = np.flatnonzero(weak), np.flatnonzero(strict)
    return (int(w[0]) if w.size else None), (int(s[0]) if s.size else None)


def ekeland_bifunction(F: Bifunction, epsilon: float, x0_index: int = 0,
                       require_triangle: bool = True, seed: int = 0) -> BifunctionResult:
    """Descent on ``F(x0, ·)`` followed by a check of (a) and (b) over all points.

    With ``require_triangle`` a failed triangle check raises
    :class:`HypothesisViolation`; otherwise the run continues and the result is
    marked heuristic.
    """
    if not epsilon > 0:
        raise ProblemError(f"epsilon must be positive, got {epsilon}")
    tri = check_triangle(F, seed)
    if not tri.holds and require_triangle:
        raise HypothesisViolation("triangle property F(x,z) ≼ F(x,y) + F(y,z) fails",
                                  witness=tri.witness)
    if tri.holds:
        diag_lo = np.diag(F.lower)
        diag_hi = np.diag(F.upper)
        tol = _slack(F.lower, F.upper)
        if np.any(diag_lo < -tol) or np.any(diag_hi < -tol):
            raise InternalError("accepted bifunction has F(x,x) below [0,0]",
                                witness=int(np.flatnonzero((diag_lo < -tol) | (diag_hi < -tol))[0]))
    row = F.row(x0_index)
    inner = ekeland_descent(row, epsilon, x0_index)
    j = inner.index
    tol = _slack(F.lower, F.upper)
    cond_a = bool(F.lower[x0_index, j] <= F.lower[x0_index, x0_index] + tol
                  and F.upper[x0_index, j] <= F.upper[x0_index, x0_index] + tol)
    w, s = bifunction_violations(F, j, epsilon)
    label = row.label
    result = BifunctionResult(
        x_bar=label(j), index=j, epsilon=float(epsilon), x0=label(x0_index), x0_index=x0_index,
        cond_a=cond_a,
        cond_b_witness=None if w is None else label(w),
        strict_witness=None if s is None else label(s),
        triangle=tri, heuristic=not (tri.holds and tri.exhaustive), inner=inner,
        verified_over=F.description,
    )
    if tri.holds and tri.exhaustive and not result.verified:
        raise InternalError("bifunction conclusion fails although the triangle property holds",
                            witness=result.to_json())
    return result


def _setvalued(T, n: int) -> list[list[int]]:
    if callable(T):
        T = [T(i) for i in range(n)]
    elif isinstance(T, dict):
        T = [T.get(i, T.get(str(i), [])) for i in range(n)]
    out = []
    for i, ys in enumerate(T):
        ys = [int(y) for y in np.atleast_1d(ys)]
        if any(not 0 <= y < n for y in ys):
            raise ProblemError("T maps outside the space", witness=i)
        out.append(ys)
    if len(out) != n:
        raise ProblemError("T must give an image for every point")
    return out


@dataclass
class CaristiResult:
    x_bar: object
    index: int
    certificate: EkelandCertificate
    pairs_checked: int

    def to_json(self) -> dict:
        return {"x_bar": self.x_bar, "index": self.index, "pairs_checked": self.pairs_checked,
                "certificate": self.certificate.to_json()}


def caristi_fixed_point(T, f: IntervalFn, x0_index: int = 0) -> CaristiResult:
    """Fixed point of a set-valued map ``T`` on a finite space under the Caristi condition.

    ``T`` is a list (or dict, or callable) giving the indices of ``T(x_i)``.
    The Caristi condition, ``f(y) + [d(x,y), d(x,y)] ≼ f(x)`` for every ``y ∈ T(x)``,
    is checked on every pair first.
    """
    if not isinstance(f.domain, FinitePoints):
        raise ProblemError("the fixed-point checker needs a finite metric space")
    s = f.sample()
    n = len(s)
    images = _setvalued(T, n)
    tol = _slack(s.lower, s.upper)
    pairs = 0
    for x, ys in enumerate(images):
        if not ys:
            raise HypothesisViolation("T(x) is empty", witness=s.label(x))
        for y in ys:
            pairs += 1
            d = s.distance(x, y)
            if not (s.lower[y] + d <= s.lower[x] + tol and s.upper[y] + d <= s.upper[x] + tol):
                raise HypothesisViolation("f(y) + [d(x,y), d(x,y)] ≼ f(x) fails",
                                          witness=[s.label(x), s.label(y)])
    cert = ekeland_descent(s, 1.0, x0_index)
    if cert.index not in images[cert.index]:
        raise InternalError("descent point is not fixed although the hypothesis holds",
                            witness=cert.x_bar)
    return CaristiResult(cert.x_bar, cert.index, cert, pairs)


@dataclass
class TakahashiResult:
    x_bar: object
    index: int
    minimal: list
    certificate: EkelandCertificate

    def to_json(self) -> dict:
        return {"x_bar": self.x_bar, "index": self.index, "minimal_solutions": self.minimal,
                "certificate": self.certificate.to_json()}


def takahashi_minimize(f: IntervalFn, x0_index: int = 0) -> TakahashiResult:
    """A minimal solution on a finite space, via the ε = 1 descent.

    Requires that every non-minimal ``x`` has some ``y ≠ x`` with
    ``f(y) + [d(x,y), d(x,y)] ≼ f(x)``; a point without one is reported.
    """
    if not isinstance(f.domain, FinitePoints):
        raise ProblemError("the minimization checker needs a finite metric space")
    s = f.sample()
    tol = _slack(s.lower, s.upper)
    minimal = minimal_mask(s.lower, s.upper)
    for x in np.flatnonzero(~minimal):
        d = s.dist_row(x)
        ok = (s.lower + d <= s.lower[x] + tol) & (s.upper + d <= s.upper[x] + tol)
        ok[x] = False
        if not ok.any():
            raise HypothesisViolation("non-minimal point has no admissible improving neighbour",
                                      witness=s.label(int(x)))
    cert = ekeland_descent(s, 1.0, x0_index)
    if not minimal[cert.index]:
        raise InternalError("descent point is not a minimal solution", witness=cert.x_bar)
    return TakahashiResult(cert.x_bar, cert.index, [s.label(int(i)) for i in np.flatnonzero(minimal)], cert)
