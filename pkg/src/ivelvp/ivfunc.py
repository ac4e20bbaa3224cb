"""Interval-valued functions over desk-scale metric spaces.

Two kinds of domain stand in for a complete metric space:

* :class:`FinitePoints` -- finitely many points with an explicit distance matrix.
  Everything computed over it is exact enumeration.
* :class:`Box` -- an axis-aligned box in R^n with the Euclidean metric, probed on
  a regular grid. Results over a box are statements about the grid only.

An :class:`IntervalFn` pairs a lower and an upper endpoint function. Solvers do
not work on the function directly but on a :class:`Sample`: the evaluated
point set together with both endpoint arrays and the metric.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ProblemError
from .expr import Expr, as_expr
from .interval import Interval, leq

__all__ = [
    "FinitePoints",
    "Box",
    "IntervalFn",
    "Sample",
    "InfimumReport",
    "LscReport",
    "eval_fn",
    "infimum",
    "lsc_probe",
    "minimal_solutions",
    "minimal_mask",
    "variable_names",
]

# endpoint inversion f_lo(x) <= f_hi(x) + INVERSION_TOL is accepted
INVERSION_TOL = 1e-12
ARGMIN_TOL = 1e-9


def variable_names(dim: int, prefix: str = "x") -> list[str]:
    """Names bound to the coordinates of a point: ``x1..xn`` and ``x`` when n == 1."""
    names = [f"{prefix}{i + 1}" for i in range(dim)]
    if dim == 1:
        names.append(prefix)
    return names


def point_env(points: np.ndarray, prefix: str = "x") -> dict:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    env = {f"{prefix}{i + 1}": points[:, i] for i in range(points.shape[1])}
    if points.shape[1] == 1:
        env[prefix] = points[:, 0]
    return env


class FinitePoints:
    """A finite metric space given by a distance matrix.

    ``coords`` are what endpoint expressions see as ``x1..xn``; they default to
    the point index. ``dist`` defaults to the Euclidean distance of ``coords``.
    """

    def __init__(self, dist=None, coords=None, labels=None, check: bool = True, tol: float = 1e-12):
        if dist is None and coords is None:
            raise ProblemError("FinitePoints needs a distance matrix or coordinates")
        if coords is not None:
            coords = np.asarray(coords, dtype=float)
            if coords.ndim == 1:
                coords = coords[:, None]
        if dist is None:
            diff = coords[:, None, :] - coords[None, :, :]
            dist = np.sqrt((diff**2).sum(axis=-1))
        dist = np.asarray(dist, dtype=float)
        n = dist.shape[0]
        if dist.shape != (n, n) or n == 0:
            raise ProblemError(f"distance matrix must be square and nonempty, got shape {dist.shape}")
        if coords is None:
            coords = np.arange(n, dtype=float)[:, None]
        if coords.shape[0] != n:
            raise ProblemError("coords and distance matrix disagree on the number of points")
        self.dist = dist
        self.coords = coords
        self.labels = list(labels) if labels is not None else [str(i) for i in range(n)]
        if len(self.labels) != n:
            raise ProblemError("labels and distance matrix disagree on the number of points")
        if check:
            self.check_metric(tol)

    @classmethod
    def from_coords(cls, coords, labels=None) -> "FinitePoints":
        return cls(coords=coords, labels=labels)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    def points(self) -> np.ndarray:
        return self.coords

    def check_metric(self, tol: float = 1e-12) -> None:
        d = self.dist
        if not np.all(np.isfinite(d)):
            raise ProblemError("distance matrix has non-finite entries")
        if np.any(d < 0):
            i, j = np.argwhere(d < 0)[0]
            raise ProblemError("negative distance", witness=[int(i), int(j)])
        if np.any(np.abs(np.diag(d)) > 0):
            i = int(np.flatnonzero(np.diag(d))[0])
            raise ProblemError("nonzero self-distance", witness=[i])
        asym = np.abs(d - d.T) > tol
        if asym.any():
            i, j = np.argwhere(asym)[0]
            raise ProblemError("distance matrix is not symmetric", witness=[int(i), int(j)])
        off = ~np.eye(self.n, dtype=bool)
        if np.any(d[off] <= 0):
            i, j = np.argwhere((d <= 0) & off)[0]
            raise ProblemError("distinct points at distance zero", witness=[int(i), int(j)])
        for k in range(self.n):
            bad = d > d[:, k][:, None] + d[k, :][None, :] + tol
            if bad.any():
                i, j = np.argwhere(bad)[0]
                raise ProblemError(
                    "triangle inequality fails", witness=[int(i), int(k), int(j)]
                )

    def __repr__(self) -> str:
        return f"FinitePoints(n={self.n})"


class Box:
    """Axis-aligned box ``lower <= x <= upper`` probed on a regular grid."""

    def __init__(self, lower, upper, grid_per_dim: int = 101):
        self.lower = np.atleast_1d(np.asarray(lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(upper, dtype=float))
        if self.lower.shape != self.upper.shape or self.lower.ndim != 1:
            raise ProblemError("box corners must be vectors of the same length")
        if not np.all(self.lower < self.upper):
            raise ProblemError("box lower corner must be strictly below the upper corner")
        if int(grid_per_dim) < 2:
            raise ProblemError("grid_per_dim must be at least 2")
        self.grid_per_dim = int(grid_per_dim)

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def spacing(self) -> np.ndarray:
        return (self.upper - self.lower) / (self.grid_per_dim - 1)

    def points(self) -> np.ndarray:
        """Grid points in lexicographic order (first coordinate slowest)."""
        axes = [np.linspace(lo, hi, self.grid_per_dim) for lo, hi in zip(self.lower, self.upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def interior(self, x) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return bool(np.all(x > self.lower) and np.all(x < self.upper))

    def __repr__(self) -> str:
        return f"Box({self.lower.tolist()}, {self.upper.tolist()}, grid_per_dim={self.grid_per_dim})"


@dataclass
class Sample:
    """Finitely many evaluated points of an interval function plus the metric.

    ``dist`` is the full distance matrix for finite spaces. Otherwise
    ``row_metric(points, i)`` gives the distances from point ``i``, and without
    either the Euclidean distance between ``points`` is used.
    """

    points: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    dist: np.ndarray | None = None
    labels: list | None = None
    description: str = ""
    row_metric: Callable | None = None

    def __len__(self) -> int:
        return self.lower.size

    def dist_row(self, i: int) -> np.ndarray:
        if self.dist is not None:
            return self.dist[i]
        if self.row_metric is not None:
            return self.row_metric(self.points, i)
        diff = self.points - self.points[i]
        return np.sqrt((diff**2).sum(axis=1))

    def distance(self, i: int, j: int) -> float:
        if self.dist is not None:
            return float(self.dist[i, j])
        if self.row_metric is not None:
            return float(self.row_metric(self.points, i)[j])
        return float(np.linalg.norm(self.points[i] - self.points[j]))

    def value(self, i: int) -> Interval:
        return Interval(self.lower[i], self.upper[i])

    def label(self, i: int):
        if self.labels is not None:
            return self.labels[i]
        p = self.points[i]
        return float(p[0]) if p.size == 1 else p.tolist()

    def index_of(self, x) -> int | None:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.size != self.points.shape[1]:
            return None
        hit = np.flatnonzero(np.all(self.points == x, axis=1))
        return int(hit[0]) if hit.size else None


Endpoint = Callable | Expr | str | float


class IntervalFn:
    """``f(x) = [lower(x), upper(x)]`` on a domain.

    Each endpoint may be an expression (source string or :class:`~ivelvp.expr.Expr`)
    in ``x1..xn`` (and ``x`` when n == 1), a Python callable taking a point
    vector, or -- on a :class:`FinitePoints` domain -- a table of values, one
    per point.
    """

    def __init__(self, lower, upper, domain: FinitePoints | Box | None = None, variables=None):
        self.domain = domain
        dim = domain.dim if domain is not None else None
        if variables is None and dim is not None:
            variables = variable_names(dim)
        self.variables = list(variables) if variables is not None else None
        self.lower = self._endpoint(lower)
        self.upper = self._endpoint(upper)

    @classmethod
    def from_callable(cls, func: Callable, domain=None) -> "IntervalFn":
        """Wrap a function returning an :class:`Interval` (or a ``(lo, hi)`` pair)."""
        fn = cls.__new__(cls)
        fn.domain = domain
        fn.variables = None
        fn.lower = lambda x: float(Interval.from_json(func(x)).lo)
        fn.upper = lambda x: float(Interval.from_json(func(x)).hi)
        return fn

    @classmethod
    def from_table(cls, values, domain: FinitePoints) -> "IntervalFn":
        values = np.asarray(values, dtype=float)
        return cls(values[:, 0], values[:, 1], domain)

    def _endpoint(self, ep):
        if isinstance(ep, (Expr, str)) or (isinstance(ep, (int, float)) and not isinstance(ep, bool)):
            return as_expr(ep, self.variables)
        if callable(ep):
            return ep
        table = np.asarray(ep, dtype=float)
        if table.ndim != 1 or not isinstance(self.domain, FinitePoints) or table.size != self.domain.n:
            raise ProblemError("tabulated endpoints need a FinitePoints domain and one value per point")
        return table

    def _endpoint_values(self, ep, points: np.ndarray) -> np.ndarray:
        if isinstance(ep, Expr):
            return ep.eval_array(point_env(points), size=points.shape[0])
        if isinstance(ep, np.ndarray):
            idx = [self._table_index(p) for p in points]
            return ep[idx]
        return np.array([float(ep(p if p.size > 1 else p[0])) for p in points])

    def _table_index(self, p) -> int:
        hit = np.flatnonzero(np.all(self.domain.coords == p, axis=1))
        if hit.size == 0:
            raise ProblemError("tabulated function evaluated outside its finite domain", witness=p.tolist())
        return int(hit[0])

    def values(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Endpoint arrays at ``points`` (shape ``(N, dim)``); checks ``lo <= hi``."""
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points[:, None] if self._dim_hint() == 1 else points[None, :]
        lo = np.asarray(self._endpoint_values(self.lower, points), dtype=float)
        hi = np.asarray(self._endpoint_values(self.upper, points), dtype=float)
        bad = lo > hi + INVERSION_TOL
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise ProblemError(
                f"lower endpoint {float(lo[k])!r} exceeds upper endpoint {float(hi[k])!r}",
                witness=points[k].tolist(),
            )
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ProblemError("endpoint function returned a non-finite value")
        return lo, np.maximum(hi, lo)

    def _dim_hint(self) -> int:
        return self.domain.dim if self.domain is not None else 1

    def __call__(self, x) -> Interval:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        lo, hi = self.values(x[None, :])
        return Interval(lo[0], hi[0])

    def sample(self, extra=None) -> Sample:
        """Evaluate on the whole domain (finite points or box grid).

        ``extra`` points (box domains only) are appended after the grid unless
        they coincide with a grid point.
        """
        dom = self.domain
        if dom is None:
            raise ProblemError("function has no domain to sample")
        pts = dom.points()
        if isinstance(dom, FinitePoints):
            lo, hi = self.values(pts)
            return Sample(pts, lo, hi, dist=dom.dist, labels=dom.labels,
                          description=f"all {dom.n} points of the finite space")
        desc = f"{pts.shape[0]}-point grid on {dom!r}"
        if extra is not None:
            extra = np.atleast_2d(np.asarray(extra, dtype=float))
            new = [e for e in extra if not np.any(np.all(pts == e, axis=1))]
            if new:
                pts = np.vstack([pts, np.array(new)])
                desc += f" plus {len(new)} extra point(s)"
        lo, hi = self.values(pts)
        return Sample(pts, lo, hi, description=desc)


def eval_fn(f: IntervalFn, x) -> Interval:
    return f(x)


@dataclass
class InfimumReport:
    value: Interval
    lower_argmin: np.ndarray
    upper_argmin: np.ndarray


def infimum(f: IntervalFn | Sample, return_minimizers: bool = False):
    """Componentwise infimum ``[inf lower, inf upper]`` over the evaluated points.

    With ``return_minimizers`` an :class:`InfimumReport` also lists every point
    whose endpoint value is within 1e-9 of the respective minimum.
    """
    s = f if isinstance(f, Sample) else f.sample()
    lo_min = float(s.lower.min())
    hi_min = float(s.upper.min())
    value = Interval(lo_min, hi_min)
    if not return_minimizers:
        return value
    return InfimumReport(
        value,
        s.points[s.lower <= lo_min + ARGMIN_TOL],
        s.points[s.upper <= hi_min + ARGMIN_TOL],
    )


@dataclass
class LscReport:
    """Outcome of :func:`lsc_probe`. A pass is only the absence of a counterexample."""

    passed: bool
    checked: int
    skipped: int
    failures: list = field(default_factory=list)
    heuristic: bool = True


def lsc_probe(f: IntervalFn, samples: Sequence, level: Interval | None = None,
              tol: float = 1e-9) -> LscReport:
    """Try to falsify ≼-lower semicontinuity along given convergent sequences.

    ``samples`` is a list of ``(terms, limit)`` pairs. A sequence is used when
    all its terms lie in the sublevel set ``{x : f(x) ≼ level}``; the probe
    fails if the limit point leaves that set. Without an explicit ``level``
    each sequence is tested against the smallest level that contains all of
    its terms.

    Only a finite prefix is seen, so a continuous ``f`` can sit slightly above
    every listed term at the limit. The allowance for that is
    ``2 L d(x_last, limit) + tol`` where ``L`` is the steepest endpoint secant
    slope between consecutive terms: it vanishes as the terms approach the
    limit, while a jump at the limit does not.
    """
    checked = skipped = 0
    failures = []
    for k, (terms, limit) in enumerate(samples):
        terms = np.asarray(terms, dtype=float)
        if terms.ndim == 1:
            terms = terms[:, None]
        lo, hi = f.values(terms)
        lvl = level if level is not None else Interval(lo.max(), hi.max())
        if not np.all((lo <= lvl.lo) & (hi <= lvl.hi)):
            skipped += 1
            continue
        checked += 1
        lim = np.atleast_1d(np.asarray(limit, dtype=float))
        slack = tol
        if terms.shape[0] >= 2:
            steps = np.linalg.norm(np.diff(terms, axis=0), axis=1)
            moved = np.maximum(np.abs(np.diff(lo)), np.abs(np.diff(hi)))
            ok = steps > 0
            slope = float(np.max(moved[ok] / steps[ok])) if ok.any() else 0.0
            slack += 2.0 * slope * float(np.linalg.norm(terms[-1] - lim))
        at_limit = f(lim)
        if not leq(at_limit, Interval(lvl.lo + slack, lvl.hi + slack)):
            failures.append({"sequence": k, "limit": lim.tolist(),
                             "value_at_limit": at_limit.to_json(), "level": lvl.to_json(),
                             "allowance": slack})
    return LscReport(not failures, checked, skipped, failures)


def minimal_mask(lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    """Boolean mask of points not strictly dominated (``f(y) ≺ f(x)``) by any other.

    O(N log N): after sorting by the lower endpoint, a point is dominated iff
    some point with a strictly smaller lower endpoint has a strictly smaller
    upper endpoint.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    order = np.argsort(lower, kind="stable")
    ls, hs = lower[order], upper[order]
    prefix_min = np.concatenate([[np.inf], np.minimum.accumulate(hs)])
    group_start = np.searchsorted(ls, ls, side="left")
    dominated_sorted = prefix_min[group_start] < hs
    mask = np.empty(lower.size, dtype=bool)
    mask[order] = ~dominated_sorted
    return mask


def minimal_solutions(f: IntervalFn | Sample) -> np.ndarray:
    """Indices (into the sampled points) of all minimal solutions."""
    s = f if isinstance(f, Sample) else f.sample()
    return np.flatnonzero(minimal_mask(s.lower, s.upper))
