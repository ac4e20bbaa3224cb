"""Minimax values over piecewise-linear paths for interval-valued functions.

The path space between ``p0`` and ``p1`` is replaced by polygonal paths with
``m`` free interior nodes. For a path ``l`` the value is
``Φ(l) = [max f_lo∘l, max f_hi∘l]`` taken over dense samples of ``l``; each
endpoint of ``Φ`` is minimized separately by coordinate descent with random
restarts. The result estimates the minimax level; it is not a certified
critical value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import HypothesisViolation, ProblemError
from .interval import Interval, less
from .ivfunc import Box, IntervalFn

__all__ = ["PathSpec", "MountainPassResult", "boundary_points", "boundary_infimum", "mountain_pass"]


@dataclass
class PathSpec:
    """A polygonal path ``p0 -> nodes[0] -> ... -> nodes[m-1] -> p1``."""

    p0: np.ndarray
    p1: np.ndarray
    nodes: np.ndarray
    samples_per_segment: int = 32
    max_spacing: float = 0.01

    def vertices(self) -> np.ndarray:
        return np.vstack([self.p0[None, :], self.nodes.reshape(-1, self.p0.size), self.p1[None, :]])

    def samples(self, omega: Box | None = None) -> np.ndarray:
        """Points along the path; segment crossings of ``∂omega`` are included exactly."""
        v = self.vertices()
        out = []
        for a, b in zip(v[:-1], v[1:]):
            length = float(np.linalg.norm(b - a))
            k = max(self.samples_per_segment, int(np.ceil(length / self.max_spacing)))
            ts = np.linspace(0.0, 1.0, k + 1)
            if omega is not None:
                ts = np.union1d(ts, _crossings(a, b, omega))
            out.append(a[None, :] + ts[:, None] * (b - a)[None, :])
        return np.vstack(out)


def _crossings(a: np.ndarray, b: np.ndarray, omega: Box) -> np.ndarray:
    ts = []
    for i in range(a.size):
        if a[i] == b[i]:
            continue
        for c in (omega.lower[i], omega.upper[i]):
            t = (c - a[i]) / (b[i] - a[i])
            if 0.0 <= t <= 1.0:
                p = a + t * (b - a)
                p[i] = c
                if omega.contains(p, tol=1e-12):
                    ts.append(t)
    return np.array(ts)


def boundary_points(omega: Box) -> np.ndarray:
    """Grid points on the faces of a box (the two end points in 1-D)."""
    if omega.dim == 1:
        return np.array([[omega.lower[0]], [omega.upper[0]]])
    pts = omega.points()
    on_face = np.any(np.isclose(pts, omega.lower) | np.isclose(pts, omega.upper), axis=1)
    return pts[on_face]


def boundary_infimum(f: IntervalFn, omega: Box) -> Interval:
    lo, hi = f.values(boundary_points(omega))
    return Interval(lo.min(), hi.min())


@dataclass
class MountainPassResult:
    C: Interval
    alpha: Interval
    f_p0: Interval
    f_p1: Interval
    argmax_lower: list
    argmax_upper: list
    nodes_lower: list
    nodes_upper: list
    paths_evaluated: int
    stabilized: bool
    alpha_bound_holds: bool
    restarts: int
    seed: int
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "C": self.C.to_json(), "alpha": self.alpha.to_json(),
            "f_p0": self.f_p0.to_json(), "f_p1": self.f_p1.to_json(),
            "argmax_lower": self.argmax_lower, "argmax_upper": self.argmax_upper,
            "nodes_lower": self.nodes_lower, "nodes_upper": self.nodes_upper,
            "paths_evaluated": self.paths_evaluated, "stabilized": self.stabilized,
            "alpha_bound_holds": self.alpha_bound_holds, "restarts": self.restarts,
            "seed": self.seed, "notes": self.notes,
        }


class _PathEvaluator:
    def __init__(self, f, p0, p1, omega, samples_per_segment, max_spacing):
        self.f, self.p0, self.p1, self.omega = f, p0, p1, omega
        self.sps, self.spacing = samples_per_segment, max_spacing
        self.count = 0
        self.min_lo = np.inf
        self.min_hi = np.inf

    def __call__(self, nodes: np.ndarray):
        path = PathSpec(self.p0, self.p1, nodes, self.sps, self.spacing)
        pts = path.samples(self.omega)
        lo, hi = self.f.values(pts)
        self.count += 1
        phi_lo, phi_hi = float(lo.max()), float(hi.max())
        self.min_lo = min(self.min_lo, phi_lo)
        self.min_hi = min(self.min_hi, phi_hi)
        return phi_lo, phi_hi, pts[int(np.argmax(lo))], pts[int(np.argmax(hi))]


def _coordinate_descent(evaluate, which: int, start: np.ndarray, step0: float, iters: int,
                        min_step: float = 1e-6):
    x = start.copy()
    best = evaluate(x)[which]
    step = step0
    for _ in range(iters):
        improved = False
        for k in range(x.size):
            for sgn in (1.0, -1.0):
                trial = x.copy()
                trial[k] += sgn * step
                val = evaluate(trial)[which]
                if val < best:
                    x, best, improved = trial, val, True
                    break
        if not improved:
            step *= 0.5
            if step < min_step:
                return x, best, True
    return x, best, False


def mountain_pass(f: IntervalFn, p0, p1, omega: Box, m: int = 8, iters: int = 200,
                  restarts: int = 5, seed: int = 0, samples_per_segment: int = 32,
                  max_spacing: float = 0.01) -> MountainPassResult:
    """Estimate ``C = [inf_l max f_lo∘l, inf_l max f_hi∘l]`` over polygonal paths.

    Requires ``p0`` inside the open box ``omega`` and ``p1`` outside its
    closure, and checks ``f(p0) ≺ α`` and ``f(p1) ≺ α`` where ``α`` is the
    componentwise infimum of ``f`` over the (gridded) boundary of ``omega``.
    Restart 0 starts from the straight segment; later restarts perturb it
    with seeded Gaussian noise.
    """
    p0 = np.atleast_1d(np.asarray(p0, dtype=float))
    p1 = np.atleast_1d(np.asarray(p1, dtype=float))
    if p0.size != omega.dim or p1.size != omega.dim:
        raise ProblemError("p0, p1 and omega must have the same dimension")
    if not omega.interior(p0):
        raise ProblemError("p0 must lie inside the open set omega", witness=p0.tolist())
    if omega.contains(p1):
        raise ProblemError("p1 must lie outside the closure of omega", witness=p1.tolist())
    if m < 1 or restarts < 1 or iters < 1:
        raise ProblemError("m, restarts and iters must be positive")
    alpha = boundary_infimum(f, omega)
    f0, f1 = f(p0), f(p1)
    for name, v in (("f(p0)", f0), ("f(p1)", f1)):
        if not less(v, alpha):
            raise HypothesisViolation(f"{name} ≺ alpha fails", witness={"value": v.to_json(),
                                                                        "alpha": alpha.to_json()})
    rng = np.random.default_rng(seed)
    line = p0[None, :] + np.linspace(0, 1, m + 2)[1:-1, None] * (p1 - p0)[None, :]
    scale = float(np.linalg.norm(p1 - p0))
    starts = [line.ravel()]
    for _ in range(restarts - 1):
        starts.append((line + rng.normal(0.0, 0.25 * scale, size=line.shape)).ravel())
    evaluate = _PathEvaluator(f, p0, p1, omega, samples_per_segment, max_spacing)
    step0 = scale / (2 * (m + 1))
    results = []
    stabilized = True
    for which in (0, 1):
        best = None
        for s in starts:
            x, val, stable = _coordinate_descent(evaluate, which, s, step0, iters)
            stabilized &= stable
            if best is None or val < best[1]:
                best = (x, val)
        results.append(best)
    (x_lo, c_lo), (x_hi, c_hi) = results
    # endpoints are minimized separately, so the pair can need a final reorder guard
    C = Interval(min(c_lo, c_hi), max(c_lo, c_hi))
    notes = []
    if c_lo > c_hi:
        notes.append("lower minimax exceeded upper minimax; endpoints were reordered")
    if not stabilized:
        notes.append("iteration budget exhausted before the step size collapsed")
    return MountainPassResult(
        C=C, alpha=alpha, f_p0=f0, f_p1=f1,
        argmax_lower=evaluate(x_lo)[2].tolist(), argmax_upper=evaluate(x_hi)[3].tolist(),
        nodes_lower=x_lo.reshape(m, -1).tolist(), nodes_upper=x_hi.reshape(m, -1).tolist(),
        paths_evaluated=evaluate.count, stabilized=stabilized,
        alpha_bound_holds=bool(evaluate.min_lo >= alpha.lo and evaluate.min_hi >= alpha.hi),
        restarts=restarts, seed=seed, notes=notes,
    )
