"""Numerical gH-Gâteaux derivatives, generalized derivatives of interval curves
and Aumann integrals.

All limits are approximated on the geometric step schedule
``t_k = 1e-2 * 2**-k`` (k = 0..20). Successive quotients are compared in the
Hausdorff metric; the reported value is the endpointwise Richardson
extrapolation ``2 Q(t_{k+1}) - Q(t_k)`` of the last two quotients, which removes
the first-order truncation term of a one-sided quotient.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import simpson

from .errors import ProblemError
from .expr import Expr, as_expr
from .interval import Interval, gh_diff, hausdorff, hukuhara_diff, scalar_mul
from .ivfunc import Box, IntervalFn

__all__ = [
    "STEP_SCHEDULE",
    "GHDerivative",
    "NonExistent",
    "IntervalCurve",
    "gateaux",
    "linearity_defect",
    "generalized_derivative",
    "aumann_integral",
]

STEP_SCHEDULE = 1e-2 * 2.0 ** -np.arange(21)
DERIV_TOL = 1e-6


@dataclass
class GHDerivative:
    value: Interval
    t_sequence: list
    converged: bool
    residual: float

    def to_json(self) -> dict:
        return {
            "value": self.value.to_json(),
            "t_sequence": [float(t) for t in self.t_sequence],
            "converged": self.converged,
            "residual": self.residual,
        }


@dataclass(frozen=True)
class NonExistent:
    """A derivative (or Hukuhara difference) that does not exist; ``reason`` says why."""

    reason: str

    def __bool__(self) -> bool:
        return False


def _richardson(q0: Interval, q1: Interval) -> Interval:
    lo = 2.0 * q1.lo - q0.lo
    hi = 2.0 * q1.hi - q0.hi
    return Interval(min(lo, hi), max(lo, hi))


def _limit(quotients: list[Interval], steps, tol: float) -> GHDerivative:
    residual = float("inf")
    for k in range(1, len(quotients)):
        residual = hausdorff(quotients[k - 1], quotients[k])
        if residual <= tol:
            return GHDerivative(_richardson(quotients[k - 1], quotients[k]),
                                [float(s) for s in steps[: k + 1]], True, residual)
    value = _richardson(quotients[-2], quotients[-1]) if len(quotients) > 1 else quotients[-1]
    return GHDerivative(value, [float(s) for s in steps[: len(quotients)]], False, residual)


def gateaux(f: IntervalFn, x, h, tol: float = DERIV_TOL, steps=STEP_SCHEDULE) -> GHDerivative:
    """Directional gH-derivative ``f'(x)(h)`` as the limit of
    ``(1/t) (f(x + t h) ⊖gH f(x))`` for ``t -> 0+``.

    Non-convergence is reported through ``converged=False``. The endpoint
    functions are evaluated at ``x + t h`` even if that leaves a box domain.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    h = np.atleast_1d(np.asarray(h, dtype=float))
    if x.shape != h.shape:
        raise ProblemError(f"point and direction have different shapes {x.shape} and {h.shape}")
    if isinstance(f.domain, Box) and not f.domain.contains(x):
        raise ProblemError("derivative requested outside the box domain", witness=x.tolist())
    steps = np.asarray(steps, dtype=float)
    pts = np.vstack([x[None, :], x[None, :] + steps[:, None] * h[None, :]])
    lo, hi = f.values(pts)
    base = Interval(lo[0], hi[0])
    quotients = [
        scalar_mul(1.0 / t, gh_diff(Interval(lo[k + 1], hi[k + 1]), base))
        for k, t in enumerate(steps)
    ]
    return _limit(quotients, steps, tol)


def linearity_defect(f: IntervalFn, x, h, lambdas=(0.5, 2.0, 3.0), tol: float = DERIV_TOL) -> float:
    """Largest ``d_H(f'(x)(λh), λ f'(x)(h))`` over the given positive scalars.

    A spot check of positive homogeneity only; additivity is not tested.
    """
    h = np.atleast_1d(np.asarray(h, dtype=float))
    base = gateaux(f, x, h, tol).value
    worst = 0.0
    for lam in lambdas:
        if lam <= 0:
            raise ValueError("homogeneity is only required for positive scalars")
        worst = max(worst, hausdorff(gateaux(f, x, lam * h, tol).value, scalar_mul(lam, base)))
    return worst


class IntervalCurve:
    """An interval-valued function of one real variable ``t`` on ``t_range``."""

    def __init__(self, lower, upper, t_range=(0.0, 1.0), variable: str = "t"):
        self.variable = variable
        self.t_range = (float(t_range[0]), float(t_range[1]))
        if not self.t_range[0] < self.t_range[1]:
            raise ProblemError("t_range must be a nonempty interval")
        self.lower = self._endpoint(lower)
        self.upper = self._endpoint(upper)

    def _endpoint(self, ep):
        if callable(ep) and not isinstance(ep, Expr):
            return ep
        return as_expr(ep, [self.variable])

    @classmethod
    def from_callable(cls, func: Callable, t_range=(0.0, 1.0)) -> "IntervalCurve":
        return cls(lambda t: func(t).lo, lambda t: func(t).hi, t_range)

    def _eval(self, ep, ts: np.ndarray) -> np.ndarray:
        if isinstance(ep, Expr):
            return ep.eval_array({self.variable: ts}, size=ts.size)
        return np.array([float(ep(float(t))) for t in ts])

    def values(self, ts) -> tuple[np.ndarray, np.ndarray]:
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        lo = self._eval(self.lower, ts)
        hi = self._eval(self.upper, ts)
        bad = lo > hi + 1e-12
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise ProblemError("curve endpoints inverted", witness=float(ts[k]))
        return lo, np.maximum(lo, hi)

    def __call__(self, t) -> Interval:
        lo, hi = self.values([t])
        return Interval(lo[0], hi[0])


def _hukuhara_tol(*ivs: Interval) -> float:
    scale = max(1.0, *(max(abs(a.lo), abs(a.hi)) for a in ivs))
    return 1e-12 * scale


def generalized_derivative(c: IntervalCurve, t0: float, mode: str = "i",
                           tol: float = DERIV_TOL, steps=STEP_SCHEDULE) -> Interval | NonExistent:
    """Generalized derivative of an interval curve at ``t0`` in mode ``"i"`` or ``"ii"``.

    Mode (i) takes ``h > 0``, mode (ii) takes ``h < 0``. For each ``h`` both
    ``c(t0+h) ⊖H c(t0)`` and ``c(t0) ⊖H c(t0-h)`` must exist; the two quotient
    families, divided by ``h``, must converge to the same interval.
    """
    if mode not in ("i", "ii"):
        raise ValueError(f"mode must be 'i' or 'ii', got {mode!r}")
    a, b = c.t_range
    if not a < t0 < b:
        raise ProblemError("t0 must be interior to the curve's range", witness=t0)
    sign = 1.0 if mode == "i" else -1.0
    steps = np.asarray(steps, dtype=float)
    steps = steps[steps < min(t0 - a, b - t0)]
    if steps.size < 2:
        raise ProblemError("t0 is too close to the end of the range for the step schedule", witness=t0)
    hs = sign * steps
    lo, hi = c.values(np.concatenate([[t0], t0 + hs, t0 - hs]))
    n = hs.size
    mid = Interval(lo[0], hi[0])
    fwd, bwd = [], []
    for k, hk in enumerate(hs):
        plus = Interval(lo[1 + k], hi[1 + k])
        minus = Interval(lo[1 + n + k], hi[1 + n + k])
        d1 = hukuhara_diff(plus, mid, _hukuhara_tol(plus, mid))
        if d1 is None:
            return NonExistent(f"c(t0+h) ⊖H c(t0) does not exist for h={hk:g}")
        d2 = hukuhara_diff(mid, minus, _hukuhara_tol(mid, minus))
        if d2 is None:
            return NonExistent(f"c(t0) ⊖H c(t0-h) does not exist for h={hk:g}")
        fwd.append(scalar_mul(1.0 / hk, d1))
        bwd.append(scalar_mul(1.0 / hk, d2))
    lf = _limit(fwd, steps, tol)
    lb = _limit(bwd, steps, tol)
    if not (lf.converged and lb.converged):
        return NonExistent("difference quotients did not converge")
    gap = hausdorff(lf.value, lb.value)
    if gap > 10 * tol:
        return NonExistent(f"one-sided limits disagree (d_H = {gap:.3g})")
    return Interval(0.5 * (lf.value.lo + lb.value.lo), 0.5 * (lf.value.hi + lb.value.hi))


def aumann_integral(c: IntervalCurve, a: float, b: float, n_panels: int = 1024) -> Interval:
    """``∫_a^b c(t) dt`` as the interval of the endpoint integrals (composite Simpson)."""
    if a > b:
        raise ProblemError("integration bounds must satisfy a <= b", witness=[a, b])
    if n_panels < 2:
        raise ProblemError("n_panels must be at least 2")
    if a == b:
        return Interval(0.0, 0.0)
    n_panels += n_panels % 2
    ts = np.linspace(a, b, n_panels + 1)
    lo, hi = c.values(ts)
    i_lo = float(simpson(lo, x=ts))
    i_hi = float(simpson(hi, x=ts))
    if i_lo > i_hi + 1e-12 * max(1.0, abs(i_hi)):
        raise ProblemError("integrated endpoints are inverted", witness=[i_lo, i_hi])
    return Interval(i_lo, max(i_lo, i_hi))
