"""Interval initial value problems, trajectory costs and ε-minimal controls.

The interval state ``x = [xl, xu]`` is integrated through its endpoints with
classical fixed-step RK4. Dynamics and costs are endpoint expressions in
``t, xl, xu, u1..um`` (``u`` is an alias for ``u1`` when there is one control).

Mode ``"i"`` integrates ``xl' = f_lo, xu' = f_hi``. Mode ``"ii"`` crosses the
endpoints, ``xl' = f_hi, xu' = f_lo``, which is the endpoint form of
``x(t) = x0 ⊖H ∫ -f``; the width then shrinks and the trajectory is cut at
the first step where ``xl > xu``.

Controls are piecewise constant on ``K`` equal pieces of ``[0, T]``. The
integration grid always puts the piece boundaries on grid points, with an
even number of steps per piece.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import simpson

from .ekeland import EkelandCertificate, ekeland_descent
from .errors import HypothesisViolation, ProblemError
from .expr import Expr, as_expr, parse
from .interval import Interval, hausdorff
from .ivfunc import Sample

__all__ = [
    "IntervalIVP",
    "IntervalTrajectory",
    "CostFn",
    "ControlFamily",
    "LipschitzEstimate",
    "ControlResult",
    "solve_ivp",
    "solve_batch",
    "integral_residual",
    "lipschitz_estimate",
    "cost_functional",
    "batch_costs",
    "epsilon_minimal_control",
    "MAX_FAMILY",
]

MAX_FAMILY = 10_000
_CONTROL = re.compile(r"u(\d+)$")


def _control_count(*sources) -> int:
    m = 0
    for src in sources:
        if isinstance(src, str):
            src = parse(src)
        if isinstance(src, Expr):
            for name in src.variables():
                hit = _CONTROL.match(name)
                if hit:
                    m = max(m, int(hit.group(1)))
                elif name == "u":
                    m = max(m, 1)
    return m


def _variables(m: int) -> list[str]:
    names = ["t", "xl", "xu"] + [f"u{k + 1}" for k in range(m)]
    return names + (["u"] if m == 1 else [])


class _EndpointPair:
    """Lower/upper endpoint functions of ``(t, xl, xu, u)``, evaluated in batches.

    Each endpoint is an expression or a callable ``g(t, xl, xu, u)`` taking a
    scalar ``t``, arrays ``xl, xu`` of shape ``(B,)`` and ``u`` of shape
    ``(B, m)``.
    """

    def __init__(self, lower, upper, m: int | None):
        if m is None:
            m = _control_count(lower, upper)
        self.m = int(m)
        names = _variables(self.m)
        self.lower = lower if _is_native(lower) else as_expr(lower, names)
        self.upper = upper if _is_native(upper) else as_expr(upper, names)

    def _one(self, ep, t, xl, xu, u) -> np.ndarray:
        size = xl.shape[0]
        if not isinstance(ep, Expr):
            return np.broadcast_to(np.asarray(ep(t, xl, xu, u), dtype=float), (size,))
        env = {"t": t, "xl": xl, "xu": xu}
        for k in range(self.m):
            env[f"u{k + 1}"] = u[:, k]
        if self.m == 1:
            env["u"] = u[:, 0]
        return ep.eval_array(env, size=size)

    def __call__(self, t: float, xl, xu, u, what: str) -> tuple[np.ndarray, np.ndarray]:
        lo = self._one(self.lower, t, xl, xu, u)
        hi = self._one(self.upper, t, xl, xu, u)
        bad = lo > hi + 1e-12 * np.maximum(1.0, np.abs(hi))
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise ProblemError(f"{what} endpoints inverted", witness={
                "t": float(t), "x": [float(xl[k]), float(xu[k])], "u": u[k].tolist(),
                "value": [float(lo[k]), float(hi[k])]})
        return lo, hi

    def sources(self) -> list:
        return [str(e) if isinstance(e, Expr) else repr(e) for e in (self.lower, self.upper)]


def _is_native(ep) -> bool:
    return callable(ep) and not isinstance(ep, Expr)


class IntervalIVP:
    """``x' = f(t, x, u)``, ``x(0) = x0`` on ``[0, T]`` in mode ``"i"`` or ``"ii"``."""

    def __init__(self, lower, upper, x0: Interval, T: float, mode: str = "i",
                 step: float | None = None, controls: int | None = None):
        if mode not in ("i", "ii"):
            raise ProblemError(f"mode must be 'i' or 'ii', got {mode!r}")
        if not T > 0:
            raise ProblemError("horizon T must be positive", witness=T)
        if step is not None and not step > 0:
            raise ProblemError("step must be positive", witness=step)
        self.f = _EndpointPair(lower, upper, controls)
        self.x0 = x0 if isinstance(x0, Interval) else Interval.from_json(x0)
        self.T = float(T)
        self.mode = mode
        self.step = float(step) if step is not None else self.T / 1000

    @property
    def m(self) -> int:
        return self.f.m

    def grid(self, K: int) -> tuple[np.ndarray, int]:
        """Grid times and steps per piece; the step never exceeds ``self.step``."""
        n = int(np.ceil(self.T / (K * self.step) - 1e-9))
        n = max(2, n + n % 2)
        return np.linspace(0.0, self.T, K * n + 1), n


def _as_controls(u, m: int) -> np.ndarray:
    """Coerce a control (or a batch of them) to shape ``(B, K, m)``."""
    if u is None:
        if m:
            raise ProblemError(f"a control with {m} components is required")
        return np.zeros((1, 1, 0))
    U = np.asarray(u, dtype=float)
    if m == 0:
        raise ProblemError("the dynamics do not use a control")
    if U.ndim == 0:
        U = U.reshape(1, 1, 1)
    elif U.ndim == 1:
        U = U.reshape(1, -1, 1) if m == 1 else U.reshape(1, 1, -1)
    elif U.ndim == 2:
        U = U[None]
    if U.ndim != 3 or U.shape[2] != m or U.shape[1] < 1:
        raise ProblemError(f"control must have shape (K, {m}), got {np.shape(u)}")
    if not np.all(np.isfinite(U)):
        raise ProblemError("control values must be finite")
    return U


@dataclass
class IntervalTrajectory:
    times: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    mode: str
    valid_until: float
    T: float
    step: float

    @property
    def complete(self) -> bool:
        return self.valid_until >= self.T

    def state(self, k: int) -> Interval:
        return Interval(self.lower[k], self.upper[k])

    def to_json(self) -> dict:
        return {"mode": self.mode, "T": self.T, "step": self.step, "valid_until": self.valid_until,
                "complete": self.complete, "times": self.times.tolist(),
                "states": [[float(a), float(b)] for a, b in zip(self.lower, self.upper)]}

    def rows(self) -> list[list[float]]:
        return [[float(t), float(a), float(b)] for t, a, b in zip(self.times, self.lower, self.upper)]


def _integrate(p: IntervalIVP, U: np.ndarray, x0=None):
    """RK4 over a batch; returns times, lower, upper (``NaN`` after truncation), valid_until."""
    B, K, _ = U.shape
    times, n = p.grid(K)
    h = times[1] - times[0]
    N = times.size - 1
    x0 = p.x0 if x0 is None else x0
    xl = np.full(B, x0.lo)
    xu = np.full(B, x0.hi)
    lower = np.full((B, N + 1), np.nan)
    upper = np.full((B, N + 1), np.nan)
    lower[:, 0], upper[:, 0] = xl, xu
    valid_until = np.full(B, p.T)
    alive = np.ones(B, dtype=bool)
    crossed = p.mode == "ii"

    def rhs(t, a, b, u):
        lo, hi = p.f(t, a, b, u, "dynamics")
        return (hi, lo) if crossed else (lo, hi)

    for k in range(N):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        t = times[k]
        u = U[idx, k // n]
        a, b = xl[idx], xu[idx]
        k1 = rhs(t, a, b, u)
        k2 = rhs(t + h / 2, a + h / 2 * k1[0], b + h / 2 * k1[1], u)
        k3 = rhs(t + h / 2, a + h / 2 * k2[0], b + h / 2 * k2[1], u)
        k4 = rhs(t + h, a + h * k3[0], b + h * k3[1], u)
        na = a + h / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        nb = b + h / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        if crossed:
            tol = 1e-12 * np.maximum(1.0, np.maximum(np.abs(na), np.abs(nb)))
            broken = na > nb + tol
            if broken.any():
                # linear interpolation of the width to its zero crossing
                w0 = b[broken] - a[broken]
                w1 = nb[broken] - na[broken]
                valid_until[idx[broken]] = t + h * np.clip(w0 / (w0 - w1), 0.0, 1.0)
                alive[idx[broken]] = False
                keep = ~broken
                idx, na, nb = idx[keep], na[keep], nb[keep]
        if not (np.all(np.isfinite(na)) and np.all(np.isfinite(nb))):
            raise ProblemError("trajectory blew up", witness={"t": float(t + h)})
        xl[idx], xu[idx] = na, nb
        lower[idx, k + 1], upper[idx, k + 1] = na, nb
    return times, lower, upper, valid_until


def solve_ivp(p: IntervalIVP, u=None, x0: Interval | None = None) -> IntervalTrajectory:
    """Integrate one control; a mode-(ii) trajectory stops at ``valid_until``."""
    U = _as_controls(u, p.m)
    if U.shape[0] != 1:
        raise ProblemError("solve_ivp takes a single control; use solve_batch")
    times, lower, upper, vu = _integrate(p, U, x0)
    keep = ~np.isnan(lower[0])
    return IntervalTrajectory(times[keep], lower[0, keep], upper[0, keep], p.mode, float(vu[0]),
                              p.T, float(times[1] - times[0]))


def solve_batch(p: IntervalIVP, controls) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """All trajectories for controls of shape ``(B, K, m)``: times, lower, upper, valid_until."""
    return _integrate(p, _as_controls(controls, p.m))


def integral_residual(p: IntervalIVP, u=None) -> float:
    """``max_t d_H(x(t), x0 + ∫_0^t f ds)`` at even grid points, mode (i) only.

    The integral is composite Simpson on the trajectory grid, so the residual
    measures the combined RK4 and quadrature error.
    """
    if p.mode != "i":
        raise ProblemError("the integral-equation residual is defined for mode (i)")
    U = _as_controls(u, p.m)
    times, lower, upper, _ = _integrate(p, U)
    _, n = p.grid(U.shape[1])
    h = times[1] - times[0]
    flo = np.empty(times.size)
    fhi = np.empty(times.size)
    for k, t in enumerate(times):
        piece = min(k // n, U.shape[1] - 1)
        lo, hi = p.f(t, lower[0, k:k + 1], upper[0, k:k + 1], U[0, piece][None], "dynamics")
        flo[k], fhi[k] = lo[0], hi[0]
    # piece boundaries carry the left piece's control on the left panel; Simpson
    # panels never straddle a boundary since n is even
    panels_lo = h / 3 * (flo[0:-2:2] + 4 * flo[1:-1:2] + flo[2::2])
    panels_hi = h / 3 * (fhi[0:-2:2] + 4 * fhi[1:-1:2] + fhi[2::2])
    for j in range(1, U.shape[1]):
        # the right end of the last panel of piece j-1 must use control j-1
        k = j * n
        lo, hi = p.f(times[k], lower[0, k:k + 1], upper[0, k:k + 1], U[0, j - 1][None], "dynamics")
        panel = k // 2 - 1
        panels_lo[panel] += h / 3 * (lo[0] - flo[k])
        panels_hi[panel] += h / 3 * (hi[0] - fhi[k])
    ilo = p.x0.lo + np.concatenate([[0.0], np.cumsum(panels_lo)])
    ihi = p.x0.hi + np.concatenate([[0.0], np.cumsum(panels_hi)])
    return float(np.max(np.maximum(np.abs(ilo - lower[0, ::2]), np.abs(ihi - upper[0, ::2]))))


@dataclass
class LipschitzEstimate:
    """Empirical lower bounds on the endpoint Lipschitz constants of the dynamics."""

    k1: float
    k2: float
    pairs: int
    seed: int

    def to_json(self) -> dict:
        return {"k1": self.k1, "k2": self.k2, "pairs": self.pairs, "seed": self.seed}


def lipschitz_estimate(p: IntervalIVP, region: dict | None = None, pairs: int = 2000,
                       seed: int = 0) -> LipschitzEstimate:
    """Maximize sampled ratios ``d_H(f1, f2) / d_H(x1, x2)`` and ``d_H(f1, f2) / ‖u1 - u2‖``.

    ``region`` has keys ``t`` and ``x`` (ranges) and ``u`` (one range per
    control component). Interval states are drawn as sorted pairs from the
    ``x`` range. Defaults: ``t`` in ``[0, T]``, ``x`` within one unit of
    ``x0``, controls in ``[-1, 1]``.
    """
    region = dict(region or {})
    t_rng = region.get("t", (0.0, p.T))
    x_rng = region.get("x", (p.x0.lo - 1.0, p.x0.hi + 1.0))
    u_rng = np.asarray(region.get("u", [(-1.0, 1.0)] * p.m), dtype=float).reshape(p.m, 2)
    for a, b in [t_rng, x_rng, *u_rng]:
        if not (np.isfinite(a) and np.isfinite(b) and a <= b):
            raise ProblemError("region bounds must be finite with lower <= upper", witness=[a, b])
    rng = np.random.default_rng(seed)
    ts = rng.uniform(*t_rng, pairs)

    def states():
        s = np.sort(rng.uniform(*x_rng, (pairs, 2)), axis=1)
        return s[:, 0], s[:, 1]

    def controls():
        return rng.uniform(u_rng[:, 0], u_rng[:, 1], (pairs, p.m))

    a1, b1 = states()
    a2, b2 = states()
    u1, u2 = controls(), controls()

    def values(a, b, u):
        lo = np.empty(pairs)
        hi = np.empty(pairs)
        for k in range(pairs):
            l, h = p.f(ts[k], a[k:k + 1], b[k:k + 1], u[k:k + 1], "dynamics")
            lo[k], hi[k] = l[0], h[0]
        return lo, hi

    f1 = values(a1, b1, u1)
    fx = values(a2, b2, u1)
    dx = np.maximum(np.abs(a1 - a2), np.abs(b1 - b2))
    df = np.maximum(np.abs(f1[0] - fx[0]), np.abs(f1[1] - fx[1]))
    ok = dx > 1e-12
    k1 = float(np.max(df[ok] / dx[ok])) if ok.any() else 0.0
    k2 = 0.0
    if p.m:
        fu = values(a1, b1, u2)
        du = np.linalg.norm(u1 - u2, axis=1)
        df = np.maximum(np.abs(f1[0] - fu[0]), np.abs(f1[1] - fu[1]))
        ok = du > 1e-12
        k2 = float(np.max(df[ok] / du[ok])) if ok.any() else 0.0
    return LipschitzEstimate(k1, k2, pairs, seed)


class CostFn:
    """Running cost ``L(t, x, u)`` given by endpoint expressions; must satisfy ``L ≽ [0, 0]``."""

    def __init__(self, lower, upper, controls: int | None = None):
        self.f = _EndpointPair(lower, upper, controls)


def _batch_costs(p: IntervalIVP, L: CostFn, U: np.ndarray, t_range=None):
    times, lower, upper, vu = _integrate(p, U)
    _, n = p.grid(U.shape[1])
    B, K, _ = U.shape
    complete = vu >= p.T
    lo = np.full(B, np.nan)
    hi = np.full(B, np.nan)
    if not complete.any():
        return lo, hi, vu
    a_idx, b_idx = _range_indices(times, t_range)
    rows = np.flatnonzero(complete)
    acc_lo = np.zeros(rows.size)
    acc_hi = np.zeros(rows.size)
    for j in range(K):
        s, e = max(j * n, a_idx), min((j + 1) * n, b_idx)
        if e <= s:
            continue
        seg_lo = np.empty((rows.size, e - s + 1))
        seg_hi = np.empty_like(seg_lo)
        u = U[rows, j]
        for c, k in enumerate(range(s, e + 1)):
            l, h = L.f(times[k], lower[rows, k], upper[rows, k], u, "cost")
            neg = l < 0
            if neg.any():
                r = int(np.flatnonzero(neg)[0])
                raise HypothesisViolation("running cost must satisfy L ≽ [0, 0]", witness={
                    "t": float(times[k]), "control": U[rows[r]].tolist(),
                    "value": [float(l[r]), float(h[r])]})
            seg_lo[:, c], seg_hi[:, c] = l, h
        acc_lo += simpson(seg_lo, x=times[s:e + 1], axis=1)
        acc_hi += simpson(seg_hi, x=times[s:e + 1], axis=1)
    lo[rows] = acc_lo
    hi[rows] = np.maximum(acc_lo, acc_hi)
    return lo, hi, vu


def _range_indices(times: np.ndarray, t_range) -> tuple[int, int]:
    if t_range is None:
        return 0, times.size - 1
    out = []
    for t in t_range:
        k = int(np.argmin(np.abs(times - t)))
        if abs(times[k] - t) > 1e-9 * max(1.0, times[-1]):
            raise ProblemError("integration bounds must be grid points", witness=float(t))
        out.append(k)
    if out[0] > out[1]:
        raise ProblemError("integration bounds must satisfy a <= b", witness=list(t_range))
    return out[0], out[1]


def cost_functional(p: IntervalIVP, u, L: CostFn, t_range=None) -> Interval:
    """``F(u) = [∫ L_lo, ∫ L_hi]`` along the trajectory (composite Simpson per control piece).

    ``t_range`` restricts the integral to ``[a, b]``; both must be grid points.
    """
    U = _as_controls(u, p.m)
    if U.shape[0] != 1:
        raise ProblemError("cost_functional takes a single control; use batch_costs")
    lo, hi, vu = _batch_costs(p, L, U, t_range)
    if vu[0] < p.T:
        raise ProblemError("trajectory ends before T; the Hukuhara difference stops existing",
                           witness={"valid_until": float(vu[0])})
    return Interval(lo[0], hi[0])


def batch_costs(p: IntervalIVP, controls, L: CostFn):
    """Costs for a batch: ``(lower, upper, valid_until)``; truncated rows are ``NaN``."""
    return _batch_costs(p, L, _as_controls(controls, p.m))


class ControlFamily:
    """Piecewise-constant controls with ``K`` pieces, each piece on a quantized box of ℝᵐ.

    Members are ordered lexicographically: piece 0 varies slowest, and within
    a piece the per-component grid is in ``itertools.product`` order.
    """

    def __init__(self, K: int, lower, upper, levels):
        self.K = int(K)
        self.lower = np.atleast_1d(np.asarray(lower, dtype=float))
        self.upper = np.atleast_1d(np.asarray(upper, dtype=float))
        self.m = self.lower.size
        lv = np.broadcast_to(np.atleast_1d(np.asarray(levels, dtype=int)), (self.m,))
        self.levels = tuple(int(v) for v in lv)
        if self.K < 1:
            raise ProblemError("K must be at least 1")
        if self.upper.shape != self.lower.shape or np.any(self.lower > self.upper):
            raise ProblemError("control box needs lower <= upper in every component")
        if any(v < 1 for v in self.levels):
            raise ProblemError("each component needs at least one level")
        if self.size > MAX_FAMILY:
            raise ProblemError(f"family has {self.size} members, more than {MAX_FAMILY}",
                               witness=self.size)

    @property
    def piece_values(self) -> np.ndarray:
        axes = [np.linspace(a, b, v) if v > 1 else np.array([0.5 * (a + b)])
                for a, b, v in zip(self.lower, self.upper, self.levels)]
        return np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, self.m)

    @property
    def size(self) -> int:
        return int(np.prod(self.levels, dtype=object) ** self.K)

    def controls(self) -> np.ndarray:
        vals = self.piece_values
        idx = np.array(list(itertools.product(range(len(vals)), repeat=self.K)), dtype=int)
        return vals[idx]

    def index_of(self, u) -> int:
        U = _as_controls(u, self.m)[0]
        if U.shape[0] != self.K:
            raise ProblemError(f"control has {U.shape[0]} pieces, the family has {self.K}")
        vals = self.piece_values
        q = len(vals)
        k = 0
        for piece in U:
            hit = np.flatnonzero(np.all(np.abs(vals - piece) <= 1e-12 * np.maximum(1.0, np.abs(vals)), axis=1))
            if hit.size == 0:
                raise ProblemError("control is not a member of the family", witness=U.tolist())
            k = k * q + int(hit[0])
        return k

    @staticmethod
    def sup_distance(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """``max_t ‖a(t) - b(t)‖``; arrays of shape ``(..., K, m)``."""
        return np.max(np.linalg.norm(a - b, axis=-1), axis=-1)

    def to_json(self) -> dict:
        return {"K": self.K, "lower": self.lower.tolist(), "upper": self.upper.tolist(),
                "levels": list(self.levels)}


@dataclass
class ControlResult:
    control: list
    index: int
    cost: Interval
    epsilon: float
    u0: list
    u0_index: int
    verified: bool
    improvement_witness: list | None
    certificate: EkelandCertificate
    family_size: int
    excluded: list = field(default_factory=list)

    def to_json(self) -> dict:
        cert = self.certificate.to_json()
        cert.pop("trace", None)
        return {
            "control": self.control, "index": self.index, "cost": self.cost.to_json(),
            "epsilon": self.epsilon, "u0": self.u0, "u0_index": self.u0_index,
            "verified": self.verified, "improvement_witness": self.improvement_witness,
            "family_size": self.family_size, "excluded": self.excluded,
            "descent_iterations": len(self.certificate.trace) - 1, "certificate": cert,
        }


def epsilon_minimal_control(p: IntervalIVP, L: CostFn, epsilon: float, family: ControlFamily,
                            u0) -> ControlResult:
    """ε-descent over the whole family under the sup-norm metric, then exhaustive verification.

    The returned control ``u_ε`` is checked against every admissible member:
    no ``u`` may satisfy ``F(u) + [ε‖u - u_ε‖, ε‖u - u_ε‖] ≺ F(u_ε)``. Members
    whose mode-(ii) trajectory ends before ``T`` are excluded and listed.
    """
    if not epsilon > 0:
        raise ProblemError("epsilon must be positive", witness=epsilon)
    if family.m != p.m:
        raise ProblemError(f"family controls have {family.m} components, the dynamics use {p.m}")
    i0 = family.index_of(u0)
    U = family.controls()
    lo, hi, vu = _batch_costs(p, L, U)
    ok = vu >= p.T
    excluded = [{"index": int(k), "control": U[k].tolist(), "valid_until": float(vu[k])}
                for k in np.flatnonzero(~ok)]
    if not ok[i0]:
        raise ProblemError("the starting control's trajectory ends before T",
                           witness={"valid_until": float(vu[i0])})
    members = np.flatnonzero(ok)
    V = U[members]
    pos0 = int(np.searchsorted(members, i0))

    def row(points, i):
        return ControlFamily.sup_distance(V, V[i])

    s = Sample(V.reshape(len(members), -1), lo[members], hi[members], labels=members.tolist(),
               description=f"{len(members)} admissible controls of a {family.size}-member family",
               row_metric=row)
    cert = ekeland_descent(s, float(epsilon), pos0)
    j = cert.index
    d = row(None, j)
    viol = np.flatnonzero((s.lower + epsilon * d < s.lower[j]) & (s.upper + epsilon * d < s.upper[j]))
    witness = None if viol.size == 0 else V[viol[0]].tolist()
    return ControlResult(
        control=V[j].tolist(), index=int(members[j]), cost=s.value(j), epsilon=float(epsilon),
        u0=U[i0].tolist(), u0_index=i0, verified=witness is None, improvement_witness=witness,
        certificate=cert, family_size=family.size, excluded=excluded,
    )
