"""Noncooperative games with interval-valued losses over finite strategy sets.

Profiles are enumerated in ``itertools.product`` order, so profile ``k`` is
``np.unravel_index(k, sizes)``. Everything below is exhaustive enumeration.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ekeland import Bifunction, TriangleReport, bifunction_violations, ekeland_bifunction
from .errors import InternalError, ProblemError, SolverError
from .interval import Interval, gh_diff
from .ivfunc import FinitePoints

__all__ = [
    "IntervalGame",
    "aggregate_bifunction",
    "aggregate_tables",
    "verify_epsilon_nash",
    "epsilon_nash_mask",
    "bifunction_premise",
    "NashResult",
    "find_epsilon_nash",
    "random_game",
]


class IntervalGame:
    """``n`` players, finite metric strategy spaces, interval losses per profile.

    ``losses[i]`` has shape ``(*sizes, 2)`` holding ``[lo, hi]`` of player
    ``i``'s loss at each profile.
    """

    def __init__(self, strategy_sets: list[FinitePoints], losses):
        self.strategy_sets = list(strategy_sets)
        self.sizes = tuple(s.n for s in self.strategy_sets)
        losses = np.asarray(losses, dtype=float)
        if losses.shape != (len(self.sizes), *self.sizes, 2):
            raise ProblemError(f"losses must have shape {(len(self.sizes), *self.sizes, 2)}, got {losses.shape}")
        bad = losses[..., 0] > losses[..., 1]
        if bad.any():
            idx = np.argwhere(bad)[0]
            raise ProblemError("loss interval with lower endpoint above upper endpoint",
                               witness={"player": int(idx[0]), "profile": idx[1:].tolist()})
        self.losses = losses

    @classmethod
    def from_json(cls, data: dict) -> "IntervalGame":
        strategies = data["strategies"]
        n = int(data.get("players", len(strategies)))
        if len(strategies) != n:
            raise ProblemError("one strategy list per player is required")
        dists = data.get("distances")
        sets = []
        for i, labels in enumerate(strategies):
            k = len(labels)
            d = np.asarray(dists[i], dtype=float) if dists is not None else 1.0 - np.eye(k)
            sets.append(FinitePoints(d, labels=[str(s) for s in labels]))
        return cls(sets, data["losses"])

    def to_json(self) -> dict:
        return {
            "players": self.n,
            "strategies": [s.labels for s in self.strategy_sets],
            "distances": [s.dist.tolist() for s in self.strategy_sets],
            "losses": self.losses.tolist(),
        }

    @property
    def n(self) -> int:
        return len(self.sizes)

    @property
    def n_profiles(self) -> int:
        return int(np.prod(self.sizes))

    def profile(self, k: int) -> tuple:
        return tuple(int(v) for v in np.unravel_index(k, self.sizes))

    def index(self, profile) -> int:
        return int(np.ravel_multi_index(tuple(int(v) for v in profile), self.sizes))

    def labels(self, profile) -> list:
        return [self.strategy_sets[i].labels[s] for i, s in enumerate(profile)]

    def parse_profile(self, profile) -> tuple:
        """Accept strategy indices or labels."""
        if len(profile) != self.n:
            raise ProblemError("profile length does not match the number of players", witness=list(profile))
        out = []
        for i, s in enumerate(profile):
            labels = self.strategy_sets[i].labels
            if isinstance(s, str) and s in labels:
                out.append(labels.index(s))
            else:
                k = int(s)
                if not 0 <= k < self.sizes[i]:
                    raise ProblemError("strategy index out of range", witness={"player": i, "strategy": k})
                out.append(k)
        return tuple(out)

    def loss(self, i: int, profile) -> Interval:
        lo, hi = self.losses[(i, *profile)]
        return Interval(lo, hi)

    def product_distance(self, x, y) -> float:
        return float(sum(self.strategy_sets[i].dist[x[i], y[i]] for i in range(self.n)))

    def product_metric(self) -> np.ndarray:
        """``d̂`` between all pairs of profiles."""
        grids = np.indices(self.sizes).reshape(self.n, -1)
        total = np.zeros((self.n_profiles, self.n_profiles))
        for i, s in enumerate(self.strategy_sets):
            total += s.dist[grids[i][:, None], grids[i][None, :]]
        return total


def aggregate_bifunction(G: IntervalGame, x, y) -> Interval:
    """``Σ_i f_i(y_i, x_{-i}) ⊖gH f_i(x)``."""
    acc = Interval(0.0, 0.0)
    for i in range(G.n):
        dev = list(x)
        dev[i] = y[i]
        acc = acc + gh_diff(G.loss(i, dev), G.loss(i, x))
    return acc


def aggregate_tables(G: IntervalGame) -> tuple[np.ndarray, np.ndarray]:
    """The aggregated bifunction for every pair of profiles (row = x, column = y)."""
    P = G.n_profiles
    grids = np.indices(G.sizes).reshape(G.n, -1)
    lo = np.zeros((P, P))
    hi = np.zeros((P, P))
    for i in range(G.n):
        base = G.losses[i].reshape(P, 2)
        # profile (y_i, x_{-i}) for every x (rows) and y (columns)
        dev = [np.broadcast_to(grids[j][:, None], (P, P)) for j in range(G.n)]
        dev[i] = np.broadcast_to(grids[i][None, :], (P, P))
        k = np.ravel_multi_index(tuple(dev), G.sizes)
        d_lo = base[k, 0] - base[:, 0][:, None]
        d_hi = base[k, 1] - base[:, 1][:, None]
        lo += np.minimum(d_lo, d_hi)
        hi += np.maximum(d_lo, d_hi)
    return lo, hi


def verify_epsilon_nash(G: IntervalGame, x, epsilon: float) -> tuple[bool, dict | None]:
    """Check every unilateral deviation; return the first violation if any.

    A deviation ``y_i`` violates when
    ``f_i(y_i, x_{-i}) + [ε d_i(x_i, y_i), ε d_i(x_i, y_i)] ≺ f_i(x)``.
    """
    if epsilon < 0:
        raise ProblemError("epsilon must be nonnegative")
    x = G.parse_profile(x)
    for i in range(G.n):
        cur = G.loss(i, x)
        for yi in range(G.sizes[i]):
            dev = list(x)
            dev[i] = yi
            d = G.strategy_sets[i].dist[x[i], yi]
            alt = G.loss(i, dev)
            if alt.lo + epsilon * d < cur.lo and alt.hi + epsilon * d < cur.hi:
                return False, {
                    "player": i,
                    "deviation": G.strategy_sets[i].labels[yi],
                    "deviation_index": yi,
                    "loss_now": cur.to_json(),
                    "loss_after": alt.to_json(),
                    "distance": float(d),
                }
    return True, None


def epsilon_nash_mask(G: IntervalGame, epsilon: float) -> np.ndarray:
    """Boolean mask over profile indices of the exhaustively enumerated ε-Nash set."""
    ok = np.ones(G.sizes, dtype=bool)
    for i in range(G.n):
        lo = np.moveaxis(G.losses[i][..., 0], i, -1)
        hi = np.moveaxis(G.losses[i][..., 1], i, -1)
        d = G.strategy_sets[i].dist
        # [..., x_i, y_i]
        viol = ((lo[..., None, :] + epsilon * d < lo[..., :, None])
                & (hi[..., None, :] + epsilon * d < hi[..., :, None])).any(axis=-1)
        ok &= np.moveaxis(viol, -1, i) == False  # noqa: E712
    return ok.ravel()


def bifunction_premise(G: IntervalGame, x, epsilon: float, tables=None, metric=None) -> bool:
    """``F(x, y) + [ε d̂, ε d̂] ⊀ [0, 0]`` for every profile ``y``."""
    lo, hi = tables if tables is not None else aggregate_tables(G)
    dhat = metric if metric is not None else G.product_metric()
    k = G.index(G.parse_profile(x))
    shift = epsilon * dhat[k]
    return not bool(np.any((lo[k] + shift < 0) & (hi[k] + shift < 0)))


@dataclass
class NashResult:
    profile: tuple
    labels: list
    epsilon: float
    verified: bool
    heuristic: bool
    route: str
    triangle: TriangleReport

    def to_json(self) -> dict:
        return {
            "profile": list(self.profile),
            "labels": self.labels,
            "epsilon": self.epsilon,
            "verified": self.verified,
            "heuristic": self.heuristic,
            "route": self.route,
            "triangle": {"holds": self.triangle.holds, "exhaustive": self.triangle.exhaustive,
                         "checked": self.triangle.checked, "witness": self.triangle.witness},
        }


def find_epsilon_nash(G: IntervalGame, epsilon: float, x0=None, require_triangle: bool = False,
                      seed: int = 0) -> NashResult:
    """ε-Nash profile via the Ekeland principle for the aggregated bifunction.

    When the triangle property of the aggregated bifunction holds on all
    triples, the descent result is guaranteed to verify. Otherwise the result
    is labelled heuristic, and if the descent point fails verification the
    first profile of the enumerated ε-Nash set is returned instead.
    """
    if not epsilon > 0:
        raise ProblemError("epsilon must be positive")
    x0 = G.parse_profile(x0) if x0 is not None else (0,) * G.n
    lo, hi = aggregate_tables(G)
    dhat = G.product_metric()
    profiles = [G.profile(k) for k in range(G.n_profiles)]
    F = Bifunction.from_tables(lo, hi, dhat, labels=[list(p) for p in profiles],
                               description=f"all {G.n_profiles} strategy profiles")
    res = ekeland_bifunction(F, epsilon, G.index(x0), require_triangle=require_triangle, seed=seed)
    x = profiles[res.index]
    ok, witness = verify_epsilon_nash(G, x, epsilon)
    _, strict = bifunction_violations(F, res.index, epsilon)
    if strict is None and not ok:
        raise InternalError("bifunction condition holds but the profile is not ε-Nash", witness=witness)
    if ok:
        return NashResult(x, G.labels(x), float(epsilon), True, res.heuristic, "bifunction", res.triangle)
    if not res.heuristic:
        raise InternalError("descent profile fails ε-Nash verification under a verified triangle property",
                            witness=witness)
    mask = epsilon_nash_mask(G, epsilon)
    if not mask.any():
        raise SolverError("no ε-Nash profile exists; the triangle hypothesis fails", witness=res.triangle.witness)
    x = profiles[int(np.flatnonzero(mask)[0])]
    return NashResult(x, G.labels(x), float(epsilon), True, True, "enumeration", res.triangle)


def random_game(rng: np.random.Generator, sizes=(5, 5), spread: float = 1.0) -> IntervalGame:
    """Random game: losses with uniform centres and widths, metrics from points on a line."""
    sets = []
    for k in sizes:
        coords = np.sort(rng.uniform(0, 1, k))
        while np.any(np.diff(coords) == 0):
            coords = np.sort(rng.uniform(0, 1, k))
        sets.append(FinitePoints.from_coords(coords, labels=[f"s{j}" for j in range(k)]))
    shape = (len(sizes), *sizes)
    lo = rng.uniform(0, 1, shape)
    width = rng.uniform(0, spread, shape)
    return IntervalGame(sets, np.stack([lo, lo + width], axis=-1))
