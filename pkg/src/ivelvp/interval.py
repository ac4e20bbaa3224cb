"""Closed bounded real intervals with Hukuhara-type differences.

Endpoints are plain doubles; no outward rounding is performed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

__all__ = [
    "Interval",
    "OrderVerdict",
    "add",
    "scalar_mul",
    "gh_diff",
    "hukuhara_diff",
    "hausdorff",
    "compare",
    "leq",
    "less",
    "contains_zero",
    "ZERO",
]


@dataclass(frozen=True, slots=True)
class Interval:
    """The closed interval ``[lo, hi]`` with ``lo <= hi``, both finite."""

    lo: float
    hi: float

    def __post_init__(self):
        lo = float(self.lo)
        hi = float(self.hi)
        # one chained test rejects NaN, infinities and inverted endpoints
        if not -math.inf < lo <= hi < math.inf:
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValueError(f"interval endpoints must be finite, got [{lo}, {hi}]")
            raise ValueError(f"lower endpoint exceeds upper endpoint: [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, value: float) -> "Interval":
        return cls(value, value)

    @classmethod
    def from_json(cls, data) -> "Interval":
        if isinstance(data, Interval):
            return data
        if isinstance(data, (int, float)):
            return cls.point(data)
        if len(data) != 2:
            raise ValueError(f"an interval is a two-element array [lo, hi], got {data!r}")
        return cls(data[0], data[1])

    def to_json(self) -> list:
        return [self.lo, self.hi]

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def is_degenerate(self) -> bool:
        return self.lo == self.hi

    def __iter__(self):
        yield self.lo
        yield self.hi

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = Interval.point(other)
        if not isinstance(other, Interval):
            return NotImplemented
        return add(self, other)

    __radd__ = __add__

    def __neg__(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def __mul__(self, lam):
        if not isinstance(lam, (int, float)):
            return NotImplemented
        return scalar_mul(lam, self)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"Interval({self.lo!r}, {self.hi!r})"

    def __str__(self) -> str:
        return f"[{self.lo:g}, {self.hi:g}]"


ZERO = Interval(0.0, 0.0)


class OrderVerdict(NamedTuple):
    le: bool
    lt: bool


def add(a: Interval, b: Interval) -> Interval:
    return Interval(a.lo + b.lo, a.hi + b.hi)


def scalar_mul(lam: float, a: Interval) -> Interval:
    if lam >= 0:
        return Interval(lam * a.lo, lam * a.hi)
    return Interval(lam * a.hi, lam * a.lo)


def gh_diff(a: Interval, b: Interval) -> Interval:
    """Generalized Hukuhara difference ``a ⊖_gH b``; always defined."""
    d_lo = a.lo - b.lo
    d_hi = a.hi - b.hi
    return Interval(min(d_lo, d_hi), max(d_lo, d_hi))


def hukuhara_diff(a: Interval, b: Interval, tol: float = 0.0) -> Interval | None:
    """Hukuhara difference ``c`` with ``a = b + c``, or ``None`` if it does not exist.

    The difference exists exactly when ``width(a) >= width(b)``. ``tol`` admits
    width deficits up to ``tol`` (rounding noise); the result is then collapsed
    to its midpoint so it stays a valid interval.
    """
    c_lo = a.lo - b.lo
    c_hi = a.hi - b.hi
    if c_lo <= c_hi:
        return Interval(c_lo, c_hi)
    if c_lo - c_hi <= tol:
        mid = 0.5 * (c_lo + c_hi)
        return Interval(mid, mid)
    return None


def hausdorff(a: Interval, b: Interval) -> float:
    return max(abs(a.lo - b.lo), abs(a.hi - b.hi))


def leq(a: Interval, b: Interval) -> bool:
    """``a ≼ b``: both endpoints weakly below."""
    return a.lo <= b.lo and a.hi <= b.hi


def less(a: Interval, b: Interval) -> bool:
    """``a ≺ b``: both endpoints strictly below."""
    return a.lo < b.lo and a.hi < b.hi


def compare(a: Interval, b: Interval) -> OrderVerdict:
    """Both order relations at once; the negations are ``not le`` / ``not lt``."""
    return OrderVerdict(leq(a, b), less(a, b))


def contains_zero(a: Interval, tol: float = 0.0) -> bool:
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return a.lo - tol <= 0.0 <= a.hi + tol
