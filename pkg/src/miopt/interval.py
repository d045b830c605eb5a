"""Closed bounded real intervals: algebra, orders, and metric.

An interval is summarized by its center (lo+hi)/2 and half-width
(hi-lo)/2; the CW orders compare these two numbers componentwise.
All operations are exact in binary floating point on dyadic inputs.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Interval:
    """Closed bounded interval [lo, hi] with lo <= hi enforced."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not self.lo <= self.hi:
            raise ValueError(f"invalid interval: lo={self.lo} > hi={self.hi}")

    @property
    def center(self) -> float:
        return (self.lo + self.hi) / 2.0

    @property
    def width(self) -> float:
        # half-width; always >= 0
        return (self.hi - self.lo) / 2.0

    def __add__(self, other: "Interval") -> "Interval":
        return add(self, other)

    def __rmul__(self, alpha: float) -> "Interval":
        return scalar_mul(alpha, self)


ZERO = Interval(0.0, 0.0)


def add(a: Interval, b: Interval) -> Interval:
    """Minkowski sum: [a.lo+b.lo, a.hi+b.hi]."""
    return Interval(a.lo + b.lo, a.hi + b.hi)


def scalar_mul(alpha: float, q: Interval) -> Interval:
    """Scalar multiple; endpoints swap for negative alpha."""
    if alpha >= 0.0:
        return Interval(alpha * q.lo, alpha * q.hi)
    return Interval(alpha * q.hi, alpha * q.lo)


def gh_diff(q: Interval, r: Interval) -> Interval:
    """Generalized Hukuhara difference.

    Closed form: [min(q.lo-r.lo, q.hi-r.hi), max(q.lo-r.lo, q.hi-r.hi)].
    """
    dlo = q.lo - r.lo
    dhi = q.hi - r.hi
    return Interval(min(dlo, dhi), max(dlo, dhi))


def norm(q: Interval) -> float:
    """max(|lo|, |hi|); zero iff q is the zero interval."""
    return max(abs(q.lo), abs(q.hi))


def hausdorff(q: Interval, r: Interval) -> float:
    """Hausdorff distance: max(|q.lo-r.lo|, |q.hi-r.hi|)."""
    return max(abs(q.lo - r.lo), abs(q.hi - r.hi))


def cw_leq(q: Interval, r: Interval) -> bool:
    """Non-strict center-width order: center and width both <=."""
    return q.center <= r.center and q.width <= r.width


def cw_lt(q: Interval, r: Interval) -> bool:
    """Strict center-width order: center and width both strictly <."""
    return q.center < r.center and q.width < r.width
