"""Closed interval arithmetic over binary64 floats with outward rounding.

Every operation widens its result by one ulp per endpoint computation, so
enclosures stay sound for the totalized term semantics even though the
endpoint math itself runs in ordinary double precision.  Operations that
can trigger a totalization convention (division through zero, log of a
nonpositive range, roots of negatives, powers of a range through zero)
return the enclosure together with a flag saying the convention branch
intersects the input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

INF = math.inf


def _down(x: float) -> float:
    if math.isinf(x) or math.isnan(x):
        return x
    return math.nextafter(x, -INF)


def _up(x: float) -> float:
    if math.isinf(x) or math.isnan(x):
        return x
    return math.nextafter(x, INF)


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if math.isnan(self.lo) or math.isnan(self.hi) or self.lo > self.hi:
            raise ValueError(f"invalid interval [{self.lo}, {self.hi}]")

    def contains(self, x: float) -> bool:
        return self.lo <= x <= self.hi

    def contains_zero(self) -> bool:
        return self.lo <= 0.0 <= self.hi

    def subset_of(self, other: "Interval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __repr__(self) -> str:
        return f"[{self.lo}, {self.hi}]"


WHOLE = Interval(-INF, INF)
ZERO = Interval(0.0, 0.0)
ONE = Interval(1.0, 1.0)
UNIT = Interval(-1.0, 1.0)


def point(x: float) -> Interval:
    return Interval(x, x)


def hull(*ivs: Interval) -> Interval:
    return Interval(min(iv.lo for iv in ivs), max(iv.hi for iv in ivs))


def add(a: Interval, b: Interval) -> Interval:
    return Interval(_down(a.lo + b.lo), _up(a.hi + b.hi))


def neg(a: Interval) -> Interval:
    return Interval(-a.hi, -a.lo)


def sub(a: Interval, b: Interval) -> Interval:
    return add(a, neg(b))


def _prod(x: float, y: float) -> float:
    # 0 * inf arises only from an exact zero endpoint; the value set then
    # contains 0, not nan.
    if x == 0.0 or y == 0.0:
        return 0.0
    return x * y


def mul(a: Interval, b: Interval) -> Interval:
    ps = (_prod(a.lo, b.lo), _prod(a.lo, b.hi), _prod(a.hi, b.lo), _prod(a.hi, b.hi))
    return Interval(_down(min(ps)), _up(max(ps)))


def inv(a: Interval) -> tuple[Interval, bool]:
    """Enclosure of the totalized reciprocal (1/0 = 0)."""
    if a.contains_zero():
        if a.lo == 0.0 and a.hi == 0.0:
            return ZERO, True
        if a.lo >= 0.0:
            return Interval(0.0, INF), True
        if a.hi <= 0.0:
            return Interval(-INF, 0.0), True
        return WHOLE, True
    return Interval(_down(1.0 / a.hi), _up(1.0 / a.lo)), False


def abs_(a: Interval) -> Interval:
    if a.lo >= 0.0:
        return a
    if a.hi <= 0.0:
        return neg(a)
    return Interval(0.0, max(-a.lo, a.hi))


def log_(a: Interval) -> tuple[Interval, bool]:
    """Enclosure of the totalized log (0 on nonpositives)."""
    if a.hi <= 0.0:
        return ZERO, True
    pos_lo = _down(math.log(a.lo)) if a.lo > 0.0 else -INF
    pos = Interval(pos_lo, _up(math.log(a.hi)) if a.hi < INF else INF)
    if a.lo <= 0.0:
        return hull(pos, ZERO), True
    return pos, False


def _exp_up(x: float) -> float:
    try:
        return _up(math.exp(x))
    except OverflowError:
        return INF


def _exp_down(x: float) -> float:
    try:
        return _down(math.exp(x))
    except OverflowError:
        return INF


def exp_(a: Interval) -> Interval:
    return Interval(max(0.0, _exp_down(a.lo)), _exp_up(a.hi))


def root_(a: Interval, degree: int) -> tuple[Interval, bool]:
    """Enclosure of the totalized degree-th root (0 on negatives)."""
    if a.hi < 0.0:
        return ZERO, True
    hi = _up(a.hi ** (1.0 / degree)) if a.hi < INF else INF
    if a.lo < 0.0:
        return Interval(0.0, hi), True
    return Interval(_down(a.lo ** (1.0 / degree)), hi), False


def pow_abs(a: Interval, q: Fraction) -> tuple[Interval, bool]:
    """Enclosure of |y|^q with the convention 0^q = 0.

    Only q <= 0 counts as a convention when the range reaches 0; for q > 0
    the value 0 is the continuous extension.
    """
    m = abs_(a)
    fq = float(q)
    flag = m.lo == 0.0 and q <= 0
    if q == 0:
        return (hull(ONE, ZERO) if flag else ONE), flag
    if q > 0:
        lo = _down(m.lo**fq) if m.lo > 0.0 else 0.0
        hi = _up(m.hi**fq) if m.hi < INF else INF
        return Interval(lo, hi), False
    # q < 0: values blow up toward the zero endpoint, convention adds 0
    if m.lo == 0.0:
        return Interval(0.0, INF), True
    lo = _down(m.hi**fq) if m.hi < INF else 0.0
    return Interval(lo, _up(m.lo**fq)), False


def ipow(a: Interval, e: int) -> Interval:
    """a^e for integer e >= 0 (signed base, exact monotonicity cases)."""
    if e == 0:
        return ONE
    if e % 2 == 1:
        return Interval(_down(a.lo**e), _up(a.hi**e))
    m = abs_(a)
    return Interval(_down(m.lo**e), _up(m.hi**e))


def min_(a: Interval, b: Interval) -> Interval:
    return Interval(min(a.lo, b.lo), min(a.hi, b.hi))


def max_(a: Interval, b: Interval) -> Interval:
    return Interval(max(a.lo, b.lo), max(a.hi, b.hi))
