"""Closed bounded intervals with outward-rounded arithmetic.

Every operation returns an interval that contains the exact real result for
all point arguments taken from its inputs.  Rounding is done by computing in
round-to-nearest and then correcting each endpoint with an error-free
transformation (TwoSum / TwoProduct); when the rounding error cannot be
recovered exactly the endpoint is pushed one ulp outward instead.

Transcendental functions rely on the platform libm being accurate to within
one ulp and widen their results by two ulps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "Interval",
    "DomainError",
    "PI",
    "arith",
    "elem",
    "div_checked",
    "hull",
    "width",
    "contains",
    "subset",
    "intersect",
]

_INF = math.inf


class DomainError(ArithmeticError):
    """An operation was asked for a value outside its domain."""


def _down(x: float) -> float:
    return math.nextafter(x, -_INF)


def _up(x: float) -> float:
    return math.nextafter(x, _INF)


def _two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


_SPLITTER = 134217729.0  # 2**27 + 1


def _split(a: float) -> tuple[float, float]:
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_product(a: float, b: float) -> tuple[float, float] | None:
    """Exact product as p + e, or None when the split could over/underflow."""
    p = a * b
    if p == 0.0 or not math.isfinite(p):
        return (p, 0.0) if p == 0.0 and (a == 0.0 or b == 0.0) else None
    if max(abs(a), abs(b)) > 2.0**995 or abs(p) < 2.0**-960:
        return None
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def _add_rd(a: float, b: float) -> float:
    s, e = _two_sum(a, b)
    if not math.isfinite(s):
        return s
    return _down(s) if e < 0 else s


def _add_ru(a: float, b: float) -> float:
    s, e = _two_sum(a, b)
    if not math.isfinite(s):
        return s
    return _up(s) if e > 0 else s


def _mul_rd(a: float, b: float) -> float:
    tp = _two_product(a, b)
    if tp is None:
        return _down(a * b)
    p, e = tp
    return _down(p) if e < 0 else p


def _mul_ru(a: float, b: float) -> float:
    tp = _two_product(a, b)
    if tp is None:
        return _up(a * b)
    p, e = tp
    return _up(p) if e > 0 else p


def _div_bounds(a: float, b: float) -> tuple[float, float]:
    """Lower and upper float bounds of the exact quotient a / b."""
    q = a / b
    if a == 0.0:
        return 0.0, 0.0
    tp = _two_product(q, b)
    if tp is not None and tp[0] == a and tp[1] == 0.0:
        return q, q
    return _down(q), _up(q)


@dataclass(frozen=True)
class Interval:
    """A closed bounded interval ``[lo, hi]`` with finite float endpoints."""

    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = float(self.lo), float(self.hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise DomainError(f"interval endpoints must be finite, got [{lo}, {hi}]")
        if lo > hi:
            raise DomainError(f"empty interval [{lo}, {hi}]")
        # normalise -0.0 and ints so equality/hash behave
        object.__setattr__(self, "lo", lo + 0.0)
        object.__setattr__(self, "hi", hi + 0.0)

    @classmethod
    def point(cls, x: float) -> "Interval":
        return cls(x, x)

    @classmethod
    def coerce(cls, x) -> "Interval":
        if isinstance(x, Interval):
            return x
        if isinstance(x, (tuple, list)) and len(x) == 2:
            return cls(x[0], x[1])
        return cls(x, x)

    @property
    def width(self) -> float:
        return width(self)

    @property
    def mid(self) -> float:
        return self.lo + (self.hi - self.lo) / 2

    @property
    def mag(self) -> float:
        """Largest absolute value in the interval."""
        return max(abs(self.lo), abs(self.hi))

    def is_point(self) -> bool:
        return self.lo == self.hi

    def contains(self, x) -> bool:
        return contains(self, x)

    def bisect(self) -> tuple["Interval", "Interval"]:
        m = self.mid
        return Interval(self.lo, m), Interval(m, self.hi)

    def as_tuple(self) -> tuple[float, float]:
        return (self.lo, self.hi)

    def __add__(self, other):
        return arith("add", self, Interval.coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return arith("sub", self, Interval.coerce(other))

    def __rsub__(self, other):
        return arith("sub", Interval.coerce(other), self)

    def __mul__(self, other):
        return arith("mul", self, Interval.coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div_checked(self, Interval.coerce(other))

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __abs__(self):
        return elem("abs", self)

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"

    def __str__(self):
        return f"[{self.lo!r}, {self.hi!r}]"


def _checked(lo: float, hi: float) -> Interval:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise DomainError("interval operation overflowed")
    return Interval(lo, hi)


def arith(op: str, a: Interval, b: Interval) -> Interval:
    """Outward-rounded ``a op b`` for op in {add, sub, mul}."""
    if op == "add":
        return _checked(_add_rd(a.lo, b.lo), _add_ru(a.hi, b.hi))
    if op == "sub":
        return _checked(_add_rd(a.lo, -b.hi), _add_ru(a.hi, -b.lo))
    if op == "mul":
        pairs = ((a.lo, b.lo), (a.lo, b.hi), (a.hi, b.lo), (a.hi, b.hi))
        lo = min(_mul_rd(x, y) for x, y in pairs)
        hi = max(_mul_ru(x, y) for x, y in pairs)
        return _checked(lo, hi)
    raise ValueError(f"unknown arithmetic op {op!r}")


def square(a: Interval) -> Interval:
    """Tight enclosure of x*x when both factors are the same variable."""
    if a.lo >= 0:
        return _checked(_mul_rd(a.lo, a.lo), _mul_ru(a.hi, a.hi))
    if a.hi <= 0:
        return _checked(_mul_rd(a.hi, a.hi), _mul_ru(a.lo, a.lo))
    m = a.mag
    return _checked(0.0, _mul_ru(m, m))


def div_checked(a: Interval, b: Interval) -> Interval:
    """Outward-rounded ``a / b``; raises DomainError when 0 is in ``b``."""
    if b.lo <= 0.0 <= b.hi:
        raise DomainError(f"division by an interval containing zero: {b}")
    los, his = [], []
    for x in (a.lo, a.hi):
        for y in (b.lo, b.hi):
            lo, hi = _div_bounds(x, y)
            los.append(lo)
            his.append(hi)
    return _checked(min(los), max(his))


# pi lies strictly between these two doubles
PI = Interval(3.141592653589793, 3.1415926535897936)
_TWO_PI = arith("mul", PI, Interval(2.0, 2.0))


def _libm(fn, x: float) -> tuple[float, float]:
    y = fn(x)
    return _down(_down(y)), _up(_up(y))


def _periodic(a: Interval, fn, offset: float) -> Interval:
    """Enclosure of sin (offset=0.5) or cos (offset=0.0) over ``a``.

    Critical points sit at (k + offset) * pi; the extremum there is +1 for
    even k and -1 for odd k.  A critical point is included whenever its pi
    enclosure might intersect ``a``.
    """
    if a.hi - a.lo >= _TWO_PI.lo or a.mag > 2.0**50:
        return Interval(-1.0, 1.0)
    if a.is_point() and a.lo == 0.0:
        exact = 0.0 if fn is math.sin else 1.0
        return Interval(exact, exact)
    lo1, hi1 = _libm(fn, a.lo)
    lo2, hi2 = _libm(fn, a.hi)
    lo, hi = min(lo1, lo2), max(hi1, hi2)
    k_start = math.floor(a.lo / PI.hi - offset) - 1
    k_end = math.ceil(a.hi / PI.lo - offset) + 1
    for k in range(k_start, k_end + 1):
        crit = arith("mul", Interval.point(k + offset), PI)
        if crit.hi < a.lo or crit.lo > a.hi:
            continue
        if k % 2 == 0:
            hi = 1.0
        else:
            lo = -1.0
    return Interval(max(lo, -1.0), min(hi, 1.0))


def _exp(a: Interval) -> Interval:
    if a.hi > 709.0:
        raise DomainError(f"exp overflow on {a}")
    lo = 1.0 if a.lo == 0.0 else max(_down(_down(math.exp(a.lo))), 0.0)
    hi = 1.0 if a.hi == 0.0 else _up(_up(math.exp(a.hi)))
    return Interval(lo, hi)


def _abs(a: Interval) -> Interval:
    if a.lo >= 0:
        return a
    if a.hi <= 0:
        return Interval(-a.hi, -a.lo)
    return Interval(0.0, a.mag)


_ELEM = {
    "neg": (1, lambda a: Interval(-a.hi, -a.lo)),
    "abs": (1, _abs),
    "sin": (1, lambda a: _periodic(a, math.sin, 0.5)),
    "cos": (1, lambda a: _periodic(a, math.cos, 0.0)),
    "exp": (1, _exp),
    "min2": (2, lambda a, b: Interval(min(a.lo, b.lo), min(a.hi, b.hi))),
    "max2": (2, lambda a, b: Interval(max(a.lo, b.lo), max(a.hi, b.hi))),
}


def elem(fn: str, *args: Interval) -> Interval:
    """Enclosure of an elementary function: neg, abs, sin, cos, exp, min2, max2."""
    try:
        arity, impl = _ELEM[fn]
    except KeyError:
        raise ValueError(f"unknown elementary function {fn!r}") from None
    if len(args) != arity:
        raise TypeError(f"{fn} takes {arity} argument(s), got {len(args)}")
    return impl(*args)


def hull(a: Interval, b: Interval) -> Interval:
    return Interval(min(a.lo, b.lo), max(a.hi, b.hi))


def width(a: Interval) -> float:
    return a.hi - a.lo


def contains(a: Interval, x) -> bool:
    if isinstance(x, Interval):
        return a.lo <= x.lo and x.hi <= a.hi
    return a.lo <= x <= a.hi


def subset(a: Interval, b: Interval) -> bool:
    """True when ``a`` is contained in ``b``."""
    return b.lo <= a.lo and a.hi <= b.hi


def intersect(a: Interval, b: Interval) -> Interval | None:
    lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
    return Interval(lo, hi) if lo <= hi else None
