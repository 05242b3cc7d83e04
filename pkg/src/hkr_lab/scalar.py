"""Exact rationals and outward-rounded enclosures.

Every quantity in the package is either a :class:`fractions.Fraction` (exact)
or a :class:`CertifiedValue`, a closed interval with rational endpoints that
is guaranteed to contain the true real number.  Degenerate intervals are exact
and are never rounded; non-degenerate ones are rounded outward to
``prec`` significant bits after every operation.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass
from decimal import ROUND_CEILING, ROUND_FLOOR, ROUND_HALF_EVEN, Decimal, localcontext
from fractions import Fraction
from numbers import Rational
from typing import Union

import mpmath

DEFAULT_PRECISION = 256

Number = Union[int, Fraction, "CertifiedValue"]


class ScalarError(ValueError):
    """Domain error raised by scalar operations."""


class Undecidable(ArithmeticError):
    """A comparison could not be decided at the working precision."""


class Verdict(enum.Enum):
    CERTAINLY_LESS = "CertainlyLess"
    CERTAINLY_GREATER = "CertainlyGreater"
    OVERLAPPING = "Overlapping"


# ---------------------------------------------------------------------------
# rational helpers


def parse_rational(text: str | int | Fraction) -> Fraction:
    """Parse ``"p/q"``, an integer, or a decimal literal into a Fraction."""
    if isinstance(text, (int, Fraction)):
        return Fraction(text)
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ScalarError(f"not a rational literal: {text!r}") from exc


def format_rational(q: Fraction | int) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


def _floor_log2(q: Fraction) -> int:
    # within one of floor(log2 |q|), which is all the rounding needs
    return abs(q.numerator).bit_length() - q.denominator.bit_length()


def round_down(q: Fraction, prec: int) -> Fraction:
    if q == 0:
        return q
    k = prec - _floor_log2(q)
    if k >= 0:
        return Fraction((q.numerator << k) // q.denominator, 1 << k)
    return Fraction(q.numerator // (q.denominator << -k) << -k)


def round_up(q: Fraction, prec: int) -> Fraction:
    return -round_down(-q, prec)


# ---------------------------------------------------------------------------
# enclosures


@dataclass(frozen=True, slots=True)
class CertifiedValue:
    """Closed interval ``[lo, hi]`` known to contain a real number."""

    lo: Fraction
    hi: Fraction
    prec: int = DEFAULT_PRECISION

    def __post_init__(self):
        if self.lo > self.hi:
            raise ScalarError(f"empty enclosure [{self.lo}, {self.hi}]")

    # construction -----------------------------------------------------------

    @classmethod
    def exact(cls, q, prec: int = DEFAULT_PRECISION) -> "CertifiedValue":
        q = Fraction(q)
        return cls(q, q, prec)

    @classmethod
    def from_bounds(cls, lo, hi, prec: int = DEFAULT_PRECISION) -> "CertifiedValue":
        lo, hi = Fraction(lo), Fraction(hi)
        if lo != hi:
            lo, hi = round_down(lo, prec), round_up(hi, prec)
        return cls(lo, hi, prec)

    @classmethod
    def from_center_radius(cls, center, radius, prec: int = DEFAULT_PRECISION):
        center, radius = Fraction(center), Fraction(radius)
        if radius < 0:
            raise ScalarError("negative radius")
        return cls.from_bounds(center - radius, center + radius, prec)

    # views ------------------------------------------------------------------

    @property
    def center(self) -> Fraction:
        return (self.lo + self.hi) / 2

    @property
    def radius(self) -> Fraction:
        return (self.hi - self.lo) / 2

    @property
    def exact_flag(self) -> bool:
        return self.lo == self.hi

    def contains(self, x) -> bool:
        if isinstance(x, CertifiedValue):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= Fraction(x) <= self.hi

    def __float__(self) -> float:
        return float(self.center)

    def __repr__(self) -> str:
        if self.exact_flag:
            return f"CertifiedValue({format_rational(self.lo)})"
        return f"CertifiedValue({float(self.center)!r} ± {float(self.radius):.3g})"

    # arithmetic -------------------------------------------------------------

    def _wrap(self, other) -> "CertifiedValue":
        if isinstance(other, CertifiedValue):
            return other
        if isinstance(other, (int, Rational)):
            return CertifiedValue.exact(other, self.prec)
        return NotImplemented

    def _make(self, lo, hi, prec) -> "CertifiedValue":
        return CertifiedValue.from_bounds(lo, hi, prec)

    def __add__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return o
        return self._make(self.lo + o.lo, self.hi + o.hi, max(self.prec, o.prec))

    __radd__ = __add__

    def __neg__(self):
        return CertifiedValue(-self.hi, -self.lo, self.prec)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return o
        return self._make(self.lo - o.hi, self.hi - o.lo, max(self.prec, o.prec))

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return o
        p = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return self._make(min(p), max(p), max(self.prec, o.prec))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return o
        if o.lo <= 0 <= o.hi:
            raise ZeroDivisionError("divisor enclosure contains zero")
        return self * CertifiedValue.from_bounds(1 / o.hi, 1 / o.lo, o.prec)

    def __rtruediv__(self, other):
        return self._wrap(other).__truediv__(self)

    def __pow__(self, k):
        if not isinstance(k, int):
            return pow_real(self, k)
        if k < 0:
            return 1 / (self ** (-k))
        if k == 0:
            return CertifiedValue.exact(1, self.prec)
        if k % 2 == 1 or self.lo >= 0:
            return self._make(self.lo**k, self.hi**k, self.prec)
        if self.hi <= 0:
            return self._make(self.hi**k, self.lo**k, self.prec)
        return self._make(0, max(self.lo**k, self.hi**k), self.prec)

    def __abs__(self):
        if self.lo >= 0:
            return self
        if self.hi <= 0:
            return -self
        return CertifiedValue(Fraction(0), max(-self.lo, self.hi), self.prec)

    def hull(self, other) -> "CertifiedValue":
        o = self._wrap(other)
        return CertifiedValue(min(self.lo, o.lo), max(self.hi, o.hi), max(self.prec, o.prec))


def as_enclosure(x, prec: int = DEFAULT_PRECISION) -> CertifiedValue:
    if isinstance(x, CertifiedValue):
        return x
    return CertifiedValue.exact(x, prec)


def lower(x) -> Fraction:
    return x.lo if isinstance(x, CertifiedValue) else Fraction(x)


def upper(x) -> Fraction:
    return x.hi if isinstance(x, CertifiedValue) else Fraction(x)


def is_exact(x) -> bool:
    return not isinstance(x, CertifiedValue) or x.exact_flag


def simplify(x):
    """Collapse an exact enclosure to its Fraction."""
    if isinstance(x, CertifiedValue) and x.exact_flag:
        return x.lo
    return x


def positive_part(x):
    """``max(x, 0)``, elementwise on enclosures."""
    if isinstance(x, CertifiedValue):
        return CertifiedValue(max(x.lo, 0), max(x.hi, 0), x.prec)
    return x if x > 0 else Fraction(0)


def smax(a, b):
    if not isinstance(a, CertifiedValue) and not isinstance(b, CertifiedValue):
        return max(a, b)
    a, b = as_enclosure(a), as_enclosure(b)
    return CertifiedValue(max(a.lo, b.lo), max(a.hi, b.hi), max(a.prec, b.prec))


def smin(a, b):
    if not isinstance(a, CertifiedValue) and not isinstance(b, CertifiedValue):
        return min(a, b)
    a, b = as_enclosure(a), as_enclosure(b)
    return CertifiedValue(min(a.lo, b.lo), min(a.hi, b.hi), max(a.prec, b.prec))


def hull(*xs):
    if all(not isinstance(x, CertifiedValue) for x in xs) and len(set(xs)) == 1:
        return xs[0]
    lo = min(lower(x) for x in xs)
    hi = max(upper(x) for x in xs)
    prec = max((x.prec for x in xs if isinstance(x, CertifiedValue)), default=DEFAULT_PRECISION)
    return CertifiedValue(lo, hi, prec)


# ---------------------------------------------------------------------------
# comparisons


def enclosure_compare(a, b) -> Verdict:
    if upper(a) < lower(b):
        return Verdict.CERTAINLY_LESS
    if lower(a) > upper(b):
        return Verdict.CERTAINLY_GREATER
    return Verdict.OVERLAPPING


def certainly_less(a, b) -> bool:
    return upper(a) < lower(b)


def certainly_le(a, b) -> bool:
    return upper(a) <= lower(b)


def less(a, b) -> bool:
    """Decide ``a < b`` or raise :class:`Undecidable`."""
    if type(a) is Fraction and type(b) is Fraction:
        return a < b
    if upper(a) < lower(b):
        return True
    if lower(a) >= upper(b):
        return False
    raise Undecidable(f"cannot decide {a!r} < {b!r}")


def less_equal(a, b) -> bool:
    if type(a) is Fraction and type(b) is Fraction:
        return a <= b
    if upper(a) <= lower(b):
        return True
    if lower(a) > upper(b):
        return False
    raise Undecidable(f"cannot decide {a!r} <= {b!r}")


# ---------------------------------------------------------------------------
# transcendental operations via mpmath interval arithmetic

_iv_lock = threading.Lock()


def _raw_to_fraction(raw) -> Fraction:
    sign, man, exp, _ = raw
    if not man and exp:
        raise Undecidable("interval evaluation overflowed")
    value = Fraction(int(man) << exp) if exp >= 0 else Fraction(int(man), 1 << -exp)
    return -value if sign else value


def _to_iv(x, ctx):
    lo, hi = lower(x), upper(x)
    a = ctx.mpf(lo.numerator) / lo.denominator
    b = ctx.mpf(hi.numerator) / hi.denominator
    return ctx.mpf([a.a, b.b])


def _from_iv(v, prec: int) -> CertifiedValue:
    a, b = v._mpi_
    return CertifiedValue.from_bounds(_raw_to_fraction(a), _raw_to_fraction(b), prec)


def _iv_eval(fn, args, prec: int) -> CertifiedValue:
    with _iv_lock:
        ctx = mpmath.iv
        saved = ctx.prec
        ctx.prec = prec + 16
        try:
            return _from_iv(fn(ctx, *[_to_iv(a, ctx) for a in args]), prec)
        finally:
            ctx.prec = saved


def _exact_rational_root(q: Fraction, k: int) -> Fraction | None:
    """Exact k-th root of a nonnegative rational, if rational."""

    def iroot(n: int) -> int | None:
        lo, hi = 0, 1 << (n.bit_length() // k + 1)
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if mid**k <= n:
                lo = mid
            else:
                hi = mid - 1
        return lo if lo**k == n else None

    a, b = iroot(q.numerator), iroot(q.denominator)
    if a is None or b is None:
        return None
    return Fraction(a, b)


def _precision_of(*xs) -> int:
    return max((x.prec for x in xs if isinstance(x, CertifiedValue)), default=DEFAULT_PRECISION)


def pow_real(base, exponent, prec: int | None = None):
    """Enclosure of ``base ** exponent`` for ``base > 0``.

    Exact (a Fraction) when base is exact and the exponent is an integer, or a
    rational whose root of the base is itself rational.
    """
    prec = prec or _precision_of(base, exponent)
    if lower(base) <= 0:
        raise ScalarError("pow_real requires a positive base")
    if is_exact(exponent):
        e = lower(exponent)
        if is_exact(base):
            b = lower(base)
            if e.denominator == 1:
                return b ** int(e)
            root = _exact_rational_root(b, e.denominator)
            if root is not None:
                return root ** e.numerator
        elif e.denominator == 1:
            return as_enclosure(base, prec) ** int(e)
    return _iv_eval(lambda ctx, b, e: b**e, [base, exponent], prec)


def pow_nonneg(base, exponent, prec: int | None = None):
    """``base ** exponent`` for ``base >= 0`` and ``exponent > 0``."""
    if upper(base) < 0:
        raise ScalarError("pow_nonneg requires a nonnegative base")
    if lower(base) > 0:
        return pow_real(base, exponent, prec)
    if upper(base) == 0:
        return Fraction(0)
    if is_exact(exponent) and lower(exponent).denominator == 1:
        return as_enclosure(positive_part(base)) ** int(lower(exponent))
    hi = pow_real(upper(base), exponent, prec)
    return CertifiedValue(Fraction(0), upper(hi), prec or _precision_of(base, exponent))


def root(x, s, prec: int | None = None):
    """``x ** (1/s)`` for ``x >= 0``."""
    if s == 1:
        return x
    return pow_nonneg(x, 1 / as_enclosure(s) if not is_exact(s) else 1 / lower(s), prec)


def log2(x, prec: int | None = None) -> CertifiedValue:
    prec = prec or _precision_of(x)
    if lower(x) <= 0:
        raise ScalarError("log2 requires a positive argument")
    return _iv_eval(lambda ctx, a: ctx.log(a) / ctx.log(2), [x], prec)


# ---------------------------------------------------------------------------
# serialization


def _decimal(q: Fraction, digits: int, rounding) -> Decimal:
    with localcontext() as ctx:
        ctx.prec = digits
        ctx.rounding = rounding
        return Decimal(q.numerator) / Decimal(q.denominator)


def serialize(x, digits: int = 40) -> dict | str:
    """Exact values as ``"p/q"``; enclosures as center/radius decimal strings.

    The decimal radius is inflated by the rounding error of the decimal
    center, so the serialized enclosure still contains the true value.
    """
    if is_exact(x):
        return format_rational(lower(x))
    center = _decimal(x.center, digits, ROUND_HALF_EVEN)
    slack = abs(Fraction(center) - x.center)
    radius = _decimal(x.radius + slack, 6, ROUND_CEILING)
    return {"center": str(center), "radius": str(radius)}


def format_bound(q: Fraction, direction: str, digits: int = 20) -> str:
    """Decimal string for a bound, rounded away from the enclosed value."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    rounding = ROUND_FLOOR if direction == "down" else ROUND_CEILING
    return str(_decimal(q, digits, rounding))


def deserialize(obj) -> Fraction | CertifiedValue:
    if isinstance(obj, dict):
        return CertifiedValue.from_center_radius(
            Fraction(obj["center"]), Fraction(obj["radius"])
        )
    return parse_rational(obj)


def to_float(x) -> float:
    return float(x.center) if isinstance(x, CertifiedValue) else float(x)
