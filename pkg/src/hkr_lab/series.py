"""Poly-geometric series ``sum n**a * x**n`` with closed forms and certified tails."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .scalar import (
    CertifiedValue,
    ScalarError,
    certainly_less,
    is_exact,
    lower,
    pow_real,
    upper,
)


class DivergentSeries(ScalarError):
    """The ratio of the series is not certifiably below one."""


@dataclass(frozen=True)
class SeriesSpec:
    """Terms ``scale * n**power * ratio**n``."""

    power: Fraction | CertifiedValue
    ratio: Fraction | CertifiedValue
    scale: Fraction | CertifiedValue = Fraction(1)

    def __post_init__(self):
        if lower(self.power) < 0:
            raise ScalarError("series power must be nonnegative")
        if lower(self.ratio) <= 0:
            raise ScalarError("series ratio must be positive")


@dataclass(frozen=True)
class StarFamily:
    """The majorant series ``sum_k 2**k (3 k**s / 3**(k r))**(1/s)`` of the AC bound chain."""

    r: Fraction
    s: Fraction


@lru_cache(maxsize=None)
def eulerian_row(j: int) -> tuple[int, ...]:
    """Eulerian numbers A(j, 0..j-1)."""
    row = (1,)
    for n in range(2, j + 1):
        row = tuple(
            (n - m) * (row[m - 1] if m >= 1 else 0) + (m + 1) * (row[m] if m < len(row) else 0)
            for m in range(n)
        )
    return row


def polylog_neg(j: int, x):
    """``sum_{i>=0} i**j x**i`` for integer ``j >= 0`` and ``0 < x < 1``.

    Uses ``x A_j(x) / (1-x)**(j+1)`` with the Eulerian polynomial ``A_j``.
    """
    if j == 0:
        return 1 / (1 - x)
    poly = 0
    for coeff in reversed(eulerian_row(j)):
        poly = poly * x + coeff
    return x * poly / (1 - x) ** (j + 1)


def _require_convergent(x):
    if not certainly_less(x, 1):
        raise DivergentSeries(f"ratio {x!r} is not certifiably below 1")


def shifted_sum(d, a, x, tolerance=Fraction(1, 10**40)):
    """Enclosure of ``sum_{i>=0} (d + i)**a * x**i`` for ``d > 0``.

    Integer ``a`` is summed in closed form by binomial expansion (all terms
    positive).  Otherwise partial sums are taken until the geometric tail
    majorant drops below ``tolerance``.
    """
    _require_convergent(x)
    if lower(d) <= 0:
        raise ScalarError("shift must be positive")
    if is_exact(a) and lower(a).denominator == 1:
        a = int(lower(a))
        total = 0
        for j in range(a + 1):
            total = total + math.comb(a, j) * d ** (a - j) * polylog_neg(j, x)
        return total
    return _majorant_sum(d, a, x, tolerance)


def _majorant_sum(d, a, x, tolerance):
    # (d+i+1)^a / (d+i)^a decreases in i, so from index i the remaining terms are
    # dominated by a geometric series with ratio ((d+i+1)/(d+i))^a * x
    partial = Fraction(0)
    xi = Fraction(1)
    i = 0
    while True:
        term = pow_real(d + i, a) * xi
        partial = partial + term
        i += 1
        xi = xi * x
        if i % 8:
            continue
        rho = pow_real((d + i + 1) / (d + i), a) * x
        if not certainly_less(rho, 1):
            continue
        tail = pow_real(d + i, a) * xi / (1 - upper(rho))
        if upper(tail) <= tolerance or i > 100000:
            return partial + CertifiedValue(Fraction(0), upper(tail))


def polygeom_sum(spec: SeriesSpec, from_index: int = 1, tolerance=Fraction(1, 10**40)):
    """Enclosure of ``scale * sum_{n >= from_index} n**power * ratio**n``.

    Exact (a Fraction) for an integer power and an exact rational ratio.
    """
    x = spec.ratio
    _require_convergent(x)
    n0 = max(from_index, 0)
    if n0 == 0:
        head = 1 if lower(spec.power) == 0 else 0
        return spec.scale * (head + polygeom_sum(SeriesSpec(spec.power, x), 1, tolerance))
    value = x**n0 * shifted_sum(Fraction(n0), spec.power, x, tolerance)
    return spec.scale * value


def tail_closed_form_linear(n: int, x):
    """``sum_{k>n} k x**k = x**(n+1) ((n+1) - n x) / (1-x)**2``."""
    _require_convergent(x)
    return x ** (n + 1) * ((n + 1) - n * x) / (1 - x) ** 2


def partial_sum(spec: SeriesSpec, start: int, stop: int):
    """Brute-force ``scale * sum_{start <= n < stop} n**power ratio**n``."""
    total = 0
    for n in range(start, stop):
        total = total + pow_real(n, spec.power) * spec.ratio**n if n else total
    return spec.scale * total


def star_ratio(r, s):
    """``2 * 3**(-r/s)``, the ratio of the AC bound-chain series for exponent ``s``."""
    return 2 * pow_real(Fraction(1, 3), Fraction(r) / Fraction(s))


def ratio_test(spec):
    """Limit of consecutive term ratios, as an enclosure (or exact rational)."""
    if isinstance(spec, StarFamily):
        return star_ratio(spec.r, spec.s)
    return spec.ratio


def compare_star_ratio_to_one(r, s) -> int:
    """Sign of ``2 * 3**(-r/s) - 1`` decided exactly for rational ``r, s``.

    ``2 * 3**(-r/s) > 1`` iff ``2**s > 3**r``; raising both sides to the
    common denominator turns this into an integer comparison.
    """
    r, s = Fraction(r), Fraction(s)
    den = r.denominator * s.denominator
    lhs = 2 ** int(s * den)
    rhs = 3 ** int(r * den)
    return (lhs > rhs) - (lhs < rhs)


def lr_norm_series(r: int | Fraction, tolerance=Fraction(1, 10**40)):
    """``(2**(2r-1) - 1) * sum_n n**r (2/12**r)**n``, the series for the r-th power norm of F."""
    scale = pow_real(2, 2 * Fraction(r) - 1) - 1
    ratio = 2 / pow_real(12, Fraction(r))
    return polygeom_sum(SeriesSpec(Fraction(r), ratio, scale), 1, tolerance)

