"""L^r means, continuity moduli, one-sided derivate probes and decay scans.

Means use the normalization of the L^r derivative definition:
``(1/h * int_{-h}^{h} |f(x+t) - f(x) - alpha t|^r dt) ** (1/r)``, clipped to
``[0, 1]`` near the ends of the interval.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .scalar import (
    ScalarError,
    as_enclosure,
    format_bound,
    lower,
    root,
    simplify,
    upper,
)
from .scheme import PathPoint, SchemeParams, UndecidedAtDepth, _cmp
from .stepfn import DEFAULT_TOLERANCE, CounterexampleF, MonotoneStep, Offset, StepFunction


@dataclass(frozen=True)
class Target:
    """``f = F + step`` where ``F`` is the counterexample (optional)."""

    params: SchemeParams = field(default_factory=SchemeParams)
    with_F: bool = True
    step: StepFunction | None = None

    @classmethod
    def minor_candidate(cls, params: SchemeParams, R: MonotoneStep | None = None) -> "Target":
        """``m = F - R``."""
        return cls(params, True, -R if R is not None else None)

    @classmethod
    def step_only(cls, step: StepFunction, params: SchemeParams | None = None) -> "Target":
        return cls(params or SchemeParams(), False, step)

    @property
    def F(self) -> CounterexampleF:
        return _counterexample(self.params)

    def __call__(self, x):
        xv = self.F.scheme.point_value(x)
        v = Fraction(0)
        if self.with_F:
            fx = 0 if isinstance(x, PathPoint) else self.F.eval(xv)
            if isinstance(fx, UndecidedAtDepth):
                raise ScalarError(f"F undecided at {x!r} to depth {fx.depth}")
            v += fx
        if self.step is not None:
            v += self.step(xv)
        return v

    def positive_part_integral(self, a, b, anchor, c, alpha, sign: int, s, tolerance):
        """``int_a^b [sign * (f(y) - c - alpha (y - anchor))]_+ ** s dy``."""
        g = Offset(c, Fraction(alpha), anchor, -self.step if self.step is not None else None)
        if sign < 0:
            g = -g
        sigma = sign if self.with_F else 0
        return self.F.integrate(a, b, sigma, g, s, tolerance)


_F_CACHE: dict[SchemeParams, CounterexampleF] = {}


def _counterexample(params: SchemeParams) -> CounterexampleF:
    F = _F_CACHE.get(params)
    if F is None:
        F = _F_CACHE.setdefault(params, CounterexampleF(params))
    return F


def as_target(f) -> Target:
    if isinstance(f, Target):
        return f
    if isinstance(f, CounterexampleF):
        return Target(f.params)
    raise TypeError(f"cannot use {type(f).__name__} as an integrand")


@dataclass(frozen=True)
class MeanProbe:
    x: Fraction | PathPoint
    h: Fraction
    alpha: Fraction = Fraction(0)
    r: Fraction = Fraction(1)

    def __post_init__(self):
        if Fraction(self.h) <= 0:
            raise ScalarError("probe radius must be positive")
        if Fraction(self.r) < 1:
            raise ScalarError("exponent must be at least 1")


def _sides(target: Target, x, h):
    sch = target.F.scheme
    xv = sch.point_value(x)
    left = xv - h if _cmp(xv - h, 0) > 0 else Fraction(0)
    right = xv + h if _cmp(xv + h, 1) < 0 else Fraction(1)
    return xv, left, right


def _abs_power_integral(target: Target, a, b, xv, c, alpha, s, tolerance):
    if a == b or (not isinstance(a, PathPoint) and not isinstance(b, PathPoint) and _cmp(a, b) >= 0):
        return Fraction(0)
    pos = target.positive_part_integral(a, b, xv, c, alpha, 1, s, tolerance / 4)
    neg = target.positive_part_integral(a, b, xv, c, alpha, -1, s, tolerance / 4)
    return pos + neg


def _mean(integral, h, r):
    return simplify(root(integral / h, r))


def one_sided_mean(f, x, h, alpha=0, r=1, side: str = "right", tolerance=DEFAULT_TOLERANCE):
    """``(1/h int |f(x+t) - f(x) - alpha t|^r)^(1/r)`` over one side only."""
    target = as_target(f)
    xv, left, right = _sides(target, x, h)
    c = target(x)
    if side == "right":
        val = _abs_power_integral(target, x, right, xv, c, alpha, r, tolerance)
    else:
        val = _abs_power_integral(target, left, x, xv, c, alpha, r, tolerance)
    return _mean(val, Fraction(h), r)


def lr_mean(f, probe: MeanProbe, tolerance=DEFAULT_TOLERANCE):
    """Two-sided L^r mean of ``f(x+t) - f(x) - alpha t`` at radius ``h``."""
    target = as_target(f)
    xv, left, right = _sides(target, probe.x, probe.h)
    c = target(probe.x)
    total = _abs_power_integral(target, left, probe.x, xv, c, probe.alpha, probe.r, tolerance / 2)
    total = total + _abs_power_integral(target, probe.x, right, xv, c, probe.alpha, probe.r, tolerance / 2)
    return _mean(total, Fraction(probe.h), probe.r)


def continuity_modulus(f, x, h, r=1, tolerance=DEFAULT_TOLERANCE):
    """The alpha-free mean; one-sided automatically at 0 and 1."""
    return lr_mean(f, MeanProbe(x, Fraction(h), Fraction(0), Fraction(r)), tolerance)


def derivate_probe(
    f,
    x,
    alpha,
    h,
    r=1,
    tolerance=DEFAULT_TOLERANCE,
    upper_: bool = True,
    side: str = "right",
):
    """Mean of the truncated increment used by the one-sided L^r derivates.

    ``upper_=True, side="right"`` is ``(1/h int_0^h [f(x+t) - f(x) - alpha t]_+^r dt)^(1/r)``.
    The lower variants flip the sign of the increment; the left variants
    use ``f(x) - f(x-t)`` over ``[x-h, x]``.
    """
    target = as_target(f)
    xv, left, right = _sides(target, x, h)
    c = target(x)
    if side == "right":
        sign = 1 if upper_ else -1
        val = target.positive_part_integral(x, right, xv, c, alpha, sign, r, tolerance)
    else:
        sign = -1 if upper_ else 1
        val = target.positive_part_integral(left, x, xv, c, alpha, sign, r, tolerance)
    return _mean(val, Fraction(h), r)


def derivate_probe_upper_right(f, x, alpha, h, r=1, tolerance=DEFAULT_TOLERANCE):
    sch = as_target(f).F.scheme
    xv = sch.point_value(x)
    if _cmp(xv, 1) >= 0 or _cmp(xv + h, 1) > 0:
        raise ScalarError("need 0 <= x < 1 and h <= 1 - x")
    return derivate_probe(f, x, alpha, h, r, tolerance, True, "right")


# ---------------------------------------------------------------------------
# decay scans


class DecayVerdict(enum.Enum):
    CONSISTENT = "ConsistentWith_o_h"
    VIOLATES = "Violates_o_h"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class DecaySeries:
    h_values: list[Fraction]
    means: list
    quotients: list

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["h", "lower", "upper", "quotient_lower", "quotient_upper"])
        for h, m, q in zip(self.h_values, self.means, self.quotients):
            w.writerow([
                f"{h.numerator}/{h.denominator}",
                format_bound(lower(m), "down"),
                format_bound(upper(m), "up"),
                format_bound(lower(q), "down"),
                format_bound(upper(q), "up"),
            ])
        return buf.getvalue()


@dataclass
class DecayResult:
    series: DecaySeries
    verdict: DecayVerdict
    witness: Fraction | None = None


def aligned_schedule(params: SchemeParams, count: int = 10, start: int = 1) -> list[Fraction]:
    """Radii ``r_n + u_n``: the distance from a left segment endpoint to the far end of u_n."""
    sch = _counterexample(params).scheme
    out = []
    for n in range(start, start + count):
        h = sch.residual_length(n) + sch.u_length(n)
        out.append(h)
    return out


def decay_scan(
    f,
    x,
    alpha=0,
    r=1,
    h_schedule: Sequence[Fraction] | None = None,
    floor=Fraction(1),
    tolerance=Fraction(1, 10**20),
) -> DecayResult:
    """Evaluate mean/h along a decreasing schedule and classify the trend.

    A certified exceedance of ``floor`` refutes o(h); a nonincreasing run of
    upper bounds ending below ``floor`` is only consistent with it.
    """
    target = as_target(f)
    hs = list(h_schedule) if h_schedule is not None else aligned_schedule(target.params, 10)
    if len(hs) < 8:
        raise ScalarError("decay scans need at least 8 radii")
    if any(lower(b) >= lower(a) for a, b in zip(hs, hs[1:])):
        raise ScalarError("schedule must be strictly decreasing")
    means, quotients = [], []
    for h in hs:
        m = lr_mean(target, MeanProbe(x, h, Fraction(alpha), Fraction(r)), tolerance)
        means.append(m)
        quotients.append(simplify(as_enclosure(m) / h))
    series = DecaySeries(list(hs), means, quotients)
    for h, q in zip(hs, quotients):
        if lower(q) > floor:
            return DecayResult(series, DecayVerdict.VIOLATES, h)
    ups = [upper(q) for q in quotients]
    if all(b <= a for a, b in zip(ups, ups[1:])) and ups[-1] < floor:
        return DecayResult(series, DecayVerdict.CONSISTENT)
    return DecayResult(series, DecayVerdict.INCONCLUSIVE)
