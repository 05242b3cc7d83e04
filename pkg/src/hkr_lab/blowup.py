"""Blow-up of the upper-right derivate of candidate minor functions ``m = F - R``.

At a point x of P lying in the left child at rank n, take ``h_n`` so that
``x + h_n`` is the right end of the rank-n removed interval next to x.  The
increment of m over ``[x, x + h_n]`` picks up the whole core ``v_n`` where
``F = n``, so ``(1/h_n^2) int_0^{h_n} [m(x+t) - m(x) - alpha t]_+ dt`` is at
least ``v_n / h_n^2 > v_n / (4 u_n^2)``, which grows like ``(4/3)^(n r)``.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass, field
from fractions import Fraction

from .lrcalc import Target
from .scalar import (
    CertifiedValue,
    ScalarError,
    as_enclosure,
    certainly_le,
    certainly_less,
    format_bound,
    format_rational,
    is_exact,
    lower,
    parse_rational,
    pow_real,
    simplify,
    upper,
)
from .scheme import (
    PathPoint,
    RemovedInterval,
    SchemeParams,
    SiteIneligible,
    scheme_for,
)
from .stepfn import DEFAULT_TOLERANCE, MonotoneStep


@dataclass(frozen=True)
class BlowupSite:
    x: PathPoint
    n: int
    h: Fraction | CertifiedValue
    u: RemovedInterval
    end: PathPoint  # x + h, the right end of u


def make_site(params: SchemeParams, x_path: PathPoint | str = PathPoint("", "L"), n: int = 1) -> BlowupSite:
    """The blow-up site at ``x`` and rank ``n``.

    ``x`` must lie in the left child at rank n (its n-th step is ``L``).
    """
    x = PathPoint.parse(x_path) if isinstance(x_path, str) else x_path
    sch = scheme_for(params)
    if n < 1:
        raise ScalarError("rank must be at least 1")
    if n > sch.depth_cap:
        raise ScalarError(f"rank {n} exceeds depth cap {sch.depth_cap}")
    if x.bit(n - 1) != "L":
        raise SiteIneligible(f"{x} takes the right branch at rank {n}")
    parent = "".join(x.bit(i) for i in range(n - 1))
    u = sch.removed_interval(parent)
    end = PathPoint(parent + "R", "L")
    h = simplify(sch.point_value(end) - sch.point_value(x))
    return BlowupSite(x, n, h, u, end)


def _minor(params: SchemeParams, R: MonotoneStep | None) -> Target:
    return Target.minor_candidate(params, R if R is not None and R.breakpoints else None)


def blowup_integral(params: SchemeParams, site: BlowupSite, alpha=0, R: MonotoneStep | None = None,
                    tolerance=DEFAULT_TOLERANCE):
    """``int_0^{h_n} [m(x+t) - m(x) - alpha t]_+ dt`` for ``m = F - R``."""
    m = _minor(params, R)
    sch = scheme_for(params)
    xv = sch.point_value(site.x)
    c = -R(xv) if R is not None and R.breakpoints else Fraction(0)
    return m.positive_part_integral(site.x, site.end, xv, c, parse_rational(alpha), 1, Fraction(1), tolerance)


def blowup_quantity(params: SchemeParams, site: BlowupSite, alpha=0, R: MonotoneStep | None = None,
                    tolerance=DEFAULT_TOLERANCE):
    """``(1/h_n^2) int_0^{h_n} [m(x+t) - m(x) - alpha t]_+ dt``."""
    val = blowup_integral(params, site, alpha, R, tolerance)
    return simplify(val / (site.h * site.h))


@dataclass(frozen=True)
class LowerBound:
    value: Fraction | CertifiedValue  # (1/(4 (4^r - 2))) (4/3)^(n r)
    intermediate: Fraction | CertifiedValue  # v_n / (4 u_n^2)
    equal: bool


def blowup_lower_bound(params: SchemeParams, n: int) -> LowerBound:
    if n < 1:
        raise ScalarError("rank must be at least 1")
    sch = scheme_for(params)
    un, vn = sch.u_length(n), sch.v_length(n)
    inter = simplify(vn / (4 * un * un))
    closed = simplify(pow_real(Fraction(4, 3), n * params.r, params.precision) / (4 * (sch.four_r - 2)))
    if is_exact(inter) and is_exact(closed):
        equal = inter == closed
    else:
        a, b = as_enclosure(inter), as_enclosure(closed)
        equal = a.lo <= b.hi and b.lo <= a.hi
    return LowerBound(closed, inter, equal)


def core_margin(params: SchemeParams, site: BlowupSite, alpha=0, R: MonotoneStep | None = None):
    """Lower bound of ``F - (R(y) - R(x)) - alpha (y - x)`` over ``y`` in the core ``v_n``."""
    sch = scheme_for(params)
    core = site.u.core
    xv = sch.point_value(site.x)
    alpha = parse_rational(alpha)
    rise = Fraction(0)
    if R is not None and R.breakpoints:
        lo_val, hi_val = R.range_on(xv, core.hi)
        rise = hi_val - lo_val
    drift = max(alpha, Fraction(0)) * (core.hi - xv)
    return simplify(site.n - rise - drift)


class BlowupVerdict(enum.Enum):
    DIVERGES = "Diverges"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class BlowupRow:
    n: int
    h: Fraction | CertifiedValue
    quantity: Fraction | CertifiedValue
    v_over_h2: Fraction | CertifiedValue
    closed_bound: Fraction | CertifiedValue
    core_margin: Fraction | CertifiedValue
    certified: bool


@dataclass
class DivergenceReport:
    alpha: Fraction
    rows: list[BlowupRow]
    skipped: list[tuple[int, str]]
    ratio: Fraction | CertifiedValue
    verdict: BlowupVerdict = BlowupVerdict.INCONCLUSIVE
    threshold: Fraction = field(default=Fraction(0))

    @property
    def all_certified(self) -> bool:
        return all(r.certified for r in self.rows)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "h_n", "quantity_lower", "quantity_upper", "v_n_over_hn2", "closed_bound", "certified"])
        for row in self.rows:
            w.writerow([
                row.n,
                _cell(row.h),
                format_bound(lower(row.quantity), "down"),
                format_bound(upper(row.quantity), "up"),
                _cell(row.v_over_h2),
                _cell(row.closed_bound),
                str(row.certified).lower(),
            ])
        return buf.getvalue()

    def to_json(self) -> dict:
        from .scalar import serialize

        return {
            "alpha": format_rational(self.alpha),
            "threshold": format_rational(self.threshold),
            "ratio": serialize(self.ratio),
            "verdict": self.verdict.value,
            "skipped": [{"n": n, "reason": why} for n, why in self.skipped],
            "rows": [
                {
                    "n": r.n,
                    "h_n": serialize(r.h),
                    "quantity": serialize(r.quantity),
                    "v_n_over_hn2": serialize(r.v_over_h2),
                    "closed_bound": serialize(r.closed_bound),
                    "core_margin": serialize(r.core_margin),
                    "certified": r.certified,
                }
                for r in self.rows
            ],
        }


def _cell(v) -> str:
    if is_exact(v):
        return format_rational(lower(v))
    return format_bound(lower(v), "down")


def divergence_report(
    params: SchemeParams,
    x_path: PathPoint | str = PathPoint("", "L"),
    alpha=0,
    R: MonotoneStep | None = None,
    n_range: range = range(1, 21),
    tolerance=DEFAULT_TOLERANCE,
) -> DivergenceReport:
    """Certify, rank by rank, quantity > v_n/h_n^2 >= v_n/(4 u_n^2) = closed bound.

    Ranks at or below ``R(1) + |alpha| + 1`` are skipped, as are ranks where
    x takes the right branch.  Each row also certifies that the truncated
    increment exceeds 1 on the whole core.
    """
    alpha = parse_rational(alpha)
    R1 = R.at_one if R is not None else Fraction(0)
    threshold = R1 + abs(alpha) + 1
    rows: list[BlowupRow] = []
    skipped: list[tuple[int, str]] = []
    for n in n_range:
        if n <= threshold:
            skipped.append((n, f"n <= R(1) + |alpha| + 1 = {format_rational(threshold)}"))
            continue
        try:
            site = make_site(params, x_path, n)
        except SiteIneligible as exc:
            skipped.append((n, str(exc)))
            continue
        sch = scheme_for(params)
        q = blowup_quantity(params, site, alpha, R, tolerance)
        vh = simplify(sch.v_length(n) / (site.h * site.h))
        lb = blowup_lower_bound(params, n)
        margin = core_margin(params, site, alpha, R)
        ok = (
            certainly_less(1, margin)
            and certainly_less(vh, q)
            and certainly_le(lb.value, vh)
            and lb.equal
            and certainly_le(site.h, sch.residual_length(n) + sch.u_length(n))
            and certainly_less(site.h, 2 * sch.u_length(n))
        )
        rows.append(BlowupRow(n, site.h, q, vh, lb.value, margin, ok))
    ratio = simplify(pow_real(Fraction(4, 3), params.r, params.precision))
    steps_ok = all(_step_ok(a, b, ratio) for a, b in zip(rows, rows[1:]))
    verdict = BlowupVerdict.DIVERGES if len(rows) >= 2 and all(r.certified for r in rows) and steps_ok else BlowupVerdict.INCONCLUSIVE
    return DivergenceReport(alpha, rows, skipped, ratio, verdict, threshold)


def _step_ok(a: BlowupRow, b: BlowupRow, ratio) -> bool:
    """Consecutive closed bounds grow by ``(4/3)^r`` per rank, and certifiably grow."""
    step = simplify(b.closed_bound / a.closed_bound)
    expected = simplify(ratio ** (b.n - a.n))
    if is_exact(step) and is_exact(expected):
        same = step == expected
    else:
        e, f = as_enclosure(step), as_enclosure(expected)
        same = e.lo <= f.hi and f.lo <= e.hi
    return same and certainly_less(1, step)
