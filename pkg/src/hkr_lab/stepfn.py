"""The counterexample function F and certified integration of its power integrands.

``F`` equals ``k`` on every rank-``k`` core and ``0`` elsewhere (margins,
core endpoints, and P).  All integrals reduce to

    integral over [a, b] of  [sigma * F(y) - g(y)]_+ ** s  dy

with ``sigma`` in ``{-1, 0, 1}`` and ``g`` affine plus a step function.  The
interval is split along the construction: pieces inside removed intervals
are integrated in closed form; residual segments lying entirely inside the
interval are summed over their infinitely many cores with the poly-geometric
closed forms (or certified majorants); only segments still cut by an
endpoint at the depth limit are bounded rather than evaluated.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

from .scalar import (
    CertifiedValue,
    ScalarError,
    as_enclosure,
    is_exact,
    lower,
    parse_rational,
    positive_part,
    pow_nonneg,
    pow_real,
    simplify,
    upper,
)
from .scheme import (
    DepthError,
    FullSegment,
    PartialSegment,
    PathPoint,
    RemovedPiece,
    ResidualSegment,
    SchemeParams,
    UndecidedAtDepth,
    InCore,
    _cmp,
    scheme_for,
)
from .series import shifted_sum

DEFAULT_TOLERANCE = Fraction(1, 10**30)
MAX_REFINEMENTS = 20000


# ---------------------------------------------------------------------------
# step functions


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous step function on [0, 1].

    ``values[i]`` holds on ``[breakpoints[i-1], breakpoints[i])`` with the
    conventions ``breakpoints[-1] = 0`` and the last value holding through 1.
    """

    breakpoints: tuple[Fraction, ...] = ()
    values: tuple[Fraction, ...] = (Fraction(0),)

    def __post_init__(self):
        bps = tuple(parse_rational(b) for b in self.breakpoints)
        vals = tuple(parse_rational(v) for v in self.values)
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)
        if len(vals) != len(bps) + 1:
            raise ScalarError("a step function needs one more value than breakpoints")
        if any(not 0 <= b <= 1 for b in bps):
            raise ScalarError("breakpoints must lie in [0, 1]")
        if any(b1 >= b2 for b1, b2 in zip(bps, bps[1:])):
            raise ScalarError("breakpoints must be strictly increasing")

    def __call__(self, x) -> Fraction:
        i = 0
        for b in self.breakpoints:
            if _cmp(x, b) >= 0:
                i += 1
            else:
                break
        return self.values[i]

    def __neg__(self) -> "StepFunction":
        return StepFunction(self.breakpoints, tuple(-v for v in self.values))

    def shifted(self, c) -> "StepFunction":
        return StepFunction(self.breakpoints, tuple(v + c for v in self.values))

    def range_on(self, lo, hi) -> tuple[Fraction, Fraction]:
        """Min and max of the values taken on ``[lo, hi)`` up to null sets."""
        vals = [self(lo)]
        for b, v in zip(self.breakpoints, self.values[1:]):
            if _cmp(b, lo) > 0 and _cmp(b, hi) < 0:
                vals.append(v)
        return min(vals), max(vals)

    def breaks_inside(self, lo, hi) -> list[Fraction]:
        return [b for b in self.breakpoints if _cmp(b, lo) > 0 and _cmp(b, hi) < 0]


@dataclass(frozen=True)
class MonotoneStep(StepFunction):
    """Nondecreasing right-continuous step function; ``R(1)`` is the last value."""

    def __post_init__(self):
        super().__post_init__()
        if any(v1 > v2 for v1, v2 in zip(self.values, self.values[1:])):
            raise ScalarError("MonotoneStep values must be nondecreasing")

    @property
    def total_variation(self) -> Fraction:
        return self.values[-1] - self.values[0]

    @property
    def at_one(self) -> Fraction:
        return self.values[-1]

    @classmethod
    def zero(cls) -> "MonotoneStep":
        return cls((), (Fraction(0),))

    @classmethod
    def from_json(cls, obj: dict | str) -> "MonotoneStep":
        if isinstance(obj, str):
            obj = json.loads(obj)
        if not isinstance(obj, dict) or "breakpoints" not in obj or "values" not in obj:
            raise ScalarError("MonotoneStep JSON needs 'breakpoints' and 'values'")
        return cls(tuple(obj["breakpoints"]), tuple(obj["values"]))

    def to_json(self) -> dict:
        return {
            "breakpoints": [f"{b.numerator}/{b.denominator}" for b in self.breakpoints],
            "values": [f"{v.numerator}/{v.denominator}" for v in self.values],
        }


def eval_monotone(R: MonotoneStep, x) -> Fraction:
    if _cmp(x, 0) < 0 or _cmp(x, 1) > 0:
        raise ScalarError("x outside [0, 1]")
    return R(x)


@dataclass(frozen=True)
class Offset:
    """``g(y) = const + slope * (y - anchor) + step(y)``."""

    const: Fraction | CertifiedValue = Fraction(0)
    slope: Fraction = Fraction(0)
    anchor: Fraction | CertifiedValue = Fraction(0)
    step: StepFunction | None = None

    def __neg__(self) -> "Offset":
        return Offset(-self.const, -self.slope, self.anchor, -self.step if self.step else None)

    def at(self, y):
        v = self.const + self.slope * (y - self.anchor)
        if self.step is not None:
            v = v + self.step(y)
        return v

    def uniform_on(self, lo, hi) -> bool:
        return self.slope == 0 and (self.step is None or not self.step.breaks_inside(lo, hi))

    def range_on(self, lo, hi):
        """Enclosure of ``g`` over ``[lo, hi]``, with endpoints summed exactly."""
        g_lo, g_hi = lower(self.const), upper(self.const)
        if self.slope:
            ends = (self.slope * (lo - self.anchor), self.slope * (hi - self.anchor))
            g_lo += min(lower(e) for e in ends)
            g_hi += max(upper(e) for e in ends)
        if self.step is not None:
            smin, smax = self.step.range_on(lo, hi)
            g_lo, g_hi = g_lo + smin, g_hi + smax
        return g_lo if g_lo == g_hi else CertifiedValue(g_lo, g_hi)

    def linear_pieces(self, lo, hi):
        """Split ``[lo, hi]`` where the step jumps; yields ``(lo_i, hi_i, g(lo_i))``."""
        cuts = self.step.breaks_inside(lo, hi) if self.step is not None else []
        edges = [lo, *cuts, hi]
        for p, q in zip(edges, edges[1:]):
            g0 = self.const + self.slope * (p - self.anchor)
            if self.step is not None:
                g0 = g0 + self.step(p)
            yield p, q, g0


# ---------------------------------------------------------------------------
# the counterexample


@dataclass(frozen=True)
class TailBound:
    """``bound`` dominates everything ranks above ``rank_cutoff`` can contribute."""

    rank_cutoff: int
    bound: Fraction | CertifiedValue


def _ppow(w, s):
    """``[w]_+ ** s``."""
    w = positive_part(w)
    if is_exact(w) and is_exact(s) and lower(s).denominator == 1:
        return lower(w) ** int(lower(s))
    return pow_nonneg(w, s)


class CounterexampleF:
    """F = k on each rank-k core, 0 elsewhere."""

    def __init__(self, params: SchemeParams | None = None):
        self.params = params or SchemeParams()
        self.scheme = scheme_for(self.params)
        self._y = 2 / pow_real(12, self.params.r, self.params.precision)  # 2**k v_k = (4^r-2) y^k
        self._cache: dict = {}

    def __repr__(self) -> str:
        return f"CounterexampleF(r={self.params.r})"

    # pointwise --------------------------------------------------------------

    def eval(self, x, max_rank: int | None = None):
        c = self.scheme.locate(x, max_rank)
        if isinstance(c, InCore):
            return c.rank
        if isinstance(c, UndecidedAtDepth):
            return c
        return 0

    __call__ = eval

    def value_at_point_of_p(self, x) -> int:
        return 0

    # rank sums --------------------------------------------------------------

    def _weight(self, m: int):
        """``(4^r - 2) / 2**(m+1)``: rank-k cores of a rank-m segment total ``weight * y**k``."""
        key = ("w", m)
        if key not in self._cache:
            self._cache[key] = (self.scheme.four_r - 2) / Fraction(2 ** (m + 1))
        return self._cache[key]

    def core_measure(self, m: int):
        """Total length of all cores inside one rank-m residual segment."""
        key = ("cm", m)
        if key not in self._cache:
            y = self._y
            self._cache[key] = self._weight(m) * y ** (m + 1) / (1 - y)
        return self._cache[key]

    def cores_sum(self, m: int, sigma: int, g0, s, tol=DEFAULT_TOLERANCE):
        """``sum_{k>m} 2**(k-1-m) v_k [sigma k - g0]_+ ** s`` for one rank-m segment.

        An enclosure ``g0`` is handled by evaluating at both ends: the sum is
        monotone in ``g0``.
        """
        if isinstance(g0, CertifiedValue) and not g0.exact_flag:
            a = self.cores_sum(m, sigma, g0.lo, s, tol)
            b = self.cores_sum(m, sigma, g0.hi, s, tol)
            return CertifiedValue(min(lower(a), lower(b)), max(upper(a), upper(b)), self.params.precision)
        g0 = lower(g0)
        key = (m, sigma, g0, s)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if sigma == 0:
            val = self.core_measure(m) * _ppow(-g0, s)
        elif sigma < 0:
            # only ranks k < -g0 contribute
            val = Fraction(0)
            for k in range(m + 1, max(m + 1, math.ceil(-g0))):
                val = val + self._weight(m) * self._y**k * _ppow(-k - g0, s)
        else:
            # ranks k <= g0 contribute nothing
            K = max(m + 1, math.floor(g0) + 1)
            val = self._weight(m) * self._y**K * shifted_sum(K - g0, s, self._y, tol)
        val = simplify(val)
        if len(self._cache) < 200000:
            self._cache[key] = val
        return val

    def tail_bound(self, n: int, s=1, tol=DEFAULT_TOLERANCE) -> TailBound:
        """Bound on the integral of |F|**s over all cores of rank > n."""
        y = self._y
        bound = self._weight(0) * y ** (n + 1) * shifted_sum(Fraction(n + 1), s, y, tol)
        return TailBound(n, upper(bound))

    # integration ------------------------------------------------------------

    def integrate(self, a, b, sigma: int = 1, g: Offset | None = None, s=1, tolerance=DEFAULT_TOLERANCE):
        """Enclosure of the integral over ``[a, b]`` of ``[sigma F - g]_+ ** s``.

        ``a`` and ``b`` may be numbers or :class:`PathPoint` addresses.
        Returns a Fraction when the result is exact.
        """
        g = g or Offset()
        if lower(s) < 1:
            raise ScalarError("exponent must be at least 1")
        sch = self.scheme
        va, vb = sch.point_value(a), sch.point_value(b)
        if _cmp(va, 0) < 0 or _cmp(vb, 1) > 0:
            raise ScalarError("integration range must lie in [0, 1]")
        c = 0 if a == b else _cmp(va, vb)
        if c > 0:
            raise ScalarError("integration range is reversed")
        if c == 0:
            return Fraction(0)

        if sigma == 0:
            # F does not enter; the integrand is piecewise linear in y
            return simplify(self._constant_piece(va, vb, 0, g, s))

        tol = Fraction(tolerance)
        budget: dict[str, object] = {}
        visits = [0]

        def allowed(m):
            # segment lengths sum to at most 1, so the widths sum to at most tol
            return tol * lower(self.scheme.residual_length(m))

        def refine(seg: ResidualSegment) -> bool:
            if g.uniform_on(seg.lo, seg.hi):
                return False
            exact = self._poly_segment(seg, sigma, g, s, allowed(seg.rank))
            if exact is not None:
                budget[seg.path] = exact
                return False
            val = self._full_segment(seg, sigma, g, s, allowed(seg.rank))
            visits[0] += 1
            if upper(val) - lower(val) <= allowed(seg.rank) or visits[0] > MAX_REFINEMENTS:
                budget[seg.path] = val
                return False
            return True

        # rational points of P get exact addresses; interior ones are summed in closed form
        a = sch.address_of(a) or a
        b = sch.address_of(b) or b
        total = Fraction(0)
        a, b, total = self._split_periodic_ends(a, b, sigma, g, s)
        for piece in sch.decompose(a, b, refine):
            if isinstance(piece, FullSegment):
                seg = piece.segment
                val = budget.pop(seg.path, None)
                if val is None:
                    val = self._full_segment(seg, sigma, g, s, allowed(seg.rank))
            elif isinstance(piece, RemovedPiece):
                val = self._removed_piece(piece, sigma, g, s)
            else:
                val = self._partial_segment(piece, sigma, g, s, allowed(piece.segment.rank))
            total = total + val
        total = simplify(total)
        if upper(total) - lower(total) > 2 * tol:
            raise DepthError(
                f"tolerance {float(tol):.3g} unreachable within depth cap {self.params.depth_cap}"
            )
        return total

    # interior points of P with periodic addresses ---------------------------

    def _split_periodic_ends(self, a, b, sigma, g: Offset, s):
        """Peel off the stretch between each periodic endpoint and a segment end.

        Returns new endpoints and the exact value of the removed stretches, or
        the inputs unchanged when the closed form does not apply.
        """
        if (
            not self.params.exact_mode
            or sigma == 0
            or g.slope != 0
            or not isinstance(g.const, Fraction)
            or not is_exact(s)
            or lower(s).denominator != 1
        ):
            return a, b, Fraction(0)
        s = int(lower(s))
        total = Fraction(0)
        for end in ("a", "b"):
            pt, other = (a, b) if end == "a" else (b, a)
            if not isinstance(pt, PathPoint) or pt.tail_constant(len(pt.prefix)) is not None:
                continue
            found = self._periodic_rank(pt, other, end, sigma, g)
            if found is None:
                continue
            M, c = found
            path = "".join(pt.bit(i) for i in range(M))
            # the lower end passes the L turns on its way up, the upper end the R turns
            total = total + self._periodic_stretch(pt, M, "L" if end == "a" else "R", sigma, c, s)
            if end == "a":
                a = PathPoint(path, "R")
            else:
                b = PathPoint(path, "L")
        return a, b, total

    def _periodic_rank(self, pt: PathPoint, other, end, sigma, g: Offset, limit: int = 512):
        """A rank M past the prefix where the closed form applies, and the offset there."""
        sch = self.scheme
        M = len(pt.prefix)
        while M <= limit:
            path = "".join(pt.bit(i) for i in range(M))
            if M <= sch.depth_cap:
                seg = sch.residual_segment(path)
                rel = sch.relation(other, seg)
                separated = rel <= -1 if end == "b" else rel >= 1
                if separated and (g.step is None or not g.step.breaks_inside(seg.lo, seg.hi)):
                    c = g.at((seg.lo + seg.hi) / 2)
                    # past this rank [sigma k - c]_+ is a polynomial in k (or zero)
                    K0 = math.ceil(c) if sigma > 0 else math.ceil(-c)
                    if M + 1 >= K0:
                        return M, c
            M += 1
        return None

    def _periodic_stretch(self, pt: PathPoint, M: int, turn: str, sigma, c, s: int):
        """Integral between the rank-M segment end and ``pt`` of ``[sigma F - c]_+ ** s``.

        Each ``turn`` step at rank m passes one full rank-(m+1) segment and one
        rank-(m+1) removed interval, worth ``T(m) = A 4^(-rm) + 12^(-rm) P(m)``
        with ``P`` of degree ``s``.  Along one residue class of the period the
        terms satisfy the linear recurrence with characteristic polynomial
        ``(z - 4^(-rL)) (z - 12^(-rL))**(s+1)``, which sums the series exactly.
        """
        L = len(pt.cycle)
        r = int(self.params.r)
        roots = [Fraction(1, 4 ** (r * L))] + [Fraction(1, 12 ** (r * L))] * (s + 1)
        total = Fraction(0)
        for i in range(L):
            if pt.bit(M + i) == turn:
                total += _recurrence_sum(lambda j: self._turn_value(M + i + j * L, sigma, c, s), roots)
        return total

    def _turn_value(self, m: int, sigma, c, s: int):
        """Full rank-(m+1) segment plus rank-(m+1) removed interval, by formula."""
        n = m + 1
        four_r = self.scheme.four_r
        phi0 = _ppow(-c, s)
        u = (four_r - 2) / four_r**n
        v = u / self.scheme.three_r**n
        full = self.cores_sum(n, sigma, c, s) + phi0 * (1 / four_r**n - self.core_measure(n))
        return full + v * _ppow(sigma * n - c, s) + phi0 * (u - v)

    def _full_segment(self, seg, sigma, g, s, tol):
        m = seg.rank
        g0 = g.range_on(seg.lo, seg.hi)
        length = self.scheme.residual_length(m)
        zero_part = length - self.core_measure(m)
        return self.cores_sum(m, sigma, g0, s, tol) + zero_part * _ppow(-g0, s)

    def _linear_segment(self, seg, sigma, g: Offset, s):
        """Exact value on a full segment for exponent 1 when the positive part never clips.

        Each rank's cores, and the zero set, are symmetric about the segment
        center, so a linear ``g`` integrates over them to ``g(center)``
        times their measure.  Returns None when some rank straddles zero.
        """
        if s != 1 or (g.step is not None and g.step.breaks_inside(seg.lo, seg.hi)):
            return None
        m = seg.rank
        g_lo, g_hi = lower(g.range_on(seg.lo, seg.hi)), upper(g.range_on(seg.lo, seg.hi))
        gc = g.at((seg.lo + seg.hi) / 2)
        zero_part = self.scheme.residual_length(m) - self.core_measure(m)
        if g_lo >= 0:
            total = Fraction(0)
        elif g_hi <= 0:
            total = -gc * zero_part
        else:
            return None
        w, y = self._weight(m), self._y
        if sigma > 0:
            # ranks k >= g_hi never clip, ranks k <= g_lo vanish
            K = max(m + 1, math.ceil(g_hi))
            if any(g_lo < k < g_hi for k in range(m + 1, K)):
                return None
            if _cmp(K - gc, 0) <= 0:
                return None
            total = total + w * y**K * shifted_sum(K - gc, 1, y)
        elif sigma < 0:
            # [-k - g]_+ is -k - g for k <= -g_hi and vanishes for k >= -g_lo
            top = math.floor(-g_hi)
            if any(-g_hi < k < -g_lo for k in range(m + 1, math.ceil(-g_lo))):
                return None
            for k in range(m + 1, top + 1):
                total = total + w * y**k * (-k - gc)
        return simplify(total)

    def _poly_segment(self, seg, sigma, g: Offset, s, tol):
        """Value on a full segment for integer ``s`` when no rank clips, else None.

        ``[sigma k - g]_+ ** s`` is then a polynomial in ``y`` on every core
        (or zero), and the zero set contributes ``[-g]_+ ** s`` with ``g`` of
        one sign.  Polynomials integrate against the moments of each rank's
        cores about the segment center.  The sum over ranks is exact in exact
        mode and truncated with a certified tail otherwise.
        """
        if s == 1:
            exact = self._linear_segment(seg, sigma, g, s)
            if exact is not None or self.params.exact_mode:
                return exact
        if not is_exact(s) or lower(s).denominator != 1:
            return None
        if g.step is not None and g.step.breaks_inside(seg.lo, seg.hi):
            return None
        s = int(lower(s))
        m = seg.rank
        rng = g.range_on(seg.lo, seg.hi)
        g_lo, g_hi = lower(rng), upper(rng)
        center = (seg.lo + seg.hi) / 2
        gc, alpha = g.at(center), g.slope
        half = self.scheme.residual_length(m) / 2

        def expand(shift):
            # coefficients of (shift - alpha t)**s in powers of t
            return [math.comb(s, j) * shift ** (s - j) * (-alpha) ** j for j in range(s + 1)]

        def on_cores(k, shift):
            mom = self._core_moments(m, k, s)
            return sum((cj * mj for cj, mj in zip(expand(shift), mom) if mj), Fraction(0))

        total = Fraction(0)
        if g_hi <= 0:
            # zero set = segment minus cores, with -g >= 0 throughout
            seg_part = sum(
                (cj * 2 * half ** (j + 1) / (j + 1) for j, cj in enumerate(expand(-gc)) if j % 2 == 0),
                Fraction(0),
            )
            cores = self._rank_sum(m, m + 1, lambda k: on_cores(k, -gc), s, max(-g_lo, 0), tol / 4)
            total = seg_part - cores
        elif g_lo < 0:
            return None
        if sigma > 0:
            K = max(m + 1, math.ceil(g_hi))
            if any(g_lo < k < g_hi for k in range(m + 1, K)):
                return None
            G = max(abs(g_lo), abs(g_hi))
            total = total + self._rank_sum(m, K, lambda k: on_cores(k, k - gc), s, G, tol / 4)
        elif sigma < 0:
            top = math.floor(-g_hi)
            if any(-g_hi < k < -g_lo for k in range(m + 1, math.ceil(-g_lo))):
                return None
            for k in range(m + 1, top + 1):
                total = total + on_cores(k, -k - gc)
        return simplify(total)

    def _rank_sum(self, m: int, K: int, term, s: int, G, tol):
        """``sum_{k >= K} term(k)`` for the per-rank core integrals of a rank-m segment.

        ``term(k)`` is polynomial of degree ``s`` in ``k`` times a combination of
        the geometric bases ``2 12^(-r(i+1)) 16^(-r a)`` (``i`` even, ``i + 2a <= s``):
        exact recurrence summation in exact mode, certified truncation otherwise.
        """
        if self.params.exact_mode:
            r = int(self.params.r)
            roots = []
            for i in range(0, s + 1, 2):
                for a in range((s - i) // 2 + 1):
                    roots += [Fraction(2, 12 ** (r * (i + 1)) * 16 ** (r * a))] * (s + 1)
            return _recurrence_sum(lambda j: term(K + j), roots)
        w, y = self._weight(m), self._y
        total = Fraction(0)
        k = K
        while True:
            # |integrand| <= (k + G)**s on rank-k cores, whose total length is w y**k
            tail = w * y ** (k + 1) * shifted_sum(k + 1 + G, s, y)
            if upper(tail) <= tol or k > K + 400:
                return total + CertifiedValue(-upper(tail), upper(tail), self.params.precision)
            total = total + term(k)
            k += 1

    def _core_moments(self, m: int, k: int, s: int):
        """``int (y - c)**j dy`` over all rank-k cores of a rank-m segment, j = 0..s."""
        key = ("mom", m, k, s)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        sch = self.scheme
        half_v = sch.v_length(k) / 2 if k <= sch.depth_cap + 2 else (
            (sch.four_r - 2) / (sch.four_r * sch.three_r) ** k / 2
        )
        mom = [2 * half_v ** (j + 1) / (j + 1) if j % 2 == 0 else Fraction(0) for j in range(s + 1)]
        for level in range(k - 2, m - 1, -1):
            # children of a rank-level segment sit at +-d from its center
            d = (self._residual(level) - self._residual(level + 1)) / 2
            mom = [
                2 * sum((math.comb(j, i) * mom[i] * d ** (j - i) for i in range(j + 1) if (j - i) % 2 == 0), Fraction(0))
                for j in range(s + 1)
            ]
        mom = [simplify(x) for x in mom]
        if len(self._cache) < 200000:
            self._cache[key] = mom
        return mom

    def _residual(self, n: int):
        sch = self.scheme
        return sch.residual_length(n) if n <= sch.depth_cap + 2 else 1 / sch.four_r**n

    def _partial_segment(self, piece: PartialSegment, sigma, g, s, tol):
        m = piece.segment.rank
        g0 = as_enclosure(g.range_on(piece.lo, piece.hi))
        length = piece.hi - piece.lo
        lo = max(Fraction(0), lower(length) - upper(self.core_measure(m))) * lower(_ppow(-g0.hi, s))
        hi = upper(self.cores_sum(m, sigma, g0, s, tol)) + upper(length) * upper(_ppow(-g0.lo, s))
        return CertifiedValue.from_bounds(lo, hi, self.params.precision)

    def _removed_piece(self, piece: RemovedPiece, sigma, g, s):
        core = piece.u.core
        k = piece.u.rank
        total = Fraction(0)
        a, b = piece.lo, piece.hi
        # left margin, core, right margin
        cl = a if _cmp(a, core.lo) >= 0 else core.lo
        ch = b if _cmp(b, core.hi) <= 0 else core.hi
        if _cmp(a, cl) < 0:
            total = total + self._constant_piece(a, b if _cmp(b, cl) < 0 else cl, 0, g, s)
        if _cmp(cl, ch) < 0:
            total = total + self._constant_piece(cl, ch, sigma * k, g, s)
        if _cmp(ch, b) < 0:
            total = total + self._constant_piece(a if _cmp(a, ch) > 0 else ch, b, 0, g, s)
        return total

    def _constant_piece(self, lo, hi, value, g: Offset, s):
        """Integral of ``[value - g(y)]_+ ** s`` over ``[lo, hi]``."""
        total = Fraction(0)
        for p, q, g0 in g.linear_pieces(lo, hi):
            w0 = value - g0
            if g.slope == 0:
                total = total + (q - p) * _ppow(w0, s)
            else:
                w1 = w0 - g.slope * (q - p)
                total = total + (_ppow(w0, s + 1) - _ppow(w1, s + 1)) / (g.slope * (s + 1))
        return total

    # oracle-style summation -------------------------------------------------

    def truncated_integral(self, a, b, s=1, n_max: int = 12):
        """Integral of |F|**s over ``[a, b]`` by explicit core summation to rank ``n_max``.

        Cores of rank above ``n_max`` are not summed; their contribution is
        bounded by the number of rank-``n_max`` segments meeting ``[a, b]``
        times a geometric majorant.  This route avoids the closed forms and
        serves as an independent cross-check.
        """
        sch = self.scheme
        total = Fraction(0)
        cut_segments = 0
        for piece in sch.decompose(a, b, depth=n_max):
            if isinstance(piece, RemovedPiece):
                total = total + self._removed_piece(piece, 1, Offset(), s)
            elif isinstance(piece, FullSegment):
                m = piece.segment.rank
                for k in range(m + 1, n_max + 1):
                    count = 2 ** (k - 1 - m)
                    total = total + count * sch.v_length(k) * pow_real(k, s)
                cut_segments += 2 ** (n_max - m)
            else:
                cut_segments += 1
        tail = cut_segments * _geometric_tail(self, n_max, s)
        return as_enclosure(total).hull(total + upper(tail)) if tail else total


def _recurrence_sum(term, roots):
    """``sum_{j>=0} term(j)`` for terms annihilated by ``prod (E - root)``.

    If ``sum_i c_i t_{j+i} = 0`` for all j with ``chi(z) = sum_i c_i z**i``,
    summing over j gives ``S chi(1) = sum_i c_i (t_0 + ... + t_{i-1})``.
    """
    chi = [Fraction(1)]
    for root in roots:
        chi = [(chi[i - 1] if i else 0) - root * (chi[i] if i < len(chi) else 0) for i in range(len(chi) + 1)]
    prefix, acc = [Fraction(0)], Fraction(0)
    for j in range(len(chi) - 1):
        acc = acc + term(j)
        prefix.append(acc)
    return sum((ci * pi for ci, pi in zip(chi, prefix)), Fraction(0)) / sum(chi)


def _geometric_tail(F: CounterexampleF, n: int, s):
    """``sum_{k>n} 2**(k-1-n) k**s v_k`` bounded by ratio domination, no closed forms."""
    sch = F.scheme
    first = upper(pow_real(n + 1, s) * sch.v_length(n + 1))
    # term ratio 2 ((k+1)/k)**s v_{k+1}/v_k is largest at k = n+1
    rho = upper(2 * pow_real(Fraction(n + 2, n + 1), s) / (sch.four_r * sch.three_r))
    if rho >= 1:
        raise ScalarError("majorant ratio not below one")
    return first / (1 - rho)


# ---------------------------------------------------------------------------
# operation-level wrappers


def eval_F(params: SchemeParams, x, max_rank: int | None = None):
    x = parse_rational(x) if isinstance(x, (str, int)) else x
    return CounterexampleF(params).eval(x, max_rank)


def integrate_abs_power(params: SchemeParams, interval, s=None, tolerance=DEFAULT_TOLERANCE):
    """Enclosure of the integral of |F|**s over ``interval``; ``s`` defaults to r."""
    a, b = interval
    s = params.r if s is None else s
    return CounterexampleF(params).integrate(a, b, 1, Offset(), s, tolerance)


def integrate_plus_linear(
    params: SchemeParams,
    x,
    h,
    alpha=0,
    c=0,
    s=1,
    R: MonotoneStep | None = None,
    tolerance=DEFAULT_TOLERANCE,
    F: CounterexampleF | None = None,
):
    """``int_0^h [F(x+t) - (R(x+t) - R(x)) - c - alpha t]_+ ** s dt``."""
    F = F or CounterexampleF(params)
    if _cmp(h, 0) <= 0:
        raise ScalarError("h must be positive")
    xv = F.scheme.point_value(x)
    step = None
    const = Fraction(c) if not isinstance(c, CertifiedValue) else c
    if R is not None:
        step = R.shifted(-R(xv))
    g = Offset(const, Fraction(alpha), xv, step)
    return F.integrate(x, xv + h, 1, g, s, tolerance)
