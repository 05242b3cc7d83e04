"""AC_r sums of F over tagged collections anchored in P, and the bound chain behind them.

For a collection of nonoverlapping intervals ``I_i`` tagged at points of P
(where F vanishes) the AC sum is ``sum_i ((1/|I_i|) int_{I_i} |F|^s)^(1/s)``.
When ``sum |I_i| < eta`` the sum is bounded through

    lhs <= middle1 <= middle2 <= 3^(1/s) sum_{k>n} k (2 * 3^(-r/s))^k

where ``middle1`` localizes each mean to the removed intervals the interval
meets and ``middle2`` takes roots term by term.  :func:`chain_verify`
evaluates all four quantities with certified arithmetic.
"""

from __future__ import annotations

import enum
import json
import random
from dataclasses import replace
from functools import lru_cache
from math import gcd as _gcd
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .scalar import (
    CertifiedValue,
    ScalarError,
    Undecidable,
    as_enclosure,
    certainly_le,
    certainly_less,
    format_rational,
    log2,
    lower,
    parse_rational,
    pow_real,
    root,
    serialize,
    simplify,
    upper,
)
from .scheme import (
    FullSegment,
    PathPoint,
    RemovedPiece,
    SchemeParams,
    _cmp,
    scheme_for,
)
from .series import (
    DivergentSeries,
    compare_star_ratio_to_one,
    shifted_sum,
    star_ratio,
    tail_closed_form_linear,
)
from .stepfn import DEFAULT_TOLERANCE, CounterexampleF, Offset


class CollectionError(ScalarError):
    """A tagged collection violates its structural requirements."""


# ---------------------------------------------------------------------------
# tagged collections


@dataclass(frozen=True)
class TaggedInterval:
    lo: Fraction | PathPoint
    hi: Fraction | PathPoint
    tag: PathPoint

    def to_json(self, params: SchemeParams) -> dict:
        sch = scheme_for(params)
        ends = [_point_json(sch, p) for p in (self.lo, self.hi)]
        tag = self.tag
        if tag.cycle == "L":
            kind, path = "left_endpoint", tag.prefix
        elif tag.cycle == "R":
            kind, path = "right_endpoint", tag.prefix
        else:
            kind, path = "limit", str(tag)
        return {"interval": ends, "tag_path": path, "tag_kind": kind}

    @classmethod
    def from_json(cls, obj: dict) -> "TaggedInterval":
        try:
            lo, hi = (parse_rational(v) for v in obj["interval"])
            kind = obj["tag_kind"]
            path = obj["tag_path"]
        except (KeyError, TypeError, ValueError) as exc:
            raise CollectionError(f"malformed tagged interval: {obj!r}") from exc
        if kind == "left_endpoint":
            tag = PathPoint(path, "L")
        elif kind == "right_endpoint":
            tag = PathPoint(path, "R")
        elif kind == "limit":
            tag = PathPoint.parse(path)
        else:
            raise CollectionError(f"unknown tag_kind {kind!r}")
        return cls(lo, hi, tag)


def _point_json(sch, p) -> str:
    v = sch.point_value(p)
    if isinstance(v, CertifiedValue):
        raise CollectionError("collections serialize only in exact mode")
    return format_rational(v)


@dataclass(frozen=True)
class TaggedCollection:
    items: tuple[TaggedInterval, ...] = ()

    def __len__(self) -> int:
        return len(self.items)

    def to_jsonl(self, params: SchemeParams) -> str:
        return "".join(json.dumps(it.to_json(params)) + "\n" for it in self.items)

    @classmethod
    def from_jsonl(cls, text: str) -> "TaggedCollection":
        items = []
        for line in text.splitlines():
            if line.strip():
                items.append(TaggedInterval.from_json(json.loads(line)))
        return cls(tuple(items))


def compare_points(params: SchemeParams, a, b) -> int:
    """Sign of ``a - b`` for numbers and/or points of P."""
    if isinstance(a, PathPoint) and isinstance(b, PathPoint):
        if a == b:
            return 0
        span = max(len(a.prefix), len(b.prefix)) + len(a.cycle) * len(b.cycle) + 1
        for i in range(span):
            x, y = a.bit(i), b.bit(i)
            if x != y:
                return -1 if x == "L" else 1
        return 0
    sch = scheme_for(params)
    return _cmp(sch.point_value(a), sch.point_value(b))


def validate(params: SchemeParams, coll: TaggedCollection) -> None:
    """Raise :class:`CollectionError` unless every tag is in its interval and intervals do not overlap."""
    sch = scheme_for(params)
    if params.exact_mode:
        # every point has an exact rational value, so plain comparison is decisive
        cmp = lambda a, b: _sign(sch.point_value(a) - sch.point_value(b))
    else:
        cmp = lambda a, b: compare_points(params, a, b)
    for it in coll.items:
        if not isinstance(it.tag, PathPoint):
            raise CollectionError("tags must be points of P given by descent paths")
        if cmp(it.lo, it.hi) >= 0:
            raise CollectionError("interval endpoints must satisfy c < d")
        if cmp(it.lo, it.tag) > 0 or cmp(it.tag, it.hi) > 0:
            raise CollectionError(f"tag {it.tag} outside its interval")
        if _cmp(sch.point_value(it.lo), 0) < 0 or _cmp(sch.point_value(it.hi), 1) > 0:
            raise CollectionError("intervals must lie in [0, 1]")
    ordered = sorted(coll.items, key=lambda it: lower(sch.point_value(it.lo)))
    for a, b in zip(ordered, ordered[1:]):
        if cmp(a.hi, b.lo) > 0:
            raise CollectionError("intervals overlap")


def _sign(q: Fraction) -> int:
    return (q > 0) - (q < 0)


def total_length(params: SchemeParams, coll: TaggedCollection):
    sch = scheme_for(params)
    total = Fraction(0)
    for it in coll.items:
        total = total + (sch.point_value(it.hi) - sch.point_value(it.lo))
    return simplify(total)


# ---------------------------------------------------------------------------
# per-interval analysis


@dataclass
class TermRow:
    """One removed interval (or an aggregate of a whole segment's) met by an interval."""

    interval: int
    rank: int
    kind: str  # "removed" | "segment" | "partial"
    overlap: Fraction | CertifiedValue | None
    local_mean: Fraction | CertifiedValue
    local_bound: Fraction | CertifiedValue | None
    ok: bool

    def to_json(self) -> dict:
        return {
            "interval": self.interval,
            "rank": self.rank,
            "kind": self.kind,
            "overlap": None if self.overlap is None else serialize(self.overlap),
            "local_mean": serialize(self.local_mean),
            "local_bound": None if self.local_bound is None else serialize(self.local_bound),
            "ok": self.ok,
        }


@dataclass
class IntervalAnalysis:
    length: Fraction | CertifiedValue
    integral: Fraction | CertifiedValue
    ac_term: Fraction | CertifiedValue
    localized: Fraction | CertifiedValue | None  # sum inside the root of middle1
    rooted: Fraction | CertifiedValue | None  # this interval's share of middle2
    rows: list[TermRow]
    max_core_rank_ok: bool  # no core of rank <= n met
    overlaps_ok: bool


class _ChainKernel:
    """Caches the closed forms the per-interval analysis needs for one (r, s)."""

    def __init__(self, F: CounterexampleF, s):
        self.F = F
        self.s = s
        p = F.params
        self.prec = p.precision
        self.sch = F.scheme
        self.z_mean = 2 / pow_real(3, p.r, self.prec)  # 2 * 3^-r
        self.z_root = star_ratio(p.r, s)  # 2 * 3^(-r/s)
        self.root_convergent = compare_star_ratio_to_one(p.r, s) < 0
        self._seg_cache: dict[int, tuple] = {}
        self._bound_cache: dict[int, object] = {}

    def local_bound(self, k: int):
        """``3 k^s / 3^(k r)``: the localized mean bound for rank k."""
        b = self._bound_cache.get(k)
        if b is None:
            b = simplify(3 * pow_real(k, self.s, self.prec) / pow_real(3, k * self.F.params.r, self.prec))
            self._bound_cache[k] = b
        return b

    def segment_sums(self, m: int):
        """Sums over all removed intervals inside one rank-m segment.

        Returns ``(sum of k^s v_k/u_k, sum of (k^s v_k/u_k)^(1/s))``; the second
        is ``None`` when it diverges.
        """
        hit = self._seg_cache.get(m)
        if hit is not None:
            return hit
        scale = Fraction(1, 2 ** (m + 1))
        zm = self.z_mean
        mean_sum = simplify(scale * zm ** (m + 1) * shifted_sum(Fraction(m + 1), self.s, zm))
        root_sum = None
        if self.root_convergent:
            zr = self.z_root
            root_sum = simplify(scale * zr ** (m + 1) * shifted_sum(Fraction(m + 1), 1, zr))
        self._seg_cache[m] = (mean_sum, root_sum)
        return mean_sum, root_sum

    def analyze(self, lo, hi, n: int, index: int = 0) -> IntervalAnalysis:
        sch, s, F = self.sch, self.s, self.F
        length = simplify(sch.point_value(hi) - sch.point_value(lo))
        integral = Fraction(0)
        localized = Fraction(0)
        rooted = Fraction(0)
        rows: list[TermRow] = []
        rank_ok = True
        overlaps_ok = True
        for piece in sch.decompose(lo, hi):
            if isinstance(piece, RemovedPiece):
                u = piece.u
                k = u.rank
                val = F._removed_piece(piece, 1, Offset(), s)
                integral = integral + val
                core = u.core
                meets_core = _cmp(piece.lo, core.hi) < 0 and _cmp(piece.hi, core.lo) > 0
                if not meets_core:
                    continue
                overlap = simplify(piece.hi - piece.lo)
                mean = simplify(val / overlap)
                bound = self.local_bound(k)
                margin = (u.hi - u.lo - (core.hi - core.lo)) / 2
                ok_overlap = certainly_less(margin, overlap) and certainly_le((u.hi - u.lo) / 3, overlap)
                ok = ok_overlap and certainly_le(mean, bound) and k > n
                overlaps_ok &= ok_overlap
                rank_ok &= k > n
                rows.append(TermRow(index, k, "removed", overlap, mean, bound, ok))
                localized = localized + mean
                rooted = rooted + root(mean, s)
            elif isinstance(piece, FullSegment):
                m = piece.segment.rank
                integral = integral + F._full_segment(piece.segment, 1, Offset(), s, DEFAULT_TOLERANCE)
                mean_sum, root_sum = self.segment_sums(m)
                rank_ok &= m >= n
                rows.append(TermRow(index, m + 1, "segment", sch.residual_length(m), mean_sum, None, m >= n))
                localized = localized + mean_sum
                rooted = None if (rooted is None or root_sum is None) else rooted + root_sum
            else:
                m = piece.segment.rank
                integral = integral + F._partial_segment(piece, 1, Offset(), s, DEFAULT_TOLERANCE)
                mean_sum, root_sum = self.segment_sums(m)
                # each localized mean is at most 3 k^s / 3^(k r) = 3 k^s v_k / u_k
                mean_hi = 3 * upper(mean_sum)
                rows.append(TermRow(index, m + 1, "partial", None, CertifiedValue(Fraction(0), mean_hi), None, m >= n))
                rank_ok &= m >= n
                localized = localized + CertifiedValue(Fraction(0), mean_hi)
                if rooted is not None and root_sum is not None:
                    rooted = rooted + CertifiedValue(Fraction(0), upper(pow_real(3, 1 / s, self.prec) * root_sum))
                else:
                    rooted = None
        integral = simplify(integral)
        ac_term = simplify(root(integral / length, s))
        return IntervalAnalysis(
            length, integral, ac_term, simplify(localized),
            None if rooted is None else simplify(rooted), rows, rank_ok, overlaps_ok,
        )


_KERNELS: dict = {}


def _kernel(F: CounterexampleF, s) -> _ChainKernel:
    key = (F.params, s)
    k = _KERNELS.get(key)
    if k is None or k.F is not F:
        k = _ChainKernel(F, s)
        _KERNELS[key] = k
    return k


def _as_F(F) -> CounterexampleF:
    if isinstance(F, CounterexampleF):
        return F
    if isinstance(F, SchemeParams):
        return CounterexampleF(F)
    raise TypeError("expected CounterexampleF or SchemeParams")


# ---------------------------------------------------------------------------
# operations


def ac_sum(F, coll: TaggedCollection, s=None, tolerance=DEFAULT_TOLERANCE, check: bool = True):
    """Certified ``sum_i ((1/|I_i|) int_{I_i} |F|^s)^(1/s)``; F vanishes at every tag."""
    F = _as_F(F)
    s = parse_rational(s) if s is not None else F.params.r
    if check:
        validate(F.params, coll)
    total = Fraction(0)
    for it in coll.items:
        integral = F.integrate(it.lo, it.hi, 1, Offset(), s, tolerance)
        length = F.scheme.point_value(it.hi) - F.scheme.point_value(it.lo)
        total = total + root(integral / length, s)
    return simplify(total)


def star_tail(params: SchemeParams, n: int, s=None):
    """``3^(1/s) sum_{k>n} k (2 * 3^(-r/s))^k``."""
    s = params.r if s is None else parse_rational(s)
    return _star_tail(params, n, s)


@lru_cache(maxsize=1024)
def _star_tail(params: SchemeParams, n: int, s: Fraction):
    x = star_ratio(params.r, s)
    if compare_star_ratio_to_one(params.r, s) >= 0:
        raise DivergentSeries(f"bound-chain series diverges for s={s}")
    return simplify(pow_real(3, 1 / Fraction(s), params.precision) * tail_closed_form_linear(n, x))


def epsilon_to_eta(params: SchemeParams, epsilon, max_rank: int | None = None):
    """Smallest rank ``n >= 1`` with ``3^(1/r) sum_{k>n} k (2/3)^k < epsilon``, and ``eta = (u_n - v_n)/2``."""
    eps = parse_rational(epsilon)
    if eps <= 0:
        raise ScalarError("epsilon must be positive")
    sch = scheme_for(params)
    limit = max_rank or sch.depth_cap
    n = 1
    while True:
        tail = star_tail(params, n)
        if certainly_less(tail, eps):
            break
        if not certainly_le(eps, tail):
            raise Undecidable(f"cannot compare the tail at n={n} with epsilon")
        n += 1
        if n > limit:
            raise ScalarError(f"no rank <= {limit} reaches epsilon={eps}")
    eta = simplify((sch.u_length(n) - sch.v_length(n)) / 2)
    return n, eta


@dataclass
class ChainReport:
    lhs: Fraction | CertifiedValue
    middle1: Fraction | CertifiedValue | None
    middle2: Fraction | CertifiedValue | None
    closed_bound: Fraction | CertifiedValue | None
    total_length: Fraction | CertifiedValue
    eta: Fraction | CertifiedValue
    hypothesis_ok: bool
    links: tuple[bool, bool, bool]
    cores_above_n: bool
    overlaps_ok: bool
    rows: list[TermRow] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return self.hypothesis_ok and all(self.links) and self.cores_above_n and self.overlaps_ok

    def to_json(self) -> dict:
        enc = lambda v: None if v is None else serialize(v)
        return {
            "lhs": enc(self.lhs),
            "middle1": enc(self.middle1),
            "middle2": enc(self.middle2),
            "closed_bound": enc(self.closed_bound),
            "total_length": enc(self.total_length),
            "eta": enc(self.eta),
            "hypothesis_ok": self.hypothesis_ok,
            "links": list(self.links),
            "cores_above_n": self.cores_above_n,
            "overlaps_ok": self.overlaps_ok,
            "certified": self.certified,
            "rows": [r.to_json() for r in self.rows],
        }


def _analyses(F, coll, s, n, cache=None, key=None):
    kern = _kernel(F, s)
    out = []
    for it in coll.items:
        k = key(it) if key is not None else (it.lo, it.hi)
        a = cache.get(k) if cache is not None else None
        if a is None:
            a = kern.analyze(it.lo, it.hi, n)
            if cache is not None:
                cache[k] = a
        out.append(a)
    return out


def _chain_from(F, coll, s, n, analyses, rows: bool = True) -> ChainReport:
    p = F.params
    sch = F.scheme
    eta = simplify((sch.u_length(n) - sch.v_length(n)) / 2)
    length = Fraction(0)
    lhs = Fraction(0)
    m1 = Fraction(0)
    m2 = Fraction(0)
    all_rows: list[TermRow] = []
    rank_ok = overlaps_ok = True
    for i, a in enumerate(analyses):
        length = length + a.length
        lhs = lhs + a.ac_term
        m1 = m1 + root(a.localized, s)
        m2 = None if (m2 is None or a.rooted is None) else m2 + a.rooted
        rank_ok &= a.max_core_rank_ok
        overlaps_ok &= a.overlaps_ok
        if rows:
            all_rows.extend(replace(r, interval=i) for r in a.rows)
    try:
        closed = star_tail(p, n, s)
    except DivergentSeries:
        closed = None
    lhs, m1 = simplify(lhs), simplify(m1)
    m2 = None if m2 is None else simplify(m2)
    links = (
        certainly_le(lhs, m1),
        m2 is not None and certainly_le(m1, m2),
        m2 is not None and closed is not None and certainly_le(m2, closed),
    )
    hyp = certainly_less(length, eta)
    return ChainReport(lhs, m1, m2, closed, simplify(length), eta, hyp, links, rank_ok, overlaps_ok, all_rows)


def chain_verify(F, coll: TaggedCollection, n: int, s=None, check: bool = True) -> ChainReport:
    """Evaluate and compare the four quantities of the AC bound chain."""
    F = _as_F(F)
    s = parse_rational(s) if s is not None else F.params.r
    if check:
        validate(F.params, coll)
    return _chain_from(F, coll, s, n, _analyses(F, coll, s, n))


# ---------------------------------------------------------------------------
# adversarial search


@dataclass
class SearchResult:
    best: TaggedCollection
    best_sum: Fraction | CertifiedValue
    best_report: ChainReport | None
    evaluated: int
    chain_certified: int
    exceeding: int  # collections whose sum certifiably reaches epsilon
    undecided: int
    max_upper: Fraction


@dataclass(frozen=True)
class GeneratedInterval(TaggedInterval):
    """A candidate interval that remembers its shape and exact endpoint values."""

    shape: tuple = field(default=(), compare=False)
    span: tuple = field(default=(), compare=False)


class CandidateGenerator:
    """Seeded proposals of admissible collections.

    Intervals are anchored at the P-endpoint of a removed interval ``u_k``
    (``k > n``) and reach across its margin into or past the core, which is
    where the localized means are largest.  They may also extend backwards
    into the neighbouring residual segment by ``mu * r_k``; ``lam`` says how
    far past the near margin they reach.

    F looks the same near every removed interval of a given rank, so the
    analysis of an interval depends only on its shape ``(rank, side, mu,
    lam)``, which serves as the analysis cache key.
    """

    GRID = 8
    MAX_SIZE = 12

    def __init__(self, params: SchemeParams, n: int, eta, rng: random.Random, ranks: int = 12):
        self.params = params
        self.sch = scheme_for(params)
        self.n = n
        self.eta = eta
        self.rng = rng
        self.ranks = ranks
        self._offsets: dict[tuple, tuple] = {}
        self._jumps: dict[int, tuple[int, list[int]]] = {}

    def _segment_lo(self, k: int, bits: int, path: str):
        """Left end of the rank ``k-1`` segment with the given path."""
        if not self.params.exact_mode:
            return self.sch.residual_segment(path).lo
        table = self._jumps.get(k)
        if table is None:
            sch = self.sch
            # the right child of a rank j-1 segment starts r_{j-1} - r_j further on
            jumps = [sch.residual_length(j - 1) - sch.residual_length(j) for j in range(1, k)]
            den = 1
            for q in jumps:
                den = den * q.denominator // _gcd(den, q.denominator)
            table = self._jumps[k] = (den, [q.numerator * (den // q.denominator) for q in jumps])
        den, nums = table
        total = 0
        for j in range(k - 1):
            if bits >> (k - 2 - j) & 1:
                total += nums[j]
        return Fraction(total, den)

    def _shape_offsets(self, shape):
        """Endpoints of a shaped interval relative to its segment's left end."""
        off = self._offsets.get(shape)
        if off is None:
            _, k, left_side, mu, lam = shape
            sch = self.sch
            rk = sch.residual_length(k)
            uk, vk = sch.u_length(k), sch.v_length(k)
            margin = (uk - vk) / 2
            reach = margin + lam * (vk + margin)
            if left_side:
                off = (rk - mu * rk, rk + reach)
            else:
                off = (rk + uk - reach, rk + uk + mu * rk)
            off = self._offsets[shape] = tuple(simplify(o) for o in off)
        return off

    def interval(self, k: int | None = None) -> GeneratedInterval:
        rng, sch = self.rng, self.sch
        if k is None:
            # deeper ranks are exponentially less profitable; favour shallow ones
            k = self.n + 1 + min(int(rng.expovariate(0.7)), self.ranks - 1)
        k = min(k, sch.depth_cap)
        bits = rng.getrandbits(k - 1) if k > 1 else 0
        path = format(bits, f"0{k - 1}b").translate(_BITS) if k > 1 else ""
        mu = Fraction(rng.randrange(0, self.GRID + 1), self.GRID)
        lam = Fraction(rng.randrange(1, self.GRID + 1), self.GRID)
        left_side = rng.random() < 0.5
        shape = ("shape", k, left_side, mu, lam)
        base = self._segment_lo(k, bits, path)
        a, b = (simplify(base + o) for o in self._shape_offsets(shape))
        u_lo, u_hi = PathPoint(path + "L", "R"), PathPoint(path + "R", "L")
        if left_side:
            tag = u_lo
            lo = tag if mu == 0 else a
            hi = u_hi if lam == 1 else b
        else:
            tag = u_hi
            hi = tag if mu == 0 else b
            lo = u_lo if lam == 1 else a
        return GeneratedInterval(lo, hi, tag, shape, (a, b))

    @staticmethod
    def cache_key(it: TaggedInterval):
        return getattr(it, "shape", None) or (it.lo, it.hi)

    def collection(self, size: int | None = None) -> TaggedCollection | None:
        size = size or 1 + int(self.rng.expovariate(0.6))
        items = [self.interval() for _ in range(min(size, self.MAX_SIZE))]
        return self.admissible(items)

    def mutate(self, coll: TaggedCollection) -> TaggedCollection | None:
        items = list(coll.items)
        roll = self.rng.random()
        if (roll < 0.4 and len(items) < self.MAX_SIZE) or not items:
            items.append(self.interval())
        elif roll < 0.7 and len(items) > 1:
            items.pop(self.rng.randrange(len(items)))
        else:
            i = self.rng.randrange(len(items))
            items[i] = self.interval()
        return self.admissible(items)

    def admissible(self, items: list[TaggedInterval]) -> TaggedCollection | None:
        coll = TaggedCollection(tuple(items))
        if self.params.exact_mode and all(isinstance(it, GeneratedInterval) for it in items):
            # generated intervals contain their tags by construction; only
            # overlap and total length remain, decided on exact endpoint values
            spans = sorted((it.span for it in items), key=lambda sp: sp[0])
            if any(a[1] > b[0] for a, b in zip(spans, spans[1:])):
                return None
            return coll if sum(b - a for a, b in spans) < self.eta else None
        try:
            validate(self.params, coll)
        except CollectionError:
            return None
        if not certainly_less(total_length(self.params, coll), self.eta):
            return None
        return coll


_BITS = str.maketrans("01", "LR")


def level_collection(params: SchemeParams, k: int, lam=Fraction(1, 2)) -> TaggedCollection:
    """One interval per rank-k removed interval: from its left P-endpoint across the margin into the core."""
    sch = scheme_for(params)
    items = []
    for i in range(2 ** (k - 1)):
        path = format(i, f"0{k - 1}b").replace("0", "L").replace("1", "R") if k > 1 else ""
        u = sch.removed_interval(path)
        margin = u.core.lo - u.lo
        tag = PathPoint(path + "L", "R")
        items.append(TaggedInterval(tag, u.lo + margin + lam * (u.core.hi - u.core.lo), tag))
    return TaggedCollection(tuple(items))


def adversarial_search(
    params: SchemeParams,
    eta=None,
    s=None,
    budget: int = 1000,
    seed: int = 0,
    n: int | None = None,
    epsilon=None,
    verify_chain: bool = True,
    initial: Sequence[TaggedCollection] = (),
) -> SearchResult:
    """Seeded random-restart plus hill-climbing search for a large AC sum.

    Every admissible candidate is evaluated with certified arithmetic; when
    ``verify_chain`` is set its bound chain is checked as well.
    """
    if budget < 1:
        raise ScalarError("budget must be at least 1")
    F = _counterexample(params)
    s = parse_rational(s) if s is not None else params.r
    sch = F.scheme
    if n is None:
        if eta is None:
            raise ScalarError("need eta or n")
        eta = parse_rational(eta) if not isinstance(eta, CertifiedValue) else eta
        n = next(k for k in range(1, sch.depth_cap) if certainly_le((sch.u_length(k) - sch.v_length(k)) / 2, eta))
    if eta is None:
        eta = simplify((sch.u_length(n) - sch.v_length(n)) / 2)
    eps = parse_rational(epsilon) if epsilon is not None else None
    rng = random.Random(seed)
    gen = CandidateGenerator(params, n, eta, rng)
    cache: dict = {}

    best, best_sum, best_report = None, None, None
    evaluated = certified = exceeding = undecided = 0
    max_upper = Fraction(0)
    pending = list(initial)
    while evaluated < budget:
        if pending:
            coll = pending.pop(0)
        elif best is not None and rng.random() < 0.5:
            coll = gen.mutate(best)
        else:
            coll = gen.collection()
        if coll is None:
            continue
        analyses = _analyses(F, coll, s, n, cache, gen.cache_key)
        total = Fraction(0)
        for a in analyses:
            total = total + a.ac_term
        total = simplify(total)
        evaluated += 1
        report = None
        if verify_chain:
            report = _chain_from(F, coll, s, n, analyses, rows=False)
            certified += report.certified
        if eps is not None:
            if certainly_le(eps, total):
                exceeding += 1
            elif not certainly_less(total, eps):
                undecided += 1
        max_upper = max(max_upper, upper(total))
        if best is None or lower(total) > lower(best_sum):
            best, best_sum, best_report = coll, total, report
    if verify_chain and best is not None:
        best_report = chain_verify(F, best, n, s, check=False)
    return SearchResult(best, best_sum, best_report, evaluated, certified, exceeding, undecided, max_upper)


_F_CACHE: dict = {}


def _counterexample(params: SchemeParams) -> CounterexampleF:
    F = _F_CACHE.get(params)
    if F is None:
        F = _F_CACHE[params] = CounterexampleF(params)
    return F


# ---------------------------------------------------------------------------
# the two inequalities behind the chain


@dataclass(frozen=True)
class InequalityCheck:
    lhs: Fraction | CertifiedValue
    rhs: Fraction | CertifiedValue
    certified: bool


def root_subadditivity(a: Sequence, r, prec: int = 256) -> InequalityCheck:
    """``(sum a_j)^(1/r) <= sum a_j^(1/r)`` for positive ``a_j`` and ``r >= 1``."""
    a = [parse_rational(x) for x in a]
    r = parse_rational(r)
    if not a or any(x <= 0 for x in a) or r < 1:
        raise ScalarError("need a nonempty positive sequence and r >= 1")
    lhs = simplify(root(sum(a), r, prec))
    rhs = Fraction(0)
    for x in a:
        rhs = rhs + root(x, r, prec)
    rhs = simplify(rhs)
    # a single term is the same number on both sides
    ok = certainly_le(lhs, rhs) or len(a) == 1
    return InequalityCheck(lhs, rhs, ok)


def double_decker(a: Sequence, b: Sequence) -> InequalityCheck:
    """``sum a / sum b <= sum (a/b)`` for positive sequences of equal length."""
    a = [parse_rational(x) for x in a]
    b = [parse_rational(x) for x in b]
    if len(a) != len(b) or not a or any(x <= 0 for x in (*a, *b)):
        raise ScalarError("need positive sequences of equal nonzero length")
    lhs = sum(a) / sum(b)
    rhs = sum(x / y for x, y in zip(a, b))
    return InequalityCheck(lhs, rhs, lhs <= rhs)


# ---------------------------------------------------------------------------
# threshold


class SeriesVerdict(enum.Enum):
    CONVERGENT = "Convergent"
    DIVERGENT = "Divergent"
    CRITICAL = "Critical"


@dataclass
class ThresholdReport:
    s: Fraction
    s_star: CertifiedValue
    ratio_limit: Fraction | CertifiedValue
    verdict: SeriesVerdict

    def to_json(self) -> dict:
        return {
            "s": format_rational(self.s),
            "s_star": serialize(self.s_star),
            "ratio_limit": serialize(self.ratio_limit),
            "verdict": self.verdict.value,
        }


def acs_threshold(params: SchemeParams, s) -> ThresholdReport:
    """Where the bound chain's series stops converging: ``s* = r log2 3``.

    The verdict compares ``2 * 3^(-r/s)`` with 1 exactly, as ``2^s`` against
    ``3^r`` raised to a common integer power.
    """
    s = parse_rational(s)
    if s < 1:
        raise ScalarError("s must be at least 1")
    s_star = as_enclosure(params.r * log2(3, params.precision))
    ratio = star_ratio(params.r, s)
    sign = compare_star_ratio_to_one(params.r, s)
    verdict = {-1: SeriesVerdict.CONVERGENT, 1: SeriesVerdict.DIVERGENT, 0: SeriesVerdict.CRITICAL}[sign]
    return ThresholdReport(s, s_star, ratio, verdict)
