"""The symmetric Cantor-like set P and its removed intervals.

Rank ``n`` removes from each of the ``2**(n-1)`` residual segments of rank
``n-1`` a concentric open interval of length ``u_n = (4**r - 2) / 4**(r n)``;
inside it sits the concentric open core of length ``v_n = u_n / 3**(n r)``.
Residual segments of rank ``n`` have length ``4**(-n r)``.

Objects of rank ``n`` are addressed by a descent path: a string over
``{"L", "R"}`` of length ``n - 1`` (removed intervals) or ``n`` (segments).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, Iterator, Union

from .scalar import (
    DEFAULT_PRECISION,
    CertifiedValue,
    ScalarError,
    Undecidable,
    format_rational,
    is_exact,
    lower,
    parse_rational,
    pow_real,
    upper,
)


class DepthError(ValueError):
    """A path or rank exceeds the configured construction depth."""


class SiteIneligible(ValueError):
    """A requested blow-up site does not satisfy the left-child hypothesis."""


@dataclass(frozen=True)
class SchemeParams:
    r: Fraction = Fraction(1)
    precision: int = DEFAULT_PRECISION
    depth_cap: int = 64

    def __post_init__(self):
        object.__setattr__(self, "r", parse_rational(self.r))
        if self.r < 1:
            raise ScalarError("r must be at least 1")
        if self.depth_cap < 1:
            raise ScalarError("depth_cap must be positive")

    @property
    def exact_mode(self) -> bool:
        return self.r.denominator == 1

    def with_precision(self, precision: int) -> "SchemeParams":
        return SchemeParams(self.r, precision, self.depth_cap)


def check_path(path: str) -> str:
    if any(c not in "LR" for c in path):
        raise ScalarError(f"descent path must be over L/R: {path!r}")
    return path


# ---------------------------------------------------------------------------
# points of P addressed by eventually periodic descent paths


@dataclass(frozen=True)
class PathPoint:
    """The point of P reached by following ``prefix`` then ``cycle`` forever.

    ``cycle == "L"`` gives the left endpoint of the segment addressed by
    ``prefix``; ``cycle == "R"`` its right endpoint.
    """

    prefix: str = ""
    cycle: str = "L"

    def __post_init__(self):
        check_path(self.prefix)
        check_path(self.cycle)
        if not self.cycle:
            raise ScalarError("cycle must be nonempty")
        # normalize so that equal points compare equal
        cycle = self.cycle
        for d in range(1, len(cycle) + 1):
            if len(cycle) % d == 0 and cycle[:d] * (len(cycle) // d) == cycle:
                cycle = cycle[:d]
                break
        prefix = self.prefix
        while prefix and prefix[-1] == cycle[-1]:
            prefix = prefix[:-1]
            cycle = cycle[-1] + cycle[:-1]
        object.__setattr__(self, "prefix", prefix)
        object.__setattr__(self, "cycle", cycle)

    @classmethod
    def left_endpoint(cls, path: str) -> "PathPoint":
        return cls(path, "L")

    @classmethod
    def right_endpoint(cls, path: str) -> "PathPoint":
        return cls(path, "R")

    @classmethod
    def parse(cls, text: str) -> "PathPoint":
        """``"LLR(RL)"`` style: prefix then parenthesized cycle."""
        text = text.strip()
        if text.endswith(")") and "(" in text:
            prefix, cycle = text[:-1].split("(", 1)
            return cls(prefix, cycle)
        return cls(text, "L")

    def bit(self, n: int) -> str:
        """Direction taken at rank ``n + 1`` (0-based position)."""
        if n < len(self.prefix):
            return self.prefix[n]
        return self.cycle[(n - len(self.prefix)) % len(self.cycle)]

    def tail_constant(self, start: int) -> str | None:
        """``"L"``/``"R"`` if every bit from ``start`` on is that letter."""
        if len(self.cycle) != 1:
            return None
        c = self.cycle
        if all(b == c for b in self.prefix[start:]):
            return c
        return None

    def __str__(self) -> str:
        return f"{self.prefix}({self.cycle})"


Point = Union[Fraction, CertifiedValue, PathPoint]


# ---------------------------------------------------------------------------
# construction objects


@dataclass(frozen=True)
class ResidualSegment:
    rank: int
    path: str
    lo: Fraction | CertifiedValue
    hi: Fraction | CertifiedValue


@dataclass(frozen=True)
class CoreInterval:
    rank: int
    lo: Fraction | CertifiedValue
    hi: Fraction | CertifiedValue


@dataclass(frozen=True)
class RemovedInterval:
    rank: int
    path: str
    lo: Fraction | CertifiedValue
    hi: Fraction | CertifiedValue
    core: CoreInterval


@dataclass(frozen=True)
class InCore:
    rank: int
    path: str


@dataclass(frozen=True)
class InMarginOfRemoved:
    rank: int
    path: str
    side: str  # "left" | "right"


@dataclass(frozen=True)
class InPCertified:
    path: str


@dataclass(frozen=True)
class UndecidedAtDepth:
    depth: int


Classification = Union[InCore, InMarginOfRemoved, InPCertified, UndecidedAtDepth]


def classification_to_json(c: Classification) -> dict:
    if isinstance(c, InCore):
        return {"kind": "InCore", "rank": c.rank, "path": c.path}
    if isinstance(c, InMarginOfRemoved):
        return {"kind": "InMarginOfRemoved", "rank": c.rank, "path": c.path, "side": c.side}
    if isinstance(c, InPCertified):
        return {"kind": "InP_Certified", "path": c.path}
    return {"kind": "UndecidedAtDepth", "depth": c.depth}


# ---------------------------------------------------------------------------


def _cmp(x, b) -> int:
    """Sign of ``x - b``; exact or raises Undecidable."""
    if type(x) is Fraction and type(b) is Fraction:
        return (x > b) - (x < b)
    if upper(x) < lower(b):
        return -1
    if lower(x) > upper(b):
        return 1
    if is_exact(x) and is_exact(b):
        return 0
    raise Undecidable(f"cannot order {x!r} and {b!r}")


class Scheme:
    """Length tables and geometry for one parameter set."""

    def __init__(self, params: SchemeParams):
        self.params = params
        self.r = params.r
        self.depth_cap = params.depth_cap
        self.prec = params.precision
        self._segment_cache: dict[str, ResidualSegment] = {}

    def __repr__(self) -> str:
        return f"Scheme(r={format_rational(self.r)}, depth_cap={self.depth_cap})"

    # lengths ----------------------------------------------------------------

    @cached_property
    def four_r(self):
        """``4**r``."""
        return pow_real(4, self.r, self.prec)

    @cached_property
    def three_r(self):
        return pow_real(3, self.r, self.prec)

    @cached_property
    def _tables(self):
        n_max = self.depth_cap + 2
        res, u, v = [Fraction(1)], [None], [None]
        inv4 = 1 / self.four_r
        inv3 = 1 / self.three_r
        rn, t3 = Fraction(1), Fraction(1)
        for _ in range(n_max):
            rn = rn * inv4
            t3 = t3 * inv3
            res.append(rn)
            un = (self.four_r - 2) * rn
            u.append(un)
            v.append(un * t3)
        return res, u, v

    def _rank_check(self, n: int, least: int):
        if n < least:
            raise ScalarError(f"rank must be >= {least}, got {n}")
        if n > self.depth_cap + 2:
            raise DepthError(f"rank {n} exceeds depth cap {self.depth_cap}")

    def u_length(self, n: int):
        self._rank_check(n, 1)
        return self._tables[1][n]

    def v_length(self, n: int):
        self._rank_check(n, 1)
        return self._tables[2][n]

    def residual_length(self, n: int):
        self._rank_check(n, 0)
        return self._tables[0][n]

    # geometry ---------------------------------------------------------------

    def residual_segment(self, path: str = "") -> ResidualSegment:
        check_path(path)
        if len(path) > self.depth_cap:
            raise DepthError(f"path of length {len(path)} exceeds depth cap {self.depth_cap}")
        seg = self._segment_cache.get(path)
        if seg is not None:
            return seg
        if not path:
            seg = ResidualSegment(0, "", Fraction(0), Fraction(1))
        else:
            parent = self.residual_segment(path[:-1])
            seg = self.child(parent, path[-1])
        if len(self._segment_cache) < 1 << 16:
            self._segment_cache[path] = seg
        return seg

    def child(self, seg: ResidualSegment, side: str) -> ResidualSegment:
        n = seg.rank + 1
        rn = self._tables[0][n]
        if side == "L":
            return ResidualSegment(n, seg.path + "L", seg.lo, seg.lo + rn)
        return ResidualSegment(n, seg.path + "R", seg.hi - rn, seg.hi)

    def removed_in(self, seg: ResidualSegment) -> RemovedInterval:
        """The removed interval concentric with ``seg`` (rank ``seg.rank + 1``)."""
        n = seg.rank + 1
        rn = self._tables[0][n]
        vn = self._tables[2][n]
        center = seg.lo + self._tables[0][n - 1] / 2
        core = CoreInterval(n, center - vn / 2, center + vn / 2)
        return RemovedInterval(n, seg.path, seg.lo + rn, seg.hi - rn, core)

    def removed_interval(self, path: str = "") -> RemovedInterval:
        if len(path) + 1 > self.depth_cap:
            raise DepthError(f"removed interval of rank {len(path) + 1} exceeds depth cap")
        return self.removed_in(self.residual_segment(path))

    def point_value(self, pt: Point):
        """Numeric value (exact in exact mode) of a point."""
        if not isinstance(pt, PathPoint):
            return pt
        return _path_point_value(self.params, pt.prefix, pt.cycle)

    def address_of(self, x, max_steps: int = 1 << 14) -> PathPoint | None:
        """Descent address of a rational point of P, or None.

        In exact mode a rational in P has an eventually periodic address: the
        relative position inside the current segment, ``p -> 4^r p`` or
        ``p -> 1 - 4^r (1 - p)``, takes finitely many values.
        """
        if not self.params.exact_mode or not isinstance(x, (Fraction, int)):
            return None
        base = 4 ** int(self.params.r)
        p = Fraction(x)
        if not 0 <= p <= 1:
            return None
        path: list[str] = []
        seen: dict[Fraction, int] = {}
        while p not in seen:
            if len(path) >= max_steps:
                return None
            seen[p] = len(path)
            if p * base <= 1:
                path.append("L")
                p = p * base
            elif (1 - p) * base <= 1:
                path.append("R")
                p = 1 - (1 - p) * base
            else:
                return None
        i = seen[p]
        return PathPoint("".join(path[:i]), "".join(path[i:]))

    # point location ---------------------------------------------------------

    def locate(self, x, max_rank: int | None = None) -> Classification:
        """Classify ``x`` by descending through the construction."""
        if isinstance(x, PathPoint):
            return InPCertified(str(x))
        max_rank = self.depth_cap if max_rank is None else max_rank
        if max_rank > self.depth_cap:
            raise DepthError("max_rank exceeds depth cap")
        if not isinstance(x, CertifiedValue):
            x = Fraction(x)
        if _cmp(x, 0) < 0 or _cmp(x, 1) > 0:
            raise ScalarError(f"point {x!r} outside [0, 1]")
        seg = self.residual_segment("")
        while True:
            if _cmp(x, seg.lo) == 0 or _cmp(x, seg.hi) == 0:
                return InPCertified(seg.path)
            if seg.rank >= max_rank:
                pt = self.address_of(x)
                if pt is not None:
                    return InPCertified(str(pt))
                return UndecidedAtDepth(max_rank)
            u = self.removed_in(seg)
            if _cmp(x, u.lo) <= 0:
                seg = self.child(seg, "L")
            elif _cmp(x, u.hi) >= 0:
                seg = self.child(seg, "R")
            elif _cmp(x, u.core.lo) <= 0:
                return InMarginOfRemoved(u.rank, seg.path, "left")
            elif _cmp(x, u.core.hi) >= 0:
                return InMarginOfRemoved(u.rank, seg.path, "right")
            else:
                return InCore(u.rank, seg.path)

    # relation of a point to a segment ---------------------------------------

    def relation(self, pt: Point, seg: ResidualSegment) -> int:
        """-2 below, -1 at lo, 0 strictly inside, 1 at hi, 2 above."""
        if isinstance(pt, PathPoint):
            for i in range(seg.rank):
                b = pt.bit(i)
                if b != seg.path[i]:
                    return -2 if b == "L" else 2
            tail = pt.tail_constant(seg.rank)
            if tail == "L":
                return -1
            if tail == "R":
                return 1
            return 0
        c = _cmp(pt, seg.lo)
        if c <= 0:
            return -2 if c < 0 else -1
        c = _cmp(pt, seg.hi)
        if c >= 0:
            return 2 if c > 0 else 1
        return 0

    # decomposition of an interval ---------------------------------------------

    def decompose(
        self,
        a: Point,
        b: Point,
        refine: Callable[[ResidualSegment], bool] | None = None,
        depth: int | None = None,
    ) -> Iterator["Piece"]:
        """Split ``[a, b]`` into construction-aligned pieces.

        Yields :class:`FullSegment` for residual segments contained in
        ``[a, b]`` (unless ``refine`` asks to descend), :class:`RemovedPiece`
        for each removed interval meeting ``(a, b)``, and
        :class:`PartialSegment` for segments still cut by an endpoint at the
        depth limit.  The pieces cover ``[a, b]`` up to a null set.
        """
        depth = self.depth_cap if depth is None else min(depth, self.depth_cap)
        stack: list = [self.residual_segment("")]
        while stack:
            seg = stack.pop()
            if isinstance(seg, RemovedPiece):
                yield seg
                continue
            ra = self.relation(a, seg)
            rb = self.relation(b, seg)
            if rb <= -1 or ra >= 1:
                continue
            full = ra <= -1 and rb >= 1
            if full and (refine is None or seg.rank >= depth or not refine(seg)):
                yield FullSegment(seg)
                continue
            if seg.rank >= depth:
                lo = seg.lo if ra <= -1 else self.point_value(a)
                hi = seg.hi if rb >= 1 else self.point_value(b)
                yield PartialSegment(seg, lo, hi)
                continue
            u = self.removed_in(seg)
            left, right = self.child(seg, "L"), self.child(seg, "R")
            # pushed in reverse so pieces come out left to right
            stack.append(right)
            piece = self._clip_removed(a, b, u, left)
            if piece is not None:
                stack.append(piece)
            stack.append(left)

    def _clip_removed(self, a, b, u: RemovedInterval, left):
        lo = self._clip_end(a, u, left)
        hi = self._clip_end(b, u, left)
        # a at or beyond u.hi, or b at or before u.lo, leaves nothing
        if lo is _ABOVE or hi is _BELOW:
            return None
        lo = u.lo if lo is _BELOW else lo
        hi = u.hi if hi is _ABOVE else hi
        if _cmp(lo, hi) >= 0:
            return None
        return RemovedPiece(u, lo, hi)

    def _clip_end(self, pt, u, left):
        if isinstance(pt, PathPoint):
            rel = self.relation(pt, left)
            if rel <= 1:
                return _BELOW
            return _ABOVE
        if _cmp(pt, u.lo) <= 0:
            return _BELOW
        if _cmp(pt, u.hi) >= 0:
            return _ABOVE
        return pt


_BELOW = object()
_ABOVE = object()


@dataclass(frozen=True)
class FullSegment:
    segment: ResidualSegment


@dataclass(frozen=True)
class RemovedPiece:
    """``[lo, hi]``: the part of an integration range inside removed interval ``u``."""

    u: RemovedInterval
    lo: Fraction | CertifiedValue
    hi: Fraction | CertifiedValue


@dataclass(frozen=True)
class PartialSegment:
    segment: ResidualSegment
    lo: Fraction | CertifiedValue
    hi: Fraction | CertifiedValue


Piece = Union[FullSegment, RemovedPiece, PartialSegment]


@lru_cache(maxsize=64)
def scheme_for(params: SchemeParams) -> Scheme:
    return Scheme(params)


@lru_cache(maxsize=4096)
def _path_point_value(params: SchemeParams, prefix: str, cycle: str):
    s = scheme_for(params)
    rho = 1 / s.four_r
    step = 1 - rho  # (r_{n-1} - r_n) / r_{n-1}

    def jump(n):  # offset of the right child at rank n
        return s.residual_length(n - 1) * step if n - 1 <= s.depth_cap + 2 else rho ** (n - 1) * step

    x = Fraction(0)
    for i, c in enumerate(prefix):
        if c == "R":
            x = x + jump(i + 1)
    start = len(prefix)
    block = Fraction(0)
    for i, c in enumerate(cycle):
        if c == "R":
            block = block + rho ** (start + i) * step
    if block != 0:
        x = x + block / (1 - rho ** len(cycle))
    return x


# ---------------------------------------------------------------------------
# module-level conveniences mirroring the operation list


def u_length(params: SchemeParams, n: int):
    return scheme_for(params).u_length(n)


def v_length(params: SchemeParams, n: int):
    return scheme_for(params).v_length(n)


def residual_length(params: SchemeParams, n: int):
    return scheme_for(params).residual_length(n)


def residual_segment(params: SchemeParams, path: str = "") -> ResidualSegment:
    return scheme_for(params).residual_segment(path)


def removed_interval(params: SchemeParams, path: str = "") -> RemovedInterval:
    return scheme_for(params).removed_interval(path)


def locate(params: SchemeParams, x, max_rank: int | None = None) -> Classification:
    return scheme_for(params).locate(x, max_rank)


def remaining_measure(params: SchemeParams, n: int):
    """Total length left after removing all ranks up to ``n``: ``2**n * r_n``."""
    return 2**n * scheme_for(params).residual_length(n)
