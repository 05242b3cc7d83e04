"""Independent reference computations used to freeze expected values.

Nothing here calls the package's integration engine or closed forms: the
geometry is rebuilt by plain recursion and series are summed term by term.
"""

from __future__ import annotations

from fractions import Fraction


def lengths(r: int, n: int):
    """``(u_n, v_n, r_n)`` straight from the defining formulas."""
    u = Fraction(4**r - 2, 4 ** (r * n))
    return u, u / 3 ** (n * r), Fraction(1, 4 ** (r * n))


def cores(r: int, depth: int):
    """All cores ``(rank, lo, hi)`` of rank <= depth, built by recursion on segments."""
    out = []
    segs = [(Fraction(0), Fraction(1))]
    for n in range(1, depth + 1):
        u, v, rn = lengths(r, n)
        nxt = []
        for lo, hi in segs:
            mid = (lo + hi) / 2
            out.append((n, mid - v / 2, mid + v / 2))
            nxt.append((lo, lo + rn))
            nxt.append((hi - rn, hi))
        segs = nxt
    return out


def removed(r: int, depth: int):
    """All removed intervals ``(rank, lo, hi)`` of rank <= depth."""
    out = []
    segs = [(Fraction(0), Fraction(1))]
    for n in range(1, depth + 1):
        u, v, rn = lengths(r, n)
        nxt = []
        for lo, hi in segs:
            out.append((n, lo + rn, hi - rn))
            nxt.append((lo, lo + rn))
            nxt.append((hi - rn, hi))
        segs = nxt
    return out


def F_value(r: int, x: Fraction, depth: int = 16) -> int:
    """F at ``x`` by descent: keep the residual segment containing x, stop in a core."""
    lo, hi = Fraction(0), Fraction(1)
    for n in range(1, depth + 1):
        u, v, rn = lengths(r, n)
        mid = (lo + hi) / 2
        if mid - v / 2 < x < mid + v / 2:
            return n
        if x <= lo + rn:
            hi = lo + rn
        elif x >= hi - rn:
            lo = hi - rn
        else:
            return 0
    return 0


def abs_power_integral(r: int, a: Fraction, b: Fraction, s: int, depth: int = 10):
    """``int_a^b F^s`` over cores of rank <= depth, and a bound on the rest."""
    total = Fraction(0)
    for k, lo, hi in cores(r, depth):
        overlap = min(hi, b) - max(lo, a)
        if overlap > 0:
            total += k**s * overlap
    tail = Fraction(0)
    k = depth + 1
    while True:
        u, v, _ = lengths(r, k)
        term = 2 ** (k - 1) * k**s * v
        tail += term
        if term < Fraction(1, 10**60):
            break
        k += 1
    # the ratio of consecutive terms is below 1/2 from here on, so doubling the last term covers the rest
    return total, tail + term


def series_partial(power: int, x: Fraction, start: int, stop: int) -> Fraction:
    return sum((Fraction(n) ** power * x**n for n in range(start, stop)), Fraction(0))


def star_tail_brute(n: int, terms: int = 400) -> Fraction:
    """``3 sum_{k>n} k (2/3)^k`` truncated after ``terms`` terms."""
    x = Fraction(2, 3)
    return 3 * sum((k * x**k for k in range(n + 1, n + 1 + terms)), Fraction(0))


def minimal_rank_brute(epsilon: Fraction) -> int:
    n = 1
    while True:
        # the neglected part of the truncated tail is below 1e-60 for 400 terms
        if star_tail_brute(n) + Fraction(1, 10**60) < epsilon:
            return n
        n += 1


def piecewise_positive_integral(r: int, a, b, sigma: int, c, slope, anchor, depth: int = 9, s: int = 1):
    """``int_a^b [sigma F_N(y) - c - slope (y - anchor)]_+ ** s dy`` with F_N truncated at ``depth``.

    F_N is a finite step function; each constant piece is integrated by
    locating the sub-piece where the linear function is positive.  Returns
    the value and a bound for the truncated ranks: replacing ``[p]_+ ** s``
    by ``[q]_+ ** s`` on a rank-k core costs at most ``(k + G) ** s``.
    """
    pts = {a, b}
    pieces = [(k, max(lo, a), min(hi, b)) for k, lo, hi in cores(r, depth) if lo < b and hi > a]
    for _, lo, hi in pieces:
        pts.update((lo, hi))
    xs = sorted(pts)
    total = Fraction(0)
    for p, q in zip(xs, xs[1:]):
        k = 0
        for kk, lo, hi in pieces:
            if lo <= p and q <= hi:
                k = kk
                break
        total += _clipped_linear(sigma * k - c - slope * (p - anchor), slope, q - p, s)
    G = abs(c) + abs(slope)
    tail = Fraction(0)
    k = depth + 1
    while True:
        _, v, _ = lengths(r, k)
        term = 2 ** (k - 1) * (k + G) ** s * v
        tail += term
        if term < Fraction(1, 10**60):
            break
        k += 1
    return total, 2 * tail


def _clipped_linear(w0, slope, length, s: int = 1):
    """``int_0^length [w0 - slope t]_+ ** s dt``."""
    if slope == 0:
        return max(w0, 0) ** s * length
    # w(t) = w0 - slope t is positive on [t0, t1]
    root = w0 / slope
    t0, t1 = (0, min(root, length)) if slope > 0 else (max(root, 0), length)
    if t1 <= t0:
        return Fraction(0)
    wa, wb = w0 - slope * t0, w0 - slope * t1
    return (wa ** (s + 1) - wb ** (s + 1)) / (slope * (s + 1))
