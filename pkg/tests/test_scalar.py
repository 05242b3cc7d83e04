from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hkr_lab.scalar import (
    CertifiedValue,
    ScalarError,
    Undecidable,
    Verdict,
    deserialize,
    enclosure_compare,
    format_rational,
    less,
    log2,
    parse_rational,
    pow_real,
    root,
    round_down,
    round_up,
    serialize,
)

rationals = st.fractions(min_value=Fraction(1, 1000), max_value=1000, max_denominator=10**6)


def test_pow_real_integer_exponents_are_exact():
    assert pow_real(4, 1) == 4
    assert pow_real(4, 2) == 16
    assert pow_real(Fraction(4, 3), 10) == Fraction(1048576, 59049)


def test_pow_real_rational_root_is_exact_when_possible():
    assert pow_real(Fraction(9, 4), Fraction(1, 2)) == Fraction(3, 2)
    assert pow_real(8, Fraction(2, 3)) == 4


def test_pow_real_irrational_result_encloses_the_value():
    v = pow_real(3, Fraction(1, 2))
    assert isinstance(v, CertifiedValue)
    assert v.lo * v.lo < 3 < v.hi * v.hi
    assert v.hi - v.lo < Fraction(1, 2**240)


def test_pow_real_rejects_nonpositive_base():
    with pytest.raises(ScalarError):
        pow_real(0, Fraction(1, 2))
    with pytest.raises(ScalarError):
        pow_real(-2, 2)


def test_enclosure_compare_examples():
    assert enclosure_compare(Fraction(1), Fraction(2)) is Verdict.CERTAINLY_LESS
    a = CertifiedValue.from_center_radius(1, Fraction(1, 2))
    b = CertifiedValue.from_center_radius(Fraction(6, 5), Fraction(1, 2))
    assert enclosure_compare(a, b) is Verdict.OVERLAPPING
    assert enclosure_compare(Fraction(6, 25), Fraction(6, 25)) is Verdict.OVERLAPPING
    assert enclosure_compare(Fraction(3), Fraction(2)) is Verdict.CERTAINLY_GREATER


def test_less_raises_when_undecidable():
    a = CertifiedValue(Fraction(0), Fraction(1))
    with pytest.raises(Undecidable):
        less(a, Fraction(1, 2))
    assert less(a, 2)


def test_log2_of_three_brackets_known_digits():
    v = log2(3)
    assert Fraction("1.5849625007211561") < v.hi
    assert v.lo < Fraction("1.5849625007211562")


def test_round_outward():
    q = Fraction(1, 3)
    assert round_down(q, 20) <= q <= round_up(q, 20)
    assert round_up(q, 20) - round_down(q, 20) <= Fraction(1, 2**19)


def test_serialize_enclosure_contains_value():
    v = pow_real(2, Fraction(1, 2))
    back = deserialize(serialize(v))
    assert back.contains(v)


@given(rationals, st.integers(min_value=0, max_value=20))
def test_pow_matches_repeated_multiplication(q, k):
    expected = Fraction(1)
    for _ in range(k):
        expected *= q
    assert pow_real(q, k) == expected


@given(rationals, rationals, st.fractions(min_value=1, max_value=4, max_denominator=12))
def test_enclosure_arithmetic_is_conservative(a, b, e):
    ea = CertifiedValue.from_center_radius(a, Fraction(1, 10**9))
    eb = CertifiedValue.from_center_radius(b, Fraction(1, 10**9))
    assert (ea + eb).contains(a + b)
    assert (ea * eb).contains(a * b)
    assert (ea - eb).contains(a - b)
    assert (ea / eb).contains(a / b)
    p = pow_real(ea, e)
    exact = pow_real(a, e)
    lo, hi = (exact, exact) if isinstance(exact, Fraction) else (exact.lo, exact.hi)
    assert p.lo <= hi and lo <= p.hi


@given(st.fractions(max_denominator=10**12))
def test_rational_round_trip(q):
    assert parse_rational(format_rational(q)) == q
    assert serialize(q) == format_rational(q)


@given(rationals, st.fractions(min_value=1, max_value=5, max_denominator=7))
def test_root_inverts_power(x, s):
    y = root(x, s)
    back = pow_real(y, s) if isinstance(y, Fraction) else y
    if isinstance(y, Fraction):
        assert back == x
    else:
        lo, hi = pow_real(y.lo, s), pow_real(y.hi, s)
        lo = lo if isinstance(lo, Fraction) else lo.lo
        hi = hi if isinstance(hi, Fraction) else hi.hi
        assert lo <= x <= hi
