from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from hkr_lab.scalar import as_enclosure, lower, upper
from hkr_lab.series import (
    DivergentSeries,
    SeriesSpec,
    StarFamily,
    compare_star_ratio_to_one,
    eulerian_row,
    lr_norm_series,
    partial_sum,
    polygeom_sum,
    polylog_neg,
    ratio_test,
    shifted_sum,
    star_ratio,
    tail_closed_form_linear,
)
from hkr_lab.scheme import SchemeParams
from hkr_lab.stepfn import integrate_abs_power


def test_closed_form_examples():
    assert polygeom_sum(SeriesSpec(1, Fraction(1, 6)), 1) == Fraction(6, 25)
    assert polygeom_sum(SeriesSpec(0, Fraction(1, 2)), 1) == 1
    assert polygeom_sum(SeriesSpec(1, Fraction(2, 3)), 19) == 63 * Fraction(2, 3) ** 19


def test_closed_tail_matches_brute_force():
    brute = oracles.series_partial(1, Fraction(2, 3), 19, 10**4)
    assert abs(tail_closed_form_linear(18, Fraction(2, 3)) - brute) < Fraction(1, 10**15)


def test_eulerian_rows():
    assert eulerian_row(1) == (1,)
    assert eulerian_row(3) == (1, 4, 1)
    assert eulerian_row(4) == (1, 11, 11, 1)


def test_polylog_neg_small_powers():
    x = Fraction(1, 3)
    assert polylog_neg(0, x) == Fraction(3, 2)
    assert polylog_neg(1, x) == x / (1 - x) ** 2
    assert polylog_neg(2, x) == x * (1 + x) / (1 - x) ** 3


def test_divergent_ratio_is_rejected():
    with pytest.raises(DivergentSeries):
        polygeom_sum(SeriesSpec(1, Fraction(1)), 1)
    with pytest.raises(DivergentSeries):
        shifted_sum(1, 1, Fraction(3, 2))


def test_ratio_test_examples():
    assert ratio_test(StarFamily(Fraction(1), Fraction(1))) == Fraction(2, 3)
    q = ratio_test(StarFamily(Fraction(1), Fraction(2)))
    assert lower(q) > 1
    assert compare_star_ratio_to_one(1, 2) == 1
    assert ratio_test(SeriesSpec(5, Fraction(9, 10))) == Fraction(9, 10)


def test_star_ratio_sign_decisions():
    assert compare_star_ratio_to_one(1, 1) == -1
    assert compare_star_ratio_to_one(2, 2) == -1
    assert compare_star_ratio_to_one(1, Fraction(1584, 1000)) == -1
    assert compare_star_ratio_to_one(1, Fraction(1585, 1000)) == 1


def test_non_integer_power_is_enclosed():
    v = polygeom_sum(SeriesSpec(Fraction(1, 2), Fraction(1, 2)), 1, Fraction(1, 10**30))
    brute = partial_sum(SeriesSpec(Fraction(1, 2), Fraction(1, 2)), 1, 200)
    e = as_enclosure(v)
    assert e.hi - e.lo <= Fraction(2, 10**30)
    assert e.lo <= upper(brute) + Fraction(1, 10**50) and lower(brute) <= e.hi


@pytest.mark.parametrize("r", [1, 2])
def test_norm_series_matches_direct_integration(r):
    p = SchemeParams(r)
    assert lr_norm_series(r) == integrate_abs_power(p, (0, 1))


def test_norm_series_r1_value():
    assert lr_norm_series(1) == Fraction(6, 25)


def test_star_ratio_enclosure():
    q = as_enclosure(star_ratio(1, 2))
    assert q.lo * q.lo < Fraction(4, 3) < q.hi * q.hi


ratios = st.fractions(min_value=Fraction(1, 20), max_value=Fraction(9, 10), max_denominator=50)


@settings(max_examples=40)
@given(st.integers(min_value=0, max_value=2), ratios, st.integers(min_value=1, max_value=10))
def test_closed_forms_match_brute_force(a, x, start):
    closed = polygeom_sum(SeriesSpec(a, x), start)
    stop = start + 400
    brute = oracles.series_partial(a, x, start, stop)
    # remaining terms are below stop^a x^stop / (1 - x) * (1 + small) for these ratios
    tail = Fraction(stop**a) * x**stop / (1 - x) * 2
    assert brute <= closed <= brute + tail


@settings(max_examples=30)
@given(st.fractions(min_value=0, max_value=3, max_denominator=7), ratios, st.integers(min_value=1, max_value=6))
def test_tail_from_later_cutoff_is_nested(a, x, n):
    whole = as_enclosure(polygeom_sum(SeriesSpec(a, x), n, Fraction(1, 10**12)))
    later = as_enclosure(polygeom_sum(SeriesSpec(a, x), 2 * n, Fraction(1, 10**12)))
    head = as_enclosure(partial_sum(SeriesSpec(a, x), n, 2 * n))
    assert (head + later).lo <= whole.hi and whole.lo <= (head + later).hi
    assert later.lo <= whole.hi
