"""Acceptance criteria, one test each; every test prints a PASS/FAIL line."""

import random
from fractions import Fraction

import pytest

import oracles
from hkr_lab.acr import (
    SeriesVerdict,
    acs_threshold,
    adversarial_search,
    double_decker,
    epsilon_to_eta,
    root_subadditivity,
    star_tail,
)
from hkr_lab.blowup import blowup_integral, blowup_quantity, divergence_report, make_site
from hkr_lab.cli import RunConfig, cmd_verify_acr, _emit
from hkr_lab.scalar import as_enclosure, certainly_less, lower
from hkr_lab.scheme import SchemeParams, remaining_measure, scheme_for
from hkr_lab.series import SeriesSpec, StarFamily, lr_norm_series, polygeom_sum, ratio_test
from hkr_lab.stepfn import integrate_abs_power


@pytest.fixture
def verdict(capsys):
    def report(name, ok, detail=""):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {name}{': ' + detail if detail else ''}")
        assert ok, detail

    return report


def width(v):
    e = as_enclosure(v)
    return e.hi - e.lo


def test_nullset_identity(verdict):
    ok = True
    for r in (1, 2, 3):
        p = SchemeParams(r)
        ok &= all(remaining_measure(p, N) == Fraction(2, 4**r) ** N for N in range(41))
        s = polygeom_sum(SeriesSpec(Fraction(0), Fraction(2, 4**r), Fraction(1, 2)), 1, Fraction(1, 10**31))
        target = Fraction(1, 4**r - 2)
        e = as_enclosure(s)
        ok &= e.lo <= target <= e.hi and e.hi - e.lo <= Fraction(1, 10**30)
    verdict("1 nullset identity", ok, "remaining measure exact for N <= 40, series encloses 1/(4^r - 2)")


def test_residual_identity(verdict):
    ok = True
    for r in (1, 2, 3):
        sch = scheme_for(SchemeParams(r))
        for n in range(1, 61):
            rn, un = sch.residual_length(n), sch.u_length(n)
            ok &= rn == (sch.residual_length(n - 1) - un) / 2
            ok &= rn == un / (4**r - 2) and rn < un
            ok &= (un, rn) == (oracles.lengths(r, n)[0], oracles.lengths(r, n)[2])
    verdict("2 residual identity", ok, "exact for n <= 60, r in {1, 2, 3}")


def test_lr_norm(verdict):
    p1 = SchemeParams(1)
    direct = integrate_abs_power(p1, (Fraction(0), Fraction(1)), 1, Fraction(1, 10**13))
    series = lr_norm_series(1, Fraction(1, 10**13))
    # the norm is sum_n n 2^(n-1) v_n = sum_n n 6^(-n); its partial sums converge to 6/25
    brute = oracles.series_partial(1, Fraction(1, 6), 1, 200)
    ok1 = direct == series == Fraction(6, 25) and abs(brute - Fraction(6, 25)) < Fraction(1, 10**100)
    p2 = SchemeParams(2)
    d2 = integrate_abs_power(p2, (Fraction(0), Fraction(1)), 2, Fraction(1, 10**13))
    s2 = lr_norm_series(2, Fraction(1, 10**13))
    ok2 = abs(lower(d2) - lower(s2)) <= Fraction(1, 10**12) and width(d2) <= Fraction(1, 10**12) and width(s2) <= Fraction(1, 10**12)
    verdict("3 L^r norm", ok1 and ok2, f"r=1: {direct} = {series}; r=2: {d2} vs {s2}")


def test_epsilon_to_eta(verdict):
    p = SchemeParams(1)
    n, _ = epsilon_to_eta(p, Fraction(1, 10))
    brute = oracles.minimal_rank_brute(Fraction(1, 10))
    tails_ok = all(abs(star_tail(p, k) - oracles.star_tail_brute(k)) <= Fraction(1, 10**15) for k in range(1, 40))
    verdict("4 epsilon to (n, eta)", n == 18 == brute and tails_ok, f"n = {n}, brute force n = {brute}")


def test_acr_stress(verdict):
    p = SchemeParams(1)
    eps = Fraction(1, 10)
    n, eta = epsilon_to_eta(p, eps)
    res = adversarial_search(p, eta=eta, budget=100_000, seed=0, n=n, epsilon=eps)
    ok = (
        res.evaluated == 100_000
        and res.exceeding == 0
        and res.undecided == 0
        and res.chain_certified == res.evaluated
        and certainly_less(res.best_sum, eps)
    )
    verdict("5 AC_r stress", ok,
            f"{res.evaluated} collections, {res.chain_certified} chains certified, max sum <= {float(res.max_upper):.3e}")


def test_blowup(verdict):
    p = SchemeParams(1)
    rep = divergence_report(p, n_range=range(2, 26))
    rows_ok = [row.n for row in rep.rows] == list(range(2, 26)) and all(
        certainly_less(Fraction(1, 8) * Fraction(4, 3) ** row.n, row.quantity) for row in rep.rows)
    ratio_ok = all(b.closed_bound / a.closed_bound == Fraction(4, 3) for a, b in zip(rep.rows, rep.rows[1:]))
    site = make_site(p, "(L)", 1)
    raw = blowup_integral(p, site) == Fraction(61, 300) and blowup_quantity(p, site) == Fraction(244, 675)
    val, tail = oracles.piecewise_positive_integral(1, Fraction(0), Fraction(3, 4), 1, 0, 0, 0)
    raw &= val <= Fraction(61, 300) <= val + tail
    verdict("6 blow-up", rows_ok and ratio_ok and raw, "n = 2..25 above (1/8)(4/3)^n, n = 1 gives 61/300 and 244/675")


def test_threshold(verdict):
    rep1 = acs_threshold(SchemeParams(1), 1)
    rep2 = acs_threshold(SchemeParams(1), 2)
    star = as_enclosure(rep1.s_star)
    ratio2 = as_enclosure(ratio_test(StarFamily(1, 2)))
    ok = (
        Fraction(15849, 10000) < star.lo and star.hi < Fraction(1585, 1000)
        and ratio_test(StarFamily(1, 1)) == Fraction(2, 3) and rep1.verdict is SeriesVerdict.CONVERGENT
        and rep2.verdict is SeriesVerdict.DIVERGENT and 1 < ratio2.lo
        and ratio2.lo ** 2 <= Fraction(4, 3) <= ratio2.hi ** 2
    )
    verdict("7 threshold", ok, f"s* in [{float(star.lo):.6f}, {float(star.hi):.6f}]")


def test_inequalities(verdict):
    rng = random.Random(2024)
    violations = 0
    trials = 10_000
    for _ in range(trials):
        k = rng.randint(1, 10)
        a = [Fraction(rng.randint(1, 10**6), rng.randint(1, 10**6)) for _ in range(k)]
        b = [Fraction(rng.randint(1, 10**6), rng.randint(1, 10**6)) for _ in range(k)]
        r = Fraction(rng.randint(4, 16), 4)
        violations += not root_subadditivity(a, r).certified
        violations += not double_decker(a, b).certified
    verdict("8 inequality utilities", violations == 0, f"{trials} sequences, {violations} violations")


def test_determinism(verdict, tmp_path):
    cfg = RunConfig(budget=2000, seed=5)
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for path in paths:
        _emit("verify-acr", cfg, cmd_verify_acr(cfg, Fraction(1, 10)), path)
    same = paths[0].read_bytes() == paths[1].read_bytes()
    verdict("9 determinism", same, "two seeded verify-acr runs are byte-identical")
