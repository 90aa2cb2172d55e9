"""Acceptance suite. Each test carries a criterion marker; the terminal summary
prints one PASS/FAIL line per criterion. Runnable directly as a script too."""
import math
import random
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from boldplay.chain import LOSE, WIN, GameParams, trajectory
from boldplay.coupling import (coupled_run, g_func, h_at_least_half, h_ratio, lemma_check, lemma_pairs,
                               stopping_params, supermartingale_check)
from boldplay.improve import (DEFAULT_BUDGET, find_improvement, hps_demo, member_constant,
                              scaling_diagnostic, verify_improvement)
from boldplay.ivutil import iv_bounds
from boldplay.numeric import ELL, ONE, Dyadic, LinearForm, lf_cmp, lf_eq, lf_sign, parse_ell
from boldplay.qsolver import Budget, q_bounds, q_consistency_check
from boldplay.reach import construct_counterexample, not_in_s_certificate, search_hit

GRID_ELLS = ["3/10", "sqrt(1/5)"]
GRID_WS = [Fraction(1, 10), Fraction(1, 4), Fraction(2, 5)]


def dy(num, exp=0) -> LinearForm:
    return LinearForm(Dyadic(num, exp))


# -- 1: unrestricted bold play ----------------------------------------------------------------

@pytest.mark.criterion(1)
def test_unrestricted_values():
    params = GameParams("1/2", Fraction(3, 10))
    # hand-unrolled: Q(1/2) = w, Q(1/4) = w Q(1/2), Q(3/4) = w + (1-w) Q(1/2)
    w = Fraction(3, 10)
    expected = {dy(1, 1): w, dy(1, 2): w * w, dy(3, 2): w + (1 - w) * w}
    assert expected == {dy(1, 1): Fraction(3, 10), dy(1, 2): Fraction(9, 100), dy(3, 2): Fraction(51, 100)}
    t0 = time.perf_counter()
    for f, q in expected.items():
        iv, _ = q_bounds(params, f, Budget(target_width=Fraction(1, 10**9)))
        assert iv.contains(q) and iv.width <= Fraction(1, 10**9)
    assert time.perf_counter() - t0 < 1.0


# -- 2: closed form near the goal -----------------------------------------------------------

@pytest.mark.criterion(2)
def test_near_goal_consistency():
    t0 = time.perf_counter()
    for text in GRID_ELLS:
        for w in GRID_WS:
            report = q_consistency_check(GameParams(text, w), 6, Budget(target_width=Fraction(1, 10**6)))
            assert report.ok and len(report.rows) == 7
            assert report.max_width <= Fraction(1, 10**6)
    assert time.perf_counter() - t0 < 60


# -- 3: the counterexample point --------------------------------------------------------------

@pytest.mark.criterion(3)
def test_counterexample_construction():
    t0 = time.perf_counter()
    ell = parse_ell("sqrt(1/5)")
    cx = construct_counterexample(ell)
    assert (cx.m, cx.d, cx.n) == (1, 3, 1)
    assert lf_eq(cx.f0, (ONE - ELL).shift(-3) + ELL, ell)
    assert len(cx.witness) == cx.n + cx.m + cx.d - 2 == 3
    assert cx.witness == [LOSE] * (cx.n - 1) + [WIN] * (cx.d + cx.m - 1)
    assert lf_eq(cx.start, cx.f0 - ELL, ell)
    assert trajectory(cx.start, cx.witness, ell)[-1] == ell.canon(ONE - ELL)
    assert lf_eq(cx.above, cx.f0 + ELL, ell)
    assert not_in_s_certificate(cx.above, ell) is not None
    assert search_hit(ell, cx.above, 14) is None
    assert time.perf_counter() - t0 < 30


# -- 4: a deviation that beats bold play ------------------------------------------------------

@pytest.mark.criterion(4)
@pytest.mark.parametrize("text, w", [("sqrt(1/5)", Fraction(1, 20)), ("sqrt(1/5)", Fraction(1, 4)),
                                     ("sqrt(2)/4", Fraction(1, 4))])
def test_improvement_certified(text, w):
    t0 = time.perf_counter()
    params = GameParams(text, w)
    cert = find_improvement(params)
    assert cert.margin > 0
    assert cert.lhs.lo > cert.rhs.hi
    again = verify_improvement(params, cert.f, cert.epsilon, cert.budget.doubled())
    assert again is not None and again.margin > 0
    assert time.perf_counter() - t0 < 600


# -- 5: negative control ------------------------------------------------------------------------

@pytest.mark.criterion(5)
def test_unit_fraction_cap_never_certifies():
    t0 = time.perf_counter()
    params = GameParams("1/3", Fraction(1, 4))
    pairs = [(dy(k, 4), Dyadic(1, e)) for k in range(6, 11) for e in (3, 4, 5, 6)]
    assert len(pairs) == 20
    for f, eps in pairs:
        assert verify_improvement(params, f, eps, DEFAULT_BUDGET) is None
    assert time.perf_counter() - t0 < 300


# -- 6: small-w heuristic ----------------------------------------------------------------------

@pytest.mark.criterion(6)
def test_small_w_deviation():
    t0 = time.perf_counter()
    report = hps_demo(GameParams("3/10", Fraction(1, 100)), Dyadic(1, 6))
    assert report.verdict == "deviation_better" and report.separated
    assert time.perf_counter() - t0 < 60


# -- 7: coupling invariants -----------------------------------------------------------------------

def _random_fortune(rng: random.Random, ell) -> LinearForm:
    while True:
        c = rng.randint(0, 10)
        f = LinearForm(Dyadic(rng.randint(0, 2**c), c), Dyadic(rng.randint(-3, 3)))
        if lf_sign(f, ell) >= 0 and lf_sign(ONE - f, ell) >= 0:
            return ell.canon(f)


@pytest.mark.criterion(7)
def test_coupled_runs():
    runs = 10_000
    texts = ["sqrt(1/5)", "3/10", "sqrt(2)/4", "1/10"]
    rng = random.Random(7)
    bits = np.random.default_rng(7)
    for i in range(runs):
        text = texts[i % len(texts)]
        ell = parse_ell(text)
        f1, f2 = _random_fortune(rng, ell), _random_fortune(rng, ell)
        if lf_cmp(f1, f2, ell) < 0:
            f1, f2 = f2, f1
        w = (0.05, 0.25, 0.45)[i % 3]
        word = [WIN if b else LOSE for b in bits.random(200) < w]
        path = coupled_run(f1, f2, word, ell, check=False)
        assert len(path) == 201
        gap0 = f1 - f2
        for s in path:
            assert lf_cmp(s.x, s.y, ell) >= 0
            assert lf_cmp(s.x - s.y, gap0.shift(s.k), ell) <= 0


@pytest.mark.criterion(7)
@pytest.mark.parametrize("text", ["sqrt(1/5)", "3/10", "sqrt(2)/4"])
def test_h_range_and_signs(text):
    ell = parse_ell(text)
    rng = random.Random(text)
    inside = lambda x: lf_cmp(x, ELL, ell) >= 0 and lf_cmp(x, ONE - ELL, ell) <= 0  # noqa: E731
    for _ in range(1000):
        a, b = _random_fortune(rng, ell), _random_fortune(rng, ell)
        f, fs = (a, b) if lf_cmp(a, b, ell) >= 0 else (b, a)
        if f == fs:
            continue
        h = h_ratio(f, fs, ell)
        assert -1 <= h <= 1
        assert h_at_least_half(f, fs, ell) == (float(h) >= 0.5)
        if inside(f) and inside(fs):
            assert h == 0
        if lf_cmp(fs, ELL, ell) >= 0 and lf_cmp(f, ONE - ELL, ell) >= 0:
            assert h <= 0
        if lf_cmp(fs, ELL, ell) <= 0 and lf_cmp(f, ONE - ELL, ell) <= 0:
            assert h >= 0


@pytest.mark.criterion(7)
@pytest.mark.parametrize("w", GRID_WS)
def test_g_shape(w):
    for x in (0, -1):
        lo, hi = (float(v) for v in iv_bounds(g_func(w, x)))
        assert abs(lo - 1) <= 1e-10 and abs(hi - 1) <= 1e-10
    grid = [Fraction(k, 1000) for k in range(1, 1000)]
    vals = [tuple(float(v) for v in iv_bounds(g_func(w, x))) for x in grid]
    for (lo_a, _), (_, hi_b) in zip(vals, vals[1:]):
        assert hi_b < lo_a


# -- 8: exhaustive gap inequalities and the supermartingale -------------------------------------

@pytest.mark.criterion(8)
@pytest.mark.parametrize("text", GRID_ELLS)
@pytest.mark.parametrize("w", GRID_WS)
def test_gap_inequalities(text, w):
    t0 = time.perf_counter()
    params = GameParams(text, w)
    stop = stopping_params(params)
    bounds = {"A": 1, "R": stop.L, "B": stop.L + 1, "C": stop.L + 2}
    for lemma, pairs in lemma_pairs(params).items():
        assert pairs
        for f1, f2 in pairs:
            res = lemma_check(f1, f2, params, lemma)
            assert res.ok and res.max_stop <= bounds[lemma]
            assert res.words <= 2 ** (stop.L + 2)
    rep = supermartingale_check(params)
    assert rep.ok and rep.states >= 100 and rep.worst_slack >= -1e-10
    assert time.perf_counter() - t0 < 300


# -- 9: scaling near the counterexample --------------------------------------------------------

@pytest.mark.criterion(9)
def test_scaling_diagnostics():
    params = GameParams("sqrt(1/5)", Fraction(1, 4))
    cx = construct_counterexample(params.ell)
    eps = [Dyadic(1, k) for k in range(4, 13)]
    q_top, _ = q_bounds(params, ONE - ELL, DEFAULT_BUDGET)
    c = member_constant(params, cx, q_top)
    assert c > 0
    below = scaling_diagnostic(params, cx.start, "below", eps)
    assert all(r.ratio_lo >= c for r in below.rows)
    above = scaling_diagnostic(params, cx.above, "above", eps)
    highs = [r.ratio_hi for r in above.rows]
    assert all(b < a for a, b in zip(highs, highs[1:]))
    assert math.isfinite(float(highs[-1]))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
