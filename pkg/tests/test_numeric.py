from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from boldplay.errors import ParseError, PreconditionViolated
from boldplay.numeric import (ELL, ONE, ZERO, Dyadic, EllRational, EllSurd, LinearForm, lf_add,
                              lf_double, lf_enclose, lf_eq, lf_halve, lf_neg, lf_sign, lf_sub,
                              lf_text, lf_to_interval, make_surd, parse_ell, parse_form)
from oracles import sym_ell, sym_sign

SURDS = ["sqrt(1/5)", "sqrt(2)/4", "(3-sqrt(5))/4", "sqrt(1/10)", "sqrt(1/7)", "(1+sqrt(2))/5"]
RATIONALS = ["1/2", "3/10", "1/3", "1/4", "2/5", "1/10"]

ints = st.integers(-2**70, 2**70)
exps = st.integers(0, 80)
dyadics = st.builds(Dyadic, ints, exps)
forms = st.builds(LinearForm, dyadics, dyadics)


def frac_pair(x: LinearForm):
    return x.p.to_fraction(), x.q.to_fraction()


# -- Dyadic ----------------------------------------------------------------------

def test_dyadic_normalized():
    d = Dyadic(12, 4)
    assert (d.num, d.exp) == (3, 2)
    assert Dyadic(0, 9).exp == 0
    assert Dyadic(3, -2) == 12
    assert str(Dyadic(3, 2)) == "3/4"


@given(dyadics, dyadics)
def test_dyadic_matches_fraction(x, y):
    fx, fy = x.to_fraction(), y.to_fraction()
    assert (x + y).to_fraction() == fx + fy
    assert (x - y).to_fraction() == fx - fy
    assert (x * y).to_fraction() == fx * fy
    assert x.half().to_fraction() == fx / 2
    assert x.double().to_fraction() == fx * 2
    assert (x < y) == (fx < fy)
    assert x.num % 2 == 1 or (x.num == 0 and x.exp == 0) or x.exp == 0


def test_dyadic_rejects_non_dyadic():
    with pytest.raises(ParseError):
        Dyadic.coerce("1/3")


# -- LinearForm arithmetic -----------------------------------------------------------

def test_form_examples():
    x = lf_sub(ONE, ELL)
    assert (x.p, x.q) == (Dyadic(1), Dyadic(-1))
    h = lf_halve(x)
    assert (h.p, h.q) == (Dyadic(1, 1), Dyadic(-1, 1))
    assert lf_add(x, lf_neg(x)).is_zero()
    assert lf_double(h) == x


@given(forms, forms, forms)
def test_ring_laws(x, y, z):
    assert x + y == y + x
    assert (x + y) + z == x + (y + z)
    assert (x + y).double() == x.double() + y.double()
    assert frac_pair(x - y) == tuple(a - b for a, b in zip(frac_pair(x), frac_pair(y)))
    assert LinearForm.raw(x.a, x.b, x.c) == x


@given(forms)
def test_normalization_idempotent(x):
    again = LinearForm.raw(x.a, x.b, x.c)
    assert (again.a, again.b, again.c) == (x.a, x.b, x.c)
    assert x.c == 0 or (x.a | x.b) & 1


@given(forms)
def test_json_round_trip(x):
    assert LinearForm.from_json(x.to_json()) == x


# -- exact signs -----------------------------------------------------------------------

def test_sign_examples():
    ell = parse_ell("sqrt(1/5)")
    assert lf_sign(ZERO, ell) == 0
    assert lf_sign(ONE - ELL.scale(2), ell) == 1
    assert lf_sign(ELL.scale(2) - ONE, ell) == -1


@pytest.mark.parametrize("text", SURDS)
@settings(max_examples=150, deadline=None)
@given(a=st.integers(-10**6, 10**6), b=st.integers(-10**6, 10**6))
def test_surd_sign_matches_sympy(text, a, b):
    ell = parse_ell(text)
    assert ell.sign_ab(a, b) == sym_sign(Fraction(a), Fraction(b), sym_ell(text))


@pytest.mark.parametrize("text", SURDS)
def test_surd_sign_near_ties(text):
    # best rational approximations make P + R*sqrt(r) tiny, the hard case
    ell = parse_ell(text)
    sym = sym_ell(text)
    cf = sympy.continued_fraction_iterator(sym)
    convergents = sympy.continued_fraction_convergents(cf)
    for i, c in enumerate(convergents):
        if i > 30:
            break
        p, q = int(c.p), int(c.q)
        assert ell.sign_ab(-p, q) == sym_sign(Fraction(-p), Fraction(q), sym)


@pytest.mark.parametrize("text", RATIONALS)
@given(forms)
def test_rational_sign(text, x):
    ell = parse_ell(text)
    p, q = frac_pair(x)
    v = p + q * ell.value
    assert lf_sign(x, ell) == (v > 0) - (v < 0)


@given(forms)
def test_sign_antisymmetric(x):
    ell = parse_ell("sqrt(2)/4")
    assert lf_sign(x, ell) == -lf_sign(-x, ell)
    assert lf_sign(x, ell) in (-1, 0, 1)


@settings(max_examples=300)
@given(forms, st.sampled_from(SURDS + RATIONALS))
def test_sign_agrees_with_interval(x, text):
    ell = parse_ell(text)
    lo, hi = lf_to_interval(x, ell, 60)
    s = lf_sign(x, ell)
    if lo > 0:
        assert s == 1
    if hi < 0:
        assert s == -1


# -- equality ------------------------------------------------------------------------------

def test_eq_examples():
    irr = parse_ell("sqrt(1/5)")
    assert lf_eq(ONE - ELL, ONE - ELL, irr)
    approx = LinearForm(Dyadic(int(float(irr) * 2**40), 40))
    assert not lf_eq(ELL, approx, irr)
    assert lf_eq(ELL, LinearForm(Dyadic(1, 2)), parse_ell("1/4"))


@given(forms, forms)
def test_eq_structural_for_irrational(x, y):
    ell = parse_ell("sqrt(1/7)")
    assert lf_eq(x, y, ell) == (frac_pair(x) == frac_pair(y))
    assert lf_eq(x, x + LinearForm(0), ell)


@pytest.mark.parametrize("text", ["3/10", "1/3", "2/5", "1/6"])
@given(forms, st.integers(-40, 40))
def test_rational_canon_unique(text, x, k):
    ell = parse_ell(text)
    # shifting by k*(q*ell - p) keeps the value and must canonicalize back
    other = x + LinearForm.raw(-k * ell.p, k * ell.q, 0)
    assert ell.canon(other) == ell.canon(x)
    assert lf_sign(ell.canon(x) - x, ell) == 0


# -- enclosures --------------------------------------------------------------------------

def test_interval_examples():
    assert lf_to_interval(LinearForm(Dyadic(1, 1)), parse_ell("sqrt(1/5)")) == (0.5, 0.5)
    lo, hi = lf_to_interval(ELL, parse_ell("sqrt(1/5)"), 40)
    assert lo <= 0.44721359549995793 <= hi and hi - lo <= 2**-40
    lo, hi = lf_to_interval(ONE - ELL, parse_ell("3/10"))
    assert lo <= 0.7 <= hi and hi - lo < 1e-15
    with pytest.raises(PreconditionViolated):
        lf_to_interval(ELL, parse_ell("3/10"), 0)


@settings(max_examples=100, deadline=None)
@given(forms, st.sampled_from(SURDS), st.integers(1, 200))
def test_enclosure_contains_value(x, text, bits):
    ell = parse_ell(text)
    lo, hi = lf_enclose(x, ell, bits)
    assert hi - lo <= Fraction(1, 2**bits)
    p, q = frac_pair(x)
    v = sympy.Rational(p.numerator, p.denominator) + sympy.Rational(q.numerator, q.denominator) * sym_ell(text)
    assert sympy.Rational(lo.numerator, lo.denominator) <= v <= sympy.Rational(hi.numerator, hi.denominator)


# -- parsing -------------------------------------------------------------------------------

@pytest.mark.parametrize("text, expected", [
    ("3/10", EllRational(3, 10)),
    ("0.3", EllRational(3, 10)),
    ("sqrt(1/5)", EllSurd(0, 1, 5, 5)),
    ("sqrt(2)/4", EllSurd(0, 1, 2, 4)),
    ("(3-sqrt(5))/4", EllSurd(3, -1, 5, 4)),
    ("sqrt(8)/8", EllSurd(0, 1, 2, 4)),
    ("sqrt(1/4)", EllRational(1, 2)),
])
def test_parse_ell(text, expected):
    assert parse_ell(text) == expected
    assert parse_ell(str(expected)) == expected


@pytest.mark.parametrize("text", ["", "abc", "sqrt(5)", "3/5", "-1/4", "0", "sqrt(x)"])
def test_parse_ell_rejects(text):
    with pytest.raises((ParseError, PreconditionViolated)):
        parse_ell(text)


def test_surd_validation():
    with pytest.raises(PreconditionViolated):
        EllSurd(0, 1, 4, 4)
    with pytest.raises(PreconditionViolated):
        EllSurd(0, 0, 5, 5)
    assert make_surd(1, 1, 1, 4) == EllRational(1, 2)


@pytest.mark.parametrize("text, p, q", [
    ("1/2", Fraction(1, 2), 0),
    ("1-ell", 1, -1),
    ("1/2+3/4*ell", Fraction(1, 2), Fraction(3, 4)),
    ("ell/4", 0, Fraction(1, 4)),
    ("-1/8 + 7/8 ell", Fraction(-1, 8), Fraction(7, 8)),
    ('{"p_num": 1, "p_exp": 3, "q_num": 7, "q_exp": 3}', Fraction(1, 8), Fraction(7, 8)),
])
def test_parse_form(text, p, q):
    assert frac_pair(parse_form(text)) == (Fraction(p), Fraction(q))


@pytest.mark.parametrize("text", ["", "1/3", "x+1", "1/2*elf", "{bad json"])
def test_parse_form_rejects(text):
    with pytest.raises(ParseError):
        parse_form(text)


def test_text_rendering():
    assert str(ONE - ELL) == "1-ell"
    assert str(LinearForm(Dyadic(1, 1), Dyadic(3, 2))) == "1/2+3/4*ell"
    assert lf_text(ONE - ELL, parse_ell("3/10")) == "7/10"
    assert lf_text(ONE - ELL, parse_ell("sqrt(1/5)")) == "1-ell"
