"""Exact arithmetic for fortunes of the form p + q*ell.

Coefficients are dyadic rationals and ell is either a rational or a
quadratic surd (a + b*sqrt(r))/c, so every comparison reduces to integer
arithmetic and terminates.
"""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction
from math import gcd, isqrt

from .errors import ParseError, PreconditionViolated


def _sign(n: int) -> int:
    return (n > 0) - (n < 0)


def _tz(n: int) -> int:
    return (n & -n).bit_length() - 1


def _sign_surd(P: int, R: int, r: int) -> int:
    """Sign of P + R*sqrt(r) for a nonsquare r > 0."""
    sp, sr = _sign(P), _sign(R)
    if sr == 0:
        return sp
    if sp == 0 or sp == sr:
        return sr
    # opposite signs: the larger magnitude wins, compared after squaring
    d = P * P - R * R * r
    return sp if d > 0 else sr


class Dyadic:
    """Dyadic rational num / 2**exp, kept with num odd (or zero with exp 0)."""

    __slots__ = ("num", "exp")

    def __init__(self, num: int = 0, exp: int = 0):
        if exp < 0:
            num <<= -exp
            exp = 0
        if num == 0:
            exp = 0
        elif exp:
            s = min(_tz(num), exp)
            num >>= s
            exp -= s
        self.num = num
        self.exp = exp

    @classmethod
    def coerce(cls, x) -> Dyadic:
        if isinstance(x, Dyadic):
            return x
        if isinstance(x, int):
            return cls(x)
        if isinstance(x, str):
            try:
                x = Fraction(x.strip())
            except ValueError as exc:
                raise ParseError(f"not a number: {x!r}") from exc
        if isinstance(x, Fraction):
            return cls.from_fraction(x)
        raise TypeError(f"cannot convert {type(x).__name__} to Dyadic")

    @classmethod
    def from_fraction(cls, fr: Fraction) -> Dyadic:
        den = fr.denominator
        if den & (den - 1):
            raise ParseError(f"{fr} is not a dyadic rational")
        return cls(fr.numerator, den.bit_length() - 1)

    def _align(self, other: Dyadic):
        e = max(self.exp, other.exp)
        return self.num << (e - self.exp), other.num << (e - other.exp), e

    def __add__(self, other):
        if isinstance(other, int):
            other = Dyadic(other)
        if not isinstance(other, Dyadic):
            return NotImplemented
        x, y, e = self._align(other)
        return Dyadic(x + y, e)

    __radd__ = __add__

    def __neg__(self):
        return Dyadic(-self.num, self.exp)

    def __sub__(self, other):
        if isinstance(other, int):
            other = Dyadic(other)
        if not isinstance(other, Dyadic):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, int):
            return Dyadic(self.num * other, self.exp)
        if isinstance(other, Dyadic):
            return Dyadic(self.num * other.num, self.exp + other.exp)
        return NotImplemented

    __rmul__ = __mul__

    def half(self) -> Dyadic:
        return Dyadic(self.num, self.exp + 1)

    def double(self) -> Dyadic:
        return Dyadic(self.num, self.exp - 1)

    def to_fraction(self) -> Fraction:
        return Fraction(self.num, 1 << self.exp)

    def __float__(self):
        return float(self.to_fraction())

    def __bool__(self):
        return self.num != 0

    def __eq__(self, other):
        if isinstance(other, int):
            return self.exp == 0 and self.num == other
        if isinstance(other, Dyadic):
            return self.num == other.num and self.exp == other.exp
        return NotImplemented

    def __hash__(self):
        return hash((self.num, self.exp))

    def _cmp(self, other) -> int:
        other = Dyadic.coerce(other)
        x, y, _ = self._align(other)
        return _sign(x - y)

    def __lt__(self, other):
        return self._cmp(other) < 0

    def __le__(self, other):
        return self._cmp(other) <= 0

    def __gt__(self, other):
        return self._cmp(other) > 0

    def __ge__(self, other):
        return self._cmp(other) >= 0

    def __str__(self):
        return str(self.num) if self.exp == 0 else f"{self.num}/{1 << self.exp}"

    def __repr__(self):
        return f"Dyadic({self})"


class LinearForm:
    """Exact value p + q*ell with dyadic p, q.

    Stored as integers (a, b, c) with value (a + b*ell) / 2**c and c minimal;
    this is also the algebraic form 2**-c (a + b*ell) used by reachability.
    """

    __slots__ = ("a", "b", "c")

    def __init__(self, p=0, q=0):
        p = Dyadic.coerce(p)
        q = Dyadic.coerce(q)
        c = max(p.exp, q.exp)
        self._set(p.num << (c - p.exp), q.num << (c - q.exp), c)

    def _set(self, a: int, b: int, c: int):
        if c:
            m = a | b
            if m == 0:
                c = 0
            else:
                s = min(_tz(m), c)
                a >>= s
                b >>= s
                c -= s
        self.a = a
        self.b = b
        self.c = c

    @classmethod
    def raw(cls, a: int, b: int, c: int = 0) -> LinearForm:
        if c < 0:
            a <<= -c
            b <<= -c
            c = 0
        obj = object.__new__(cls)
        obj._set(a, b, c)
        return obj

    @property
    def p(self) -> Dyadic:
        return Dyadic(self.a, self.c)

    @property
    def q(self) -> Dyadic:
        return Dyadic(self.b, self.c)

    def _align(self, other: LinearForm):
        c = max(self.c, other.c)
        s, t = c - self.c, c - other.c
        return self.a << s, self.b << s, other.a << t, other.b << t, c

    def __add__(self, other):
        if not isinstance(other, LinearForm):
            return NotImplemented
        a1, b1, a2, b2, c = self._align(other)
        return LinearForm.raw(a1 + a2, b1 + b2, c)

    def __sub__(self, other):
        if not isinstance(other, LinearForm):
            return NotImplemented
        a1, b1, a2, b2, c = self._align(other)
        return LinearForm.raw(a1 - a2, b1 - b2, c)

    def __neg__(self):
        return LinearForm.raw(-self.a, -self.b, self.c)

    def scale(self, k: int) -> LinearForm:
        return LinearForm.raw(self.a * k, self.b * k, self.c)

    def shift(self, k: int) -> LinearForm:
        """Multiply by 2**k (k may be negative)."""
        return LinearForm.raw(self.a, self.b, self.c - k)

    def double(self) -> LinearForm:
        return self.shift(1)

    def halve(self) -> LinearForm:
        return self.shift(-1)

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def __eq__(self, other):
        if not isinstance(other, LinearForm):
            return NotImplemented
        return self.a == other.a and self.b == other.b and self.c == other.c

    def __hash__(self):
        return hash((self.a, self.b, self.c))

    def __repr__(self):
        return f"LinearForm({self})"

    def __str__(self):
        p, q = self.p, self.q
        if not q:
            return str(p)
        qs = "ell" if q == 1 else "-ell" if q == -1 else f"{q}*ell"
        if not p:
            return qs
        return f"{p}{qs}" if qs.startswith("-") else f"{p}+{qs}"

    def to_json(self) -> dict:
        p, q = self.p, self.q
        return {"p_num": p.num, "p_exp": p.exp, "q_num": q.num, "q_exp": q.exp}

    @classmethod
    def from_json(cls, obj) -> LinearForm:
        try:
            return cls(Dyadic(int(obj["p_num"]), int(obj["p_exp"])),
                       Dyadic(int(obj["q_num"]), int(obj["q_exp"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad LinearForm JSON: {obj!r}") from exc


ZERO = LinearForm(0)
ONE = LinearForm(1)
ELL = LinearForm(0, 1)


class EllSpec:
    """Stake cap ell. Subclasses give exact sign tests for a + b*ell."""

    is_irrational = False

    def sign_ab(self, A: int, B: int) -> int:
        raise NotImplementedError

    def canon(self, x: LinearForm) -> LinearForm:
        return x

    def enclose(self, k: int) -> tuple[Fraction, Fraction]:
        raise NotImplementedError

    def __float__(self):
        lo, hi = self.enclose(60)
        return float((lo + hi) / 2)

    def _check_range(self):
        # 0 < ell <= 1/2, i.e. sign(ell) > 0 and sign(1 - 2*ell) >= 0
        if self.sign_ab(0, 1) <= 0 or self.sign_ab(1, -2) < 0:
            raise PreconditionViolated(f"ell = {self} must lie in (0, 1/2]")

    def is_half(self) -> bool:
        return self.sign_ab(1, -2) == 0


@dataclass(frozen=True)
class EllRational(EllSpec):
    p: int
    q: int

    def __post_init__(self):
        if self.q <= 0:
            raise PreconditionViolated("denominator must be positive")
        g = gcd(self.p, self.q)
        if g != 1:
            object.__setattr__(self, "p", self.p // g)
            object.__setattr__(self, "q", self.q // g)
        object.__setattr__(self, "_twos", _tz(self.q))
        object.__setattr__(self, "_odd", self.q >> _tz(self.q))
        self._check_range()

    @property
    def value(self) -> Fraction:
        return Fraction(self.p, self.q)

    def sign_ab(self, A, B):
        return _sign(A * self.q + B * self.p)

    def canon(self, x):
        # Representations of one value differ in q by multiples of the odd part
        # of the denominator, so q reduced into [0, odd) is a unique choice.
        t, qo = self._twos, self._odd
        if qo == 1:
            return LinearForm.raw((x.a << t) + x.b * self.p, 0, x.c + t)
        qi = (x.b * pow(2, -x.c, qo)) % qo
        k = (x.b - (qi << x.c)) // qo
        c = x.c + t
        return LinearForm.raw((x.a << t) + k * self.p, qi << c, c)

    def enclose(self, k):
        return self.value, self.value

    def __str__(self):
        return f"{self.p}/{self.q}"


@dataclass(frozen=True)
class EllSurd(EllSpec):
    """ell = (a + b*sqrt(r)) / c with r nonsquare and b != 0."""

    a: int
    b: int
    r: int
    c: int

    is_irrational = True

    def __post_init__(self):
        if self.c <= 0 or self.r <= 0:
            raise PreconditionViolated("need c > 0 and r > 0")
        if self.b == 0 or isqrt(self.r) ** 2 == self.r:
            raise PreconditionViolated("not irrational: use EllRational")
        self._check_range()

    def sign_ab(self, A, B):
        return _sign_surd(A * self.c + B * self.a, B * self.b, self.r)

    def enclose(self, k):
        m = max(0, k + abs(self.b).bit_length() + 1)
        s = isqrt(self.r << (2 * m))
        lo_root, hi_root = Fraction(s, 1 << m), Fraction(s + 1, 1 << m)
        if self.b < 0:
            lo_root, hi_root = hi_root, lo_root
        return (Fraction(self.a) + self.b * lo_root) / self.c, (Fraction(self.a) + self.b * hi_root) / self.c

    def __str__(self):
        k = "" if abs(self.b) == 1 else f"{abs(self.b)}*"
        root = f"{k}sqrt({self.r})"
        if self.a == 0 and self.b > 0:
            return root if self.c == 1 else f"{root}/{self.c}"
        sign = "+" if self.b > 0 else "-"
        return f"({self.a}{sign}{root})/{self.c}"


def make_surd(a: int, b: int, r: int, c: int) -> EllSpec:
    """Build (a + b*sqrt(r))/c in lowest terms; falls back to EllRational."""
    if r <= 0 or c == 0:
        raise PreconditionViolated("need r > 0 and c != 0")
    k, rr, i = 1, r, 2
    while i * i <= rr:
        while rr % (i * i) == 0:
            rr //= i * i
            k *= i
        i += 1
    b *= k
    if c < 0:
        a, b, c = -a, -b, -c
    if rr == 1 or b == 0:
        return EllRational(a + b * isqrt(rr), c)
    g = gcd(gcd(a, b), c)
    return EllSurd(a // g, b // g, rr, c // g)


_NUM = r"(\d+(?:\.\d+)?)"
_RAT_RE = re.compile(rf"^{_NUM}(?:/(\d+))?$")
_SQRT_RE = re.compile(r"^(?:(\d+)\*)?sqrt\((\d+)(?:/(\d+))?\)(?:/(\d+))?$")
_GEN_RE = re.compile(r"^\((-?\d+)([+-])(?:(\d+)\*)?sqrt\((\d+)\)\)/(\d+)$")


def parse_ell(text: str) -> EllSpec:
    """Parse "p/q", "sqrt(p/q)", "k*sqrt(r)/c" or "(a+b*sqrt(r))/c"."""
    s = re.sub(r"\s+", "", str(text))
    if m := _RAT_RE.match(s):
        v = Fraction(m.group(1)) / int(m.group(2) or 1)
        return EllRational(v.numerator, v.denominator)
    if m := _SQRT_RE.match(s):
        k = int(m.group(1) or 1)
        p, q, c = int(m.group(2)), int(m.group(3) or 1), int(m.group(4) or 1)
        # k*sqrt(p/q)/c = k*sqrt(p*q)/(q*c)
        return make_surd(0, k, p * q, q * c)
    if m := _GEN_RE.match(s):
        a = int(m.group(1))
        b = int(m.group(3) or 1) * (1 if m.group(2) == "+" else -1)
        return make_surd(a, b, int(m.group(4)), int(m.group(5)))
    raise ParseError(f"cannot parse ell specification {text!r}")


_TERM_RE = re.compile(r"[+-]?[^+-]+")
_ELL_TERM_RE = re.compile(rf"^(?:{_NUM}(?:/(\d+))?\*?)?ell(?:/(\d+))?$")


def parse_form(text: str) -> LinearForm:
    """Parse a fortune such as "1/2", "1-ell", "1/2+3/4*ell" or LinearForm JSON."""
    s = str(text).strip()
    if s.startswith("{"):
        try:
            return LinearForm.from_json(json.loads(s))
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON fortune {text!r}") from exc
    s = re.sub(r"\s+", "", s)
    if not s:
        raise ParseError("empty fortune")
    p = Fraction(0)
    q = Fraction(0)
    for term in _TERM_RE.findall(s):
        sign = -1 if term[0] == "-" else 1
        body = term.lstrip("+-")
        if m := _ELL_TERM_RE.match(body):
            coef = Fraction(m.group(1) or 1) / int(m.group(2) or 1) / int(m.group(3) or 1)
            q += sign * coef
        elif m := _RAT_RE.match(body):
            p += sign * Fraction(m.group(1)) / int(m.group(2) or 1)
        else:
            raise ParseError(f"cannot parse term {term!r} in fortune {text!r}")
    return LinearForm(Dyadic.from_fraction(p), Dyadic.from_fraction(q))


# -- operations -------------------------------------------------------------

def lf_add(x: LinearForm, y: LinearForm) -> LinearForm:
    return x + y


def lf_sub(x: LinearForm, y: LinearForm) -> LinearForm:
    return x - y


def lf_neg(x: LinearForm) -> LinearForm:
    return -x


def lf_double(x: LinearForm) -> LinearForm:
    return x.double()


def lf_halve(x: LinearForm) -> LinearForm:
    return x.halve()


def lf_sign(x: LinearForm, ell: EllSpec) -> int:
    return ell.sign_ab(x.a, x.b)


def lf_cmp(x: LinearForm, y: LinearForm, ell: EllSpec) -> int:
    return lf_sign(x - y, ell)


def lf_eq(x: LinearForm, y: LinearForm, ell: EllSpec) -> bool:
    if ell.is_irrational:
        return x == y
    return lf_sign(x - y, ell) == 0


def lf_enclose(x: LinearForm, ell: EllSpec, bits: int) -> tuple[Fraction, Fraction]:
    """Exact rational bounds on the value of x, width <= 2**-bits."""
    if x.b == 0:
        v = Fraction(x.a, 1 << x.c)
        return v, v
    lo, hi = ell.enclose(bits - x.c + abs(x.b).bit_length())
    if x.b < 0:
        lo, hi = hi, lo
    scale = Fraction(1, 1 << x.c)
    return (x.a + x.b * lo) * scale, (x.a + x.b * hi) * scale


def _float_down(v: Fraction) -> float:
    f = float(v)
    return math.nextafter(f, -math.inf) if Fraction(f) > v else f


def _float_up(v: Fraction) -> float:
    f = float(v)
    return math.nextafter(f, math.inf) if Fraction(f) < v else f


def lf_to_interval(x: LinearForm, ell: EllSpec, precision_bits: int = 53) -> tuple[float, float]:
    """Float interval enclosing x. Width is 2**-precision_bits * max(1, |x|),
    or a couple of ulps when that is finer than double precision allows.
    """
    if precision_bits < 1:
        raise PreconditionViolated("precision_bits must be >= 1")
    lo, hi = lf_enclose(x, ell, precision_bits)
    return _float_down(lo), _float_up(hi)


def lf_float(x: LinearForm, ell: EllSpec) -> float:
    lo, hi = lf_enclose(x, ell, 64)
    return float((lo + hi) / 2)


def lf_value(x: LinearForm, ell: EllSpec) -> Fraction:
    """Exact value; only defined for rational ell."""
    if ell.is_irrational:
        raise PreconditionViolated("exact value needs a rational ell")
    return Fraction(x.a, 1 << x.c) + Fraction(x.b, 1 << x.c) * ell.value


def lf_text(x: LinearForm, ell: EllSpec) -> str:
    """Display string: the exact value for rational ell, the form otherwise."""
    if ell.is_irrational:
        return str(x)
    return str(lf_value(x, ell))
