"""Bold play under a stake cap, evolved exactly over LinearForm fortunes."""
from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .errors import ParseError, PreconditionViolated, RationalEll
from .numeric import ELL, ONE, ZERO, EllSpec, LinearForm, lf_float, parse_ell


class Outcome(enum.Enum):
    WIN = "W"
    LOSE = "L"

    def __str__(self):
        return self.value


WIN, LOSE = Outcome.WIN, Outcome.LOSE


def parse_word(text: str) -> list[Outcome]:
    try:
        return [Outcome(ch) for ch in text.strip().upper()]
    except ValueError as exc:
        raise ParseError(f"outcome words use only W and L, got {text!r}") from exc


def word_str(outcomes: Iterable[Outcome]) -> str:
    return "".join(o.value for o in outcomes)


class Absorption(enum.Enum):
    GOAL = "goal"
    RUIN = "ruin"
    ACTIVE = "active"


@dataclass(frozen=True)
class GameParams:
    ell: EllSpec
    w: Fraction

    def __post_init__(self):
        if isinstance(self.ell, str):
            object.__setattr__(self, "ell", parse_ell(self.ell))
        w = Fraction(self.w)
        if not 0 < w < Fraction(1, 2):
            raise PreconditionViolated(f"w = {w} must lie in (0, 1/2)")
        object.__setattr__(self, "w", w)

    @property
    def theorem_ready(self) -> bool:
        return self.ell.is_irrational and not self.ell.is_half()

    def require_theorem_ready(self):
        if not self.ell.is_irrational:
            raise RationalEll(f"ell = {self.ell} is rational; an irrational cap is required")
        if self.ell.is_half():
            raise PreconditionViolated("ell must be < 1/2")

    def canon(self, f: LinearForm) -> LinearForm:
        return self.ell.canon(f)


def _ell_of(params) -> EllSpec:
    return params.ell if isinstance(params, GameParams) else params


def check_fortune(f: LinearForm, params) -> LinearForm:
    """Canonicalize f and verify 0 <= f <= 1."""
    ell = _ell_of(params)
    if not isinstance(f, LinearForm):
        raise TypeError(f"fortune must be a LinearForm, got {type(f).__name__}")
    if ell.sign_ab(f.a, f.b) < 0 or ell.sign_ab((1 << f.c) - f.a, -f.b) < 0:
        raise PreconditionViolated(f"fortune {f} is outside [0, 1]")
    return ell.canon(f)


def stake(f: LinearForm, params) -> LinearForm:
    """min{ell, f, 1 - f}, by exact sign tests."""
    ell = _ell_of(params)
    a, b, c = f.a, f.b, f.c
    one = 1 << c
    # f <= 1/2 picks f, otherwise 1 - f; then compare that with ell
    if ell.sign_ab(2 * a - one, 2 * b) <= 0:
        s = f if ell.sign_ab(a, b - one) < 0 else ELL
    else:
        s = LinearForm.raw(one - a, -b, c) if ell.sign_ab(one - a, -b - one) < 0 else ELL
    return ell.canon(s)


def successors(f: LinearForm, params) -> tuple[LinearForm, LinearForm]:
    """(win, lose) successors of f under bold play."""
    ell = _ell_of(params)
    s = stake(f, ell)
    return ell.canon(f + s), ell.canon(f - s)


def step(f: LinearForm, o: Outcome, params) -> LinearForm:
    ell = _ell_of(params)
    s = stake(f, ell)
    return ell.canon(f + s if o is WIN else f - s)


def trajectory(f0: LinearForm, outcomes: Sequence[Outcome], params) -> list[LinearForm]:
    ell = _ell_of(params)
    path = [ell.canon(f0)]
    for o in outcomes:
        path.append(step(path[-1], o, ell))
    return path


def absorbed(f: LinearForm, params=None) -> Absorption:
    if params is not None:
        f = _ell_of(params).canon(f)
    if f == ONE:
        return Absorption.GOAL
    if f == ZERO:
        return Absorption.RUIN
    return Absorption.ACTIVE


TRACE_COLUMNS = ("step", "outcome", "p_num", "p_exp", "q_num", "q_exp", "float_approx")


def trace_csv(f0: LinearForm, outcomes: Sequence[Outcome], params, out=None) -> str:
    """CSV of a trajectory; row 0 is the start with an empty outcome."""
    ell = _ell_of(params)
    buf = out if out is not None else io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    path = trajectory(f0, outcomes, ell)
    for k, f in enumerate(path):
        p, q = f.p, f.q
        writer.writerow([k, outcomes[k - 1].value if k else "", p.num, p.exp, q.num, q.exp,
                         repr(lf_float(f, ell))])
    return buf.getvalue() if out is None else ""
