"""Membership in S, the set of fortunes from which bold play can hit 1 - ell.

Membership is only semi-decided: a witness word proves f in S, and an
algebraic parity obstruction proves f not in S for points above 1 - ell.
Everything else is reported as unknown.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .chain import LOSE, WIN, GameParams, Outcome, check_fortune, successors, trajectory, word_str
from .errors import ConstructionFailed, PreconditionViolated, RationalEll
from .numeric import ELL, ONE, ZERO, EllSpec, LinearForm, lf_cmp, lf_eq


@dataclass(frozen=True)
class AlgebraicForm:
    """f = 2**-c (a + b*ell); c minimal, so a or b is odd whenever c >= 1."""

    a: int
    b: int
    c: int

    def to_form(self) -> LinearForm:
        return LinearForm.raw(self.a, self.b, self.c)

    def to_json(self) -> dict:
        return {"a": self.a, "b": self.b, "c": self.c}


@dataclass(frozen=True)
class NotInSCertificate:
    form: AlgebraicForm
    tag: str

    def to_json(self) -> dict:
        return {"form": self.form.to_json(), "violated": self.tag}


@dataclass
class MembershipVerdict:
    status: str  # "in_s", "not_in_s" or "unknown"
    witness: Optional[list[Outcome]] = None
    certificate: Optional[NotInSCertificate] = None
    search_depth: Optional[int] = None

    def to_json(self) -> dict:
        out = {"status": self.status}
        if self.witness is not None:
            out["witness"] = word_str(self.witness)
        if self.certificate is not None:
            out["certificate"] = self.certificate.to_json()
        if self.search_depth is not None:
            out["search_depth"] = self.search_depth
        return out


def _ell(params) -> EllSpec:
    return params.ell if isinstance(params, GameParams) else params


def hit_target(ell: EllSpec) -> LinearForm:
    return ell.canon(ONE - ELL)


def search_hit(params, f: LinearForm, max_depth: int) -> Optional[list[Outcome]]:
    """Shortest outcome word whose trajectory from f hits 1 - ell exactly.

    Layered breadth-first search with a visited set over exact fortunes, so a
    fortune reached again by a longer word is never revisited. None only
    means no witness of length <= max_depth exists.
    """
    if max_depth < 0:
        raise PreconditionViolated("max_depth must be >= 0")
    ell = _ell(params)
    f = check_fortune(f, ell)
    target = hit_target(ell)
    if f == target:
        return []
    parent: dict[LinearForm, tuple] = {f: None}
    layer = [f]
    for _ in range(max_depth):
        nxt = []
        for x in layer:
            if x == ONE or x == ZERO:
                continue
            for g, o in zip(successors(x, ell), (WIN, LOSE)):
                if g in parent:
                    continue
                parent[g] = (x, o)
                if g == target:
                    word = []
                    while parent[g] is not None:
                        g, o = parent[g]
                        word.append(o)
                    return word[::-1]
                nxt.append(g)
        if not nxt:
            break
        layer = nxt
    return None


def canonical_form(f: LinearForm, ell: EllSpec) -> AlgebraicForm:
    if not ell.is_irrational:
        raise RationalEll("the (a, b, c) representation is unique only for irrational ell")
    return AlgebraicForm(f.a, f.b, f.c)


def not_in_s_certificate(f: LinearForm, ell: EllSpec) -> Optional[NotInSCertificate]:
    """Parity obstruction for points of (1 - ell, 1].

    Every member of S in [1 - ell, 1] other than 1 - ell has a representation
    with c >= 1, a >= 2 and a or b odd. With c minimal the only candidate is
    the canonical one, so c = 0 or a < 2 rules membership out.
    """
    ell = _ell(ell)
    if not ell.is_irrational:
        raise RationalEll("the parity obstruction needs an irrational ell")
    f = check_fortune(f, ell)
    if lf_cmp(f, ONE - ELL, ell) <= 0:
        raise PreconditionViolated(f"fortune {f} is not above 1 - ell")
    form = canonical_form(f, ell)
    if f == ONE:
        return NotInSCertificate(form, "absorbed_at_goal")
    if form.c == 0:
        return NotInSCertificate(form, "no_representation_with_c_ge_1_and_odd_coefficient")
    if form.a < 2:
        return NotInSCertificate(form, "a_below_2")
    return None


def classify(params, f: LinearForm, max_depth: int) -> MembershipVerdict:
    ell = _ell(params)
    f = check_fortune(f, ell)
    if ell.is_irrational and lf_cmp(f, ONE - ELL, ell) > 0:
        cert = not_in_s_certificate(f, ell)
        if cert is not None:
            return MembershipVerdict("not_in_s", certificate=cert)
    word = search_hit(ell, f, max_depth)
    if word is not None:
        return MembershipVerdict("in_s", witness=word)
    return MembershipVerdict("unknown", search_depth=max_depth)


@dataclass
class CounterexamplePoint:
    m: int
    d: int
    n: int
    f0: LinearForm
    witness: list[Outcome]
    certificate: NotInSCertificate
    readings: dict = field(default_factory=dict)

    @property
    def start(self) -> LinearForm:
        """f0 - ell, the point shown to lie in S."""
        return self.f0 - ELL

    @property
    def above(self) -> LinearForm:
        """f0 + ell, the point shown not to lie in S."""
        return self.f0 + ELL

    def to_json(self) -> dict:
        return {"m": self.m, "d": self.d, "n": self.n, "f0": self.f0.to_json(),
                "f0_text": str(self.f0), "witness": word_str(self.witness),
                "witness_length": len(self.witness),
                "not_in_s_certificate": self.certificate.to_json(), "readings": self.readings}


def _inside(x, lo, hi, ell) -> bool:
    return lf_cmp(x, lo, ell) > 0 and lf_cmp(x, hi, ell) < 0


def construct_counterexample(ell: EllSpec, d_max: int = 64) -> CounterexamplePoint:
    """Smallest (m, d, n) giving f0 in (ell, 1 - ell) with f0 - ell in S and
    f0 + ell not in S, plus the explicit witness for f0 - ell.
    """
    ell = _ell(ell)
    if not ell.is_irrational:
        raise RationalEll(f"ell = {ell} is rational")
    if ell.is_half():
        raise PreconditionViolated("ell must be < 1/2")
    one_minus = ONE - ELL
    gap = ONE - ELL.scale(2)

    m = 1
    while not (lf_cmp(ONE - ELL.scale(m), ELL, ell) > 0 and lf_cmp(ONE - ELL.scale(m), ELL.scale(2), ell) <= 0):
        m += 1
    top = ONE - ELL.scale(m)

    # f0 + ell must land above 1 - ell for the parity obstruction to apply
    lower = ELL if lf_cmp(ELL, gap, ell) >= 0 else gap
    for d in range(1, d_max + 1):
        base = top.shift(-d)
        if lf_cmp(base, gap, ell) >= 0:
            continue
        n = 1
        f0 = base + ELL
        while lf_cmp(f0, one_minus, ell) < 0:
            if lf_cmp(f0, lower, ell) > 0:
                return _finish(ell, m, d, n, f0)
            n += 1
            f0 = f0 + ELL
    raise ConstructionFailed(f"no (d, n) found with d <= {d_max}")


def _finish(ell, m, d, n, f0) -> CounterexamplePoint:
    witness = [LOSE] * (n - 1) + [WIN] * (d + m - 1)
    path = trajectory(f0 - ELL, witness, ell)
    if not lf_eq(path[-1], ONE - ELL, ell):
        raise ConstructionFailed(f"witness replay ends at {path[-1]}, not 1 - ell")
    cert = not_in_s_certificate(f0 + ELL, ell)
    if cert is None:
        raise ConstructionFailed("parity obstruction does not apply to f0 + ell")
    alt = ONE.shift(-d) - ELL.shift(-d) + ELL.scale(n)
    readings = {
        "f0_in_ell_window": _inside(f0, ELL, ONE - ELL, ell),
        "f0_in_gap_window": _inside(f0, ONE - ELL.scale(2), ONE - ELL, ell),
        "literal_condition_with_one_minus_ell": _inside(alt, ONE - ELL.scale(2), ONE - ELL, ell),
    }
    return CounterexamplePoint(m, d, n, f0, witness, cert, readings)
