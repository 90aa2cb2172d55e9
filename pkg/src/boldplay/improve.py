"""Certified one-step deviations that beat bold play, and Q-difference scaling."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import mpmath

from .chain import GameParams, check_fortune, stake
from .errors import PreconditionViolated, SearchExhausted
from .numeric import ELL, ONE, Dyadic, LinearForm, lf_cmp, lf_sign
from .ivutil import frac_iv, iv, iv_bounds, precision
from .qsolver import Budget, ProbInterval, QStats, StateTable, mix
from .reach import CounterexamplePoint, construct_counterexample


DEFAULT_GRID = tuple(Dyadic(1, k) for k in range(4, 25))
DEFAULT_BUDGET = Budget(max_depth=48, max_states=200_000, target_width=Fraction(1, 10**12))


def _eps_form(eps: Dyadic) -> LinearForm:
    return LinearForm(eps)


@dataclass
class ImprovementCertificate:
    ell: str
    w: Fraction
    f: LinearForm
    epsilon: Dyadic
    lhs: ProbInterval
    rhs: ProbInterval
    budget: Budget
    stats: QStats
    counterexample: Optional[CounterexamplePoint] = None

    @property
    def margin(self) -> Fraction:
        return self.lhs.lo - self.rhs.hi

    @property
    def up(self) -> LinearForm:
        return self.f + ELL - _eps_form(self.epsilon)

    @property
    def down(self) -> LinearForm:
        return self.f - ELL + _eps_form(self.epsilon)

    def to_json(self) -> dict:
        out = {"ell": self.ell, "w": str(self.w), "f": self.f.to_json(), "f_text": str(self.f),
               "epsilon": str(self.epsilon), "up": str(self.up), "down": str(self.down),
               "lhs": self.lhs.to_json(), "rhs": self.rhs.to_json(),
               "margin": str(self.margin), "margin_float": float(self.margin),
               "budget": self.budget.to_json(), "stats": self.stats.to_json()}
        if self.counterexample is not None:
            out["counterexample"] = self.counterexample.to_json()
        return out


@dataclass
class Comparison:
    """Both sides of the deviation inequality at one (f, epsilon)."""

    lhs: ProbInterval
    rhs: ProbInterval
    stats: QStats

    @property
    def certified(self) -> bool:
        return self.lhs.lo > self.rhs.hi

    @property
    def refuted(self) -> bool:
        return self.lhs.hi < self.rhs.lo

    @property
    def margin(self) -> Fraction:
        return self.lhs.lo - self.rhs.hi


def _check_improvement_args(params: GameParams, f: LinearForm, epsilon: Dyadic) -> LinearForm:
    f = check_fortune(f, params)
    ell = params.ell
    if not (lf_cmp(f, ELL, ell) > 0 and lf_cmp(f, ONE - ELL, ell) < 0):
        raise PreconditionViolated(f"fortune {f} must lie strictly between ell and 1 - ell")
    e = _eps_form(epsilon)
    if lf_sign(e, ell) <= 0 or lf_cmp(e, stake(f, ell), ell) >= 0:
        raise PreconditionViolated(f"epsilon = {epsilon} must satisfy 0 < epsilon < s(f)")
    return f


def compare(params: GameParams, f: LinearForm, epsilon: Dyadic, budget: Budget,
            table: StateTable | None = None) -> Comparison:
    """Refine one shared table until the two sides separate or the budget binds."""
    f = _check_improvement_args(params, f, Dyadic.coerce(epsilon))
    e = _eps_form(Dyadic.coerce(epsilon))
    t0 = time.perf_counter()
    table = table or StateTable(params)
    up, down = table.add_root(f + ELL - e), table.add_root(f - ELL + e)
    root = table.add_root(f)

    def sides():
        return mix(params.w, table.interval(up), table.interval(down)), table.interval(root)

    def decided():
        lhs, rhs = sides()
        return lhs.lo > rhs.hi or lhs.hi < rhs.lo

    table.refine(budget, targets=[up, down, root], done=decided)
    lhs, rhs = sides()
    stats = table.stats()
    stats.runtime_ms = (time.perf_counter() - t0) * 1000
    return Comparison(lhs, rhs, stats)


def verify_improvement(params: GameParams, f: LinearForm, epsilon, budget: Budget | None = None
                       ) -> Optional[ImprovementCertificate]:
    """Certificate that staking s(f) - epsilon once beats bold play at f, or None.

    Only strict separation lhs.lo > rhs.hi counts; overlap is inconclusive.
    """
    budget = budget or DEFAULT_BUDGET
    epsilon = Dyadic.coerce(epsilon)
    cmp = compare(params, f, epsilon, budget)
    if not cmp.certified:
        return None
    return ImprovementCertificate(str(params.ell), params.w, params.canon(f), epsilon,
                                  cmp.lhs, cmp.rhs, budget, cmp.stats)


def escalation(budget: Budget, levels: int = 3) -> list[Budget]:
    return [budget.scaled(2 ** i) if i else budget for i in range(levels)]


@dataclass
class Attempt:
    epsilon: Dyadic
    budget: Budget
    lhs: ProbInterval
    rhs: ProbInterval
    outcome: str  # certified, refuted, inconclusive or skipped

    def to_json(self) -> dict:
        return {"epsilon": str(self.epsilon), "budget": self.budget.to_json(),
                "lhs": self.lhs.to_json(), "rhs": self.rhs.to_json(),
                "margin": str(self.lhs.lo - self.rhs.hi), "outcome": self.outcome}


def find_improvement(params: GameParams, budget: Budget | None = None,
                     epsilon_grid: Sequence | None = None, levels: int = 3) -> ImprovementCertificate:
    """Search f = f0 - epsilon over the grid, f0 from the counterexample
    construction, escalating the budget until one epsilon certifies.

    An epsilon whose sides separate the wrong way is dropped at once, since
    more budget only tightens intervals.
    """
    params.require_theorem_ready()
    budget = budget or DEFAULT_BUDGET
    grid = [Dyadic.coerce(e) for e in (DEFAULT_GRID if epsilon_grid is None else epsilon_grid)]
    cx = construct_counterexample(params.ell)
    attempts: list[Attempt] = []
    for eps in grid:
        f = cx.f0 - _eps_form(eps)
        try:
            _check_improvement_args(params, f, eps)
        except PreconditionViolated:
            full = ProbInterval(0, 1)
            attempts.append(Attempt(eps, budget, full, full, "skipped"))
            continue
        table = StateTable(params)
        for b in escalation(budget, levels):
            cmp = compare(params, f, eps, b, table)
            if cmp.certified:
                return ImprovementCertificate(str(params.ell), params.w, params.canon(f), eps,
                                              cmp.lhs, cmp.rhs, b, cmp.stats, cx)
            outcome = "refuted" if cmp.refuted else "inconclusive"
            attempts.append(Attempt(eps, b, cmp.lhs, cmp.rhs, outcome))
            if cmp.refuted or cmp.stats.complete:
                break
    raise SearchExhausted(f"no epsilon in the grid certified for ell = {params.ell}, w = {params.w}",
                          attempts=attempts)


@dataclass
class HpsReport:
    ell: str
    w: Fraction
    delta: Dyadic
    f: LinearForm
    bold: ProbInterval
    deviation: ProbInterval
    stats: QStats

    @property
    def verdict(self) -> str:
        if self.deviation.lo > self.bold.hi:
            return "deviation_better"
        if self.deviation.hi < self.bold.lo:
            return "bold_better"
        if self.deviation == self.bold:
            return "equal"
        return "inconclusive"

    @property
    def separated(self) -> bool:
        return self.verdict == "deviation_better"

    def to_json(self) -> dict:
        return {"ell": self.ell, "w": str(self.w), "delta": str(self.delta), "f": str(self.f),
                "bold": self.bold.to_json(), "deviation": self.deviation.to_json(),
                "verdict": self.verdict, "stats": self.stats.to_json()}


def hps_demo(params: GameParams, delta, budget: Budget | None = None) -> HpsReport:
    """Bold play at 1/2 - delta against a first stake of ell - delta."""
    ell = params.ell
    # 1/4 < ell < 1/3 as 4*ell - 1 > 0 and 1 - 3*ell > 0
    if not (ell.sign_ab(-1, 4) > 0 and ell.sign_ab(1, -3) > 0):
        raise PreconditionViolated(f"ell = {ell} must lie in (1/4, 1/3)")
    delta = Dyadic.coerce(delta)
    d = LinearForm(delta)
    if lf_sign(d, ell) < 0 or lf_cmp(d, ELL, ell) >= 0:
        raise PreconditionViolated(f"delta = {delta} must satisfy 0 <= delta < ell")
    budget = budget or DEFAULT_BUDGET
    t0 = time.perf_counter()
    f = LinearForm(Dyadic(1, 1)) - d
    table = StateTable(params)
    root = table.add_root(f)
    up, down = table.add_root(f + ELL - d), table.add_root(f - ELL + d)

    def decided():
        dev = mix(params.w, table.interval(up), table.interval(down))
        bold = table.interval(root)
        return dev.lo > bold.hi or dev.hi < bold.lo

    table.refine(budget, targets=[root, up, down], done=decided)
    stats = table.stats()
    stats.runtime_ms = (time.perf_counter() - t0) * 1000
    deviation = mix(params.w, table.interval(up), table.interval(down))
    return HpsReport(str(ell), params.w, delta, params.canon(f), table.interval(root), deviation, stats)


@dataclass
class ScalingRow:
    epsilon: Dyadic
    lower: LinearForm
    delta_lo: Fraction
    delta_hi: Fraction
    norm_lo: Fraction
    norm_hi: Fraction

    @property
    def ratio_lo(self) -> Fraction:
        return self.delta_lo / (self.norm_hi if self.delta_lo >= 0 else self.norm_lo)

    @property
    def ratio_hi(self) -> Fraction:
        return self.delta_hi / (self.norm_lo if self.delta_hi >= 0 else self.norm_hi)

    def to_json(self) -> dict:
        return {"epsilon": str(self.epsilon), "minus_log2_epsilon": _neg_log2(self.epsilon),
                "lower_point": str(self.lower),
                "delta_lo": str(self.delta_lo), "delta_hi": str(self.delta_hi),
                "ratio_lo": float(self.ratio_lo), "ratio_hi": float(self.ratio_hi)}


CSV_COLUMNS = ("epsilon", "minus_log2_epsilon", "delta_lo", "delta_hi", "ratio_lo", "ratio_hi")


@dataclass
class ScalingDiagnostic:
    ell: str
    w: Fraction
    f: LinearForm
    side: str
    rows: list[ScalingRow] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"ell": self.ell, "w": str(self.w), "f": str(self.f), "side": self.side,
                "rows": [r.to_json() for r in self.rows]}

    def to_csv(self) -> str:
        lines = [",".join(CSV_COLUMNS)]
        for r in self.rows:
            lines.append(",".join([str(r.epsilon), repr(_neg_log2(r.epsilon)), str(float(r.delta_lo)),
                                   str(float(r.delta_hi)), repr(float(r.ratio_lo)),
                                   repr(float(r.ratio_hi))]))
        return "\n".join(lines) + "\n"


def _neg_log2(eps: Dyadic) -> float:
    return float(eps.exp - mpmath.log(eps.num, 2))


def _normalizer(w: Fraction, eps: Dyadic) -> tuple[Fraction, Fraction]:
    """Enclosure of (1-w)**(-log2 eps); exact when eps is a power of two."""
    if eps.num == 1:
        v = (1 - w) ** eps.exp
        return v, v
    with precision(160):
        val = (1 - frac_iv(w)) ** (-iv.log(frac_iv(eps.to_fraction())) / iv.log(2))
        return iv_bounds(val)


def scaling_diagnostic(params: GameParams, f: LinearForm, side: str, epsilons: Sequence,
                       budget: Budget | None = None) -> ScalingDiagnostic:
    """Q(f) - Q(f - eps) ("below") or Q(f) - Q(f - 2 eps) ("above"),
    normalized by (1-w)**(-log2 eps)."""
    if side not in ("below", "above"):
        raise PreconditionViolated(f"side must be 'below' or 'above', got {side!r}")
    budget = budget or DEFAULT_BUDGET
    ell = params.ell
    f = check_fortune(f, params)
    eps_list = [Dyadic.coerce(e) for e in epsilons]
    for a, b in zip(eps_list, eps_list[1:]):
        if not b < a:
            raise PreconditionViolated("epsilons must be strictly decreasing")
    mult = 1 if side == "below" else 2
    diag = ScalingDiagnostic(str(ell), params.w, f, side)
    if not eps_list:
        return diag
    table = StateTable(params)
    root = table.add_root(f)
    lowers = []
    for e in eps_list:
        g = f - LinearForm(e).scale(mult)
        if lf_sign(g, ell) <= 0:
            raise PreconditionViolated(f"f - {mult}*{e} leaves (0, 1)")
        lowers.append(table.add_root(g))
    table.refine(budget, targets=[root, *lowers])
    top = table.interval(root)
    for e, g in zip(eps_list, lowers):
        low = table.interval(g)
        n_lo, n_hi = _normalizer(params.w, e)
        diag.rows.append(ScalingRow(e, g, top.lo - low.hi, top.hi - low.lo, n_lo, n_hi))
    return diag


def member_constant(params: GameParams, cx: CounterexamplePoint, q_one_minus_ell: ProbInterval) -> Fraction:
    """Rational lower bound for C with Q(f) - Q(f - eps) >= C (1-w)**(-log2 eps) at f = f0 - ell.

    C = P(witness then a win) * (1-w)**(1 + log2 ell) * (1 - Q(1 - ell)).
    """
    w = params.w
    p = w
    for o in cx.witness:
        p *= w if o.value == "W" else 1 - w
    # base < 1, so the bound needs the largest exponent, i.e. the upper end of ell
    _, hi_ell = params.ell.enclose(100)
    with precision(160):
        val = (1 - frac_iv(w)) ** (1 + iv.log(frac_iv(hi_ell)) / iv.log(2))
        k = iv_bounds(val)[0]
    return p * k * (1 - q_one_minus_ell.hi)
