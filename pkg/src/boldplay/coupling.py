"""Two gamblers driven by the same outcomes, and the supermartingale built
from the gap between them.

Fortunes stay exact. The gap statistic W = gap**p with p = -log2(1 - w) is
transcendental, so it and everything derived from it is carried as an
mpmath interval; inequalities are asserted against the interval ends plus
a fixed slack of 1e-10.
"""
from __future__ import annotations

import concurrent.futures
import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Optional

import mpmath
import numpy as np

from .chain import LOSE, WIN, GameParams, Outcome, check_fortune, stake, successors
from .errors import HypothesisViolated, InequalityViolated, InvariantViolated, PreconditionViolated
from .ivutil import frac_iv, iv, iv_bounds, precision
from .numeric import ELL, ONE, ZERO, Dyadic, EllSpec, LinearForm, lf_cmp, lf_enclose, lf_float, lf_sign

PREC = 160
SLACK = 1e-10


def _ell(params) -> EllSpec:
    return params.ell if isinstance(params, GameParams) else params


# -- h, g, W -----------------------------------------------------------------

def h_parts(f: LinearForm, fstar: LinearForm, params) -> tuple[LinearForm, LinearForm]:
    """(s(f) - s(fstar), f - fstar); h is their ratio, or 1 when the gap is 0."""
    ell = _ell(params)
    return stake(f, ell) - stake(fstar, ell), f - fstar


def _check_order(f, fstar, ell):
    if lf_cmp(fstar, f, ell) > 0:
        raise PreconditionViolated(f"need fstar <= f, got {fstar} > {f}")


def h_ratio(f: LinearForm, fstar: LinearForm, params):
    """Relative stake change between two ordered fortunes.

    Exact Fraction when ell is rational or the ratio happens to be a rational
    constant (the common cases 0 and +-1); otherwise a 100-digit float.
    """
    ell = _ell(params)
    _check_order(f, fstar, ell)
    num, den = h_parts(f, fstar, ell)
    if lf_sign(den, ell) == 0:
        return Fraction(1)
    if not ell.is_irrational:
        num_v = Fraction(num.a, 1 << num.c) + Fraction(num.b, 1 << num.c) * ell.value
        den_v = Fraction(den.a, 1 << den.c) + Fraction(den.b, 1 << den.c) * ell.value
        return num_v / den_v
    # align to a common power of two, then test proportionality
    c = max(num.c, den.c)
    na, nb = num.a << (c - num.c), num.b << (c - num.c)
    da, db = den.a << (c - den.c), den.b << (c - den.c)
    if na * db == nb * da:
        return Fraction(na, da) if da else Fraction(nb, db)
    with mpmath.workdps(100):
        nlo, nhi = lf_enclose(num, ell, 400)
        dlo, dhi = lf_enclose(den, ell, 400)
        return mpmath.mpf(nlo.numerator) / nlo.denominator / (mpmath.mpf(dlo.numerator) / dlo.denominator)


def h_at_least_half(f: LinearForm, fstar: LinearForm, params) -> bool:
    """h(f, fstar) >= 1/2, decided exactly as 2(s(f) - s(fstar)) >= f - fstar."""
    ell = _ell(params)
    num, den = h_parts(f, fstar, ell)
    if lf_sign(den, ell) == 0:
        return True
    return lf_sign(num.scale(2) - den, ell) >= 0


def _exponent(w: Fraction):
    return -iv.log(1 - frac_iv(w)) / iv.log(2)


def g_func(w, x):
    """w(1+x)**p + (1-w)(1-x)**p with p = -log2(1-w), as an interval."""
    w = Fraction(w)
    with precision(PREC):
        p = _exponent(w)
        xi = frac_iv(x) if isinstance(x, (int, Fraction)) else iv.mpf(x)
        if xi.b < -1 or xi.a > 1:
            raise PreconditionViolated(f"x = {x} outside [-1, 1]")
        wi = frac_iv(w)
        up = 1 + xi
        down = 1 - xi
        t1 = iv.mpf(0) if up.b == 0 else up ** p
        t2 = iv.mpf(0) if down.b == 0 else down ** p
        return wi * t1 + (1 - wi) * t2


def _diff_iv(diff, ell: EllSpec | None):
    if isinstance(diff, LinearForm):
        if ell is None:
            raise PreconditionViolated("a LinearForm gap needs ell")
        lo, hi = lf_enclose(diff, ell, 60 + PREC + max(diff.c, 0))
        return iv.mpf([frac_iv(lo).a, frac_iv(hi).b])
    return frac_iv(Fraction(diff))


def w_statistic(diff, w, ell: EllSpec | None = None):
    """gap**(-log2(1-w)), equivalently (1-w)**(-log2 gap); 0 at gap 0."""
    w = Fraction(w)
    with precision(PREC):
        d = _diff_iv(diff, ell)
        if d.b < 0:
            raise PreconditionViolated("gap must be >= 0")
        if d.b == 0:
            return iv.mpf(0)
        return iv.exp(_exponent(w) * iv.log(d))


# -- stopping parameters -------------------------------------------------------

@dataclass(frozen=True)
class StoppingParams:
    L: int
    alpha: object  # mpmath interval

    @property
    def alpha_float(self) -> float:
        return float(self.alpha.mid)

    def to_json(self) -> dict:
        lo, hi = iv_bounds(self.alpha)
        return {"L": self.L, "alpha_lo": float(lo), "alpha_hi": float(hi)}


def floor_inverse(ell: EllSpec) -> int:
    """floor(1/ell) by exact sign tests on 1 - k*ell."""
    k = max(1, int(1 / float(ell)) - 1)
    while ell.sign_ab(1, -(k + 1)) >= 0:
        k += 1
    while ell.sign_ab(1, -k) < 0:
        k -= 1
    return k


def stopping_params(params: GameParams) -> StoppingParams:
    # floor(1 + (1 - 2 ell)/ell) = floor(1/ell) - 1
    L = floor_inverse(params.ell) - 1
    with precision(PREC):
        q = frac_iv(1 - params.w)
        alpha = 1 - (1 - g_func(params.w, Fraction(1, 2))) * q ** (2 * L)
    lo, hi = iv_bounds(alpha)
    if not (0 < lo and hi < 1):
        raise InvariantViolated(f"alpha = {alpha} not inside (0, 1)")
    return StoppingParams(L, alpha)


# -- coupled evolution ---------------------------------------------------------

@dataclass(frozen=True)
class CoupledState:
    x: LinearForm
    y: LinearForm
    k: int

    @property
    def gap(self) -> LinearForm:
        return self.x - self.y


def coupled_run(f1: LinearForm, f2: LinearForm, outcomes: Iterable[Outcome], params,
                check: bool = True) -> list[CoupledState]:
    """Both gamblers on one outcome word; ordering and gap doubling checked per step."""
    ell = _ell(params)
    x, y = check_fortune(f1, ell), check_fortune(f2, ell)
    if lf_cmp(y, x, ell) > 0:
        raise PreconditionViolated("need f2 <= f1")
    gap0 = x - y
    out = [CoupledState(x, y, 0)]
    for k, o in enumerate(outcomes, 1):
        xs, ys = successors(x, ell), successors(y, ell)
        i = 0 if o is WIN else 1
        x, y = xs[i], ys[i]
        if check:
            if lf_cmp(x, y, ell) < 0:
                raise InvariantViolated(f"ordering lost at step {k}: {x} < {y}")
            if lf_cmp(x - y, gap0.shift(k), ell) > 0:
                raise InvariantViolated(f"gap more than doubled per step by step {k}")
        out.append(CoupledState(x, y, k))
    return out


# -- the stopping schedule ------------------------------------------------------

class Rule(enum.IntEnum):
    BOTH_HIGH = 1
    LEADER_LOW = 2
    STRADDLE_NEAR = 3
    FROZEN = 4


def classify_rule(x: LinearForm, y: LinearForm, ell: EllSpec) -> Rule:
    top = ONE - ELL
    if lf_cmp(y, top, ell) >= 0:
        return Rule.BOTH_HIGH
    if lf_cmp(x, top, ell) < 0:
        return Rule.LEADER_LOW
    if lf_cmp(x, ONE - ELL.halve(), ell) < 0:
        return Rule.STRADDLE_NEAR
    return Rule.FROZEN


def _drops_n(x, y, o, ell) -> bool:
    # a win from Y < 1 - ell <= X
    top = ONE - ELL
    return o is WIN and lf_cmp(y, top, ell) < 0 and lf_cmp(x, top, ell) >= 0


@dataclass(frozen=True)
class ScheduleState:
    k: int
    t: int
    x: LinearForm
    y: LinearForm
    b: int
    n_dropped: bool
    rule: Optional[Rule] = None  # rule applied from this state to the next

    def z(self, params: GameParams, stop: StoppingParams):
        with precision(PREC):
            n = 1 - stop.alpha if self.n_dropped else iv.mpf(1)
            return n * w_statistic(self.x - self.y, params.w, params.ell) / stop.alpha ** self.b


def schedule(f1: LinearForm, f2: LinearForm, outcomes: Iterable[Outcome], params: GameParams,
             max_states: Optional[int] = None) -> Iterator[ScheduleState]:
    """Yield the states at T_0, T_1, ... driven by the outcome stream.

    Stops when the stream runs out before the next stopping time is
    determined, or after reaching a frozen state (which repeats forever).
    """
    ell = params.ell
    x, y = check_fortune(f1, ell), check_fortune(f2, ell)
    it = iter(outcomes)
    t, b, dropped, k = 0, 0, False, 0

    def take():
        nonlocal x, y, t, dropped
        o = next(it)
        if _drops_n(x, y, o, ell):
            dropped = True
        i = 0 if o is WIN else 1
        x, y = successors(x, ell)[i], successors(y, ell)[i]
        t += 1
        return o

    while max_states is None or k < max_states:
        rule = classify_rule(x, y, ell)
        yield ScheduleState(k, t, x, y, b, dropped, rule)
        if rule is Rule.FROZEN:
            return
        try:
            if rule is Rule.BOTH_HIGH:
                take()
            else:
                if rule is Rule.LEADER_LOW:
                    b += 1
                elif take() is WIN:
                    k += 1
                    continue
                while True:
                    stop_h = h_at_least_half(x, y, ell)
                    if take() is WIN or stop_h:
                        break
        except StopIteration:
            return
        k += 1


# -- exhaustive stopping distributions -----------------------------------------

@dataclass(frozen=True)
class Branch:
    prob: Fraction
    x: LinearForm
    y: LinearForm
    t: int
    n_dropped: bool


def _step_pair(x, y, o, ell):
    i = 0 if o is WIN else 1
    return successors(x, ell)[i], successors(y, ell)[i]


def stop_distribution(x: LinearForm, y: LinearForm, params: GameParams, mode: str,
                      cap: int = 64) -> list[Branch]:
    """Exact law of the stopped pair for one stopping rule, by enumerating
    every outcome word up to the stopping time.

    mode "one": a single step. "R": first j >= 0 with a win at j or h at the
    post-state >= 1/2. "T": first j >= 1 with a win at j or h at the pre-state
    >= 1/2. "C": a win at step 1 stops, otherwise as "T" from j >= 2.
    """
    ell, w = params.ell, params.w
    out: list[Branch] = []

    def emit(p, a, c, t, dr):
        out.append(Branch(p, a, c, t, dr))

    def walk(a, c, t, p, dr, first):
        if t >= cap:
            raise InequalityViolated(f"stopping time exceeded {cap} steps")
        stop_h = False if (mode == "C" and first) else h_at_least_half(a, c, ell)
        for o, q in ((WIN, w), (LOSE, 1 - w)):
            a2, c2 = _step_pair(a, c, o, ell)
            dr2 = dr or _drops_n(a, c, o, ell)
            if mode == "R":
                if o is WIN or h_at_least_half(a2, c2, ell):
                    emit(p * q, a2, c2, t + 1, dr2)
                else:
                    walk(a2, c2, t + 1, p * q, dr2, False)
            elif o is WIN or stop_h or mode == "one":
                emit(p * q, a2, c2, t + 1, dr2)
            else:
                walk(a2, c2, t + 1, p * q, dr2, False)

    if mode == "R" and h_at_least_half(x, y, ell):
        return [Branch(Fraction(1), x, y, 0, False)]
    if mode not in ("one", "R", "T", "C"):
        raise PreconditionViolated(f"unknown stopping mode {mode!r}")
    walk(x, y, 0, Fraction(1), False, True)
    return out


# -- lemma checks ---------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    ell: str
    w: str
    f1: str
    f2: str
    max_stop: int
    stop_bound: Optional[int]
    expectation: tuple  # (lo, hi) floats
    bound: tuple
    words: int
    ok: bool
    detail: str = ""

    def to_json(self) -> dict:
        return dict(self.__dict__)


def _iv_pair(x) -> tuple[float, float]:
    lo, hi = iv_bounds(x)
    return float(lo), float(hi)


def _expect(branches, weight):
    with precision(PREC):
        total = iv.mpf(0)
        for br in branches:
            total += frac_iv(br.prob) * weight(br)
        return total


def _le(lhs, rhs) -> bool:
    """lhs <= rhs up to interval width plus SLACK."""
    return iv_bounds(lhs)[0] <= iv_bounds(rhs)[1] + Fraction(SLACK)


def _region(f1, f2, params, lemma):
    ell = params.ell
    top, near = ONE - ELL, ONE - ELL.halve()
    if lf_cmp(f2, f1, ell) > 0:
        raise HypothesisViolated("need f2 <= f1")
    ok = {
        "A": lf_cmp(top, f2, ell) <= 0,
        "R": lf_cmp(f1, top, ell) < 0,
        "B": lf_cmp(f1, top, ell) < 0,
        "C": lf_cmp(f2, top, ell) < 0 <= lf_cmp(f1, top, ell) and lf_cmp(f1, near, ell) < 0,
    }[lemma]
    if not ok:
        raise HypothesisViolated(f"({f1}, {f2}) is outside the region of check {lemma}")


def lemma_check(f1: LinearForm, f2: LinearForm, params: GameParams, lemma: str,
                raise_on_fail: bool = True) -> CheckResult:
    """Exhaustive check of one gap inequality from the pair (f1, f2).

    A: one step from 1 - ell <= f2 <= f1, E[W_1] = W_0.
    R: f1 < 1 - ell, R <= L and E[W_R] <= W_0.
    B: f1 < 1 - ell, T <= L + 1 and E[W_T] <= alpha W_0.
    C: f2 < 1 - ell <= f1 < 1 - ell/2, T <= L + 2 and E[N W_T] <= W_0.
    """
    ell, w = params.ell, params.w
    f1, f2 = check_fortune(f1, ell), check_fortune(f2, ell)
    _region(f1, f2, params, lemma)
    stop = stopping_params(params)
    mode = {"A": "one", "R": "R", "B": "T", "C": "C"}[lemma]
    bound_t = {"A": 1, "R": stop.L, "B": stop.L + 1, "C": stop.L + 2}[lemma]
    branches = stop_distribution(f1, f2, params, mode, cap=stop.L + 8)
    wcache: dict = {}

    def W(br):
        g = br.x - br.y
        if g not in wcache:
            wcache[g] = w_statistic(g, w, ell)
        return wcache[g]

    with precision(PREC):
        w0 = w_statistic(f1 - f2, w, ell)
        if lemma == "C":
            one_minus_alpha = 1 - stop.alpha
            e = _expect(branches, lambda br: (one_minus_alpha if br.n_dropped else 1) * W(br))
        else:
            e = _expect(branches, W)
        rhs = stop.alpha * w0 if lemma == "B" else w0
        max_t = max(br.t for br in branches)
        if lemma == "A":
            ok = _le(e, rhs) and _le(rhs, e)
        else:
            ok = _le(e, rhs)
        ok = ok and max_t <= bound_t
    res = CheckResult(lemma, str(ell), str(w), str(f1), str(f2), max_t, bound_t, _iv_pair(e),
                      _iv_pair(rhs), len(branches), ok)
    if not ok and raise_on_fail:
        raise InequalityViolated(f"check {lemma} failed at ({f1}, {f2})", report=res)
    return res


@dataclass(frozen=True)
class DriverState:
    x: LinearForm
    y: LinearForm
    b: int
    n_dropped: bool


def driver_states(pairs: Iterable[tuple[LinearForm, LinearForm]], params: GameParams,
                  prefix_len: int = 8, limit: Optional[int] = None) -> list[DriverState]:
    """Distinct states seen at stopping times along every prefix word of the
    given length from each start pair."""
    seen: dict[DriverState, None] = {}
    for f1, f2 in pairs:
        for bits in range(1 << prefix_len):
            word = [WIN if (bits >> i) & 1 else LOSE for i in range(prefix_len)]
            for st in schedule(f1, f2, word, params):
                seen.setdefault(DriverState(st.x, st.y, st.b, st.n_dropped), None)
                if limit is not None and len(seen) >= limit:
                    return list(seen)
    return list(seen)


def supermartingale_step(state: DriverState, params: GameParams, stop: StoppingParams):
    """(E[Z_{k+1} | state], Z_k) as intervals, and the largest step count."""
    ell, w = params.ell, params.w
    x, y = state.x, state.y
    rule = classify_rule(x, y, ell)
    with precision(PREC):
        n_k = 1 - stop.alpha if state.n_dropped else iv.mpf(1)
        z_k = n_k * w_statistic(x - y, w, ell) / stop.alpha ** state.b
        if rule is Rule.FROZEN:
            return z_k, z_k, 0
        mode = {Rule.BOTH_HIGH: "one", Rule.LEADER_LOW: "T", Rule.STRADDLE_NEAR: "C"}[rule]
        b_next = state.b + (1 if rule is Rule.LEADER_LOW else 0)
        branches = stop_distribution(x, y, params, mode, cap=stop.L + 8)
        scale = iv.mpf(1) / stop.alpha ** b_next

        def zval(br):
            n = 1 - stop.alpha if (state.n_dropped or br.n_dropped) else iv.mpf(1)
            return n * w_statistic(br.x - br.y, w, ell) * scale

        e = _expect(branches, zval)
        return e, z_k, max(br.t for br in branches)


def default_pairs(params: GameParams, count: int = 12) -> list[tuple[LinearForm, LinearForm]]:
    """Start pairs spread over the four schedule regions, gaps of 2**-k."""
    ell = params.ell
    centres = [ELL.halve(), LinearForm(Dyadic(1, 1)), ONE - ELL.scale(3).shift(-2),
               ONE - ELL.shift(-2), ONE - ELL, ONE - ELL.shift(-3)]
    pairs = []
    for c in centres:
        for k in (6, 11):
            gap = LinearForm.raw(1, 0, k)
            f2 = c - gap
            if lf_sign(f2, ell) > 0 and lf_cmp(c, ONE, ell) <= 0:
                pairs.append((ell.canon(c), ell.canon(f2)))
    return pairs[:count]


@dataclass
class SupermartingaleReport:
    ell: str
    w: str
    states: int
    worst_slack: float
    max_step: int
    step_bound: int
    ok: bool

    def to_json(self) -> dict:
        return dict(self.__dict__)


def supermartingale_check(params: GameParams, pairs=None, prefix_len: int = 8,
                          min_states: int = 100, raise_on_fail: bool = True) -> SupermartingaleReport:
    stop = stopping_params(params)
    pairs = default_pairs(params) if pairs is None else pairs
    states = driver_states(pairs, params, prefix_len)
    worst = math.inf
    max_step = 0
    ok = True
    for st in states:
        e, z, steps = supermartingale_step(st, params, stop)
        max_step = max(max_step, steps)
        slack = float(iv_bounds(z)[1] - iv_bounds(e)[0])
        worst = min(worst, slack)
        if not _le(e, z) or steps > stop.L + 2:
            ok = False
    if len(states) < min_states:
        ok = False
    rep = SupermartingaleReport(str(params.ell), str(params.w), len(states), worst, max_step, stop.L + 2, ok)
    if not ok and raise_on_fail:
        raise InequalityViolated("supermartingale check failed", report=rep)
    return rep


def exact_supermartingale_check(f1: LinearForm, f2: LinearForm, params: GameParams, lemma: str,
                                prefix_len: int = 8, min_states: int = 100):
    """Dispatch to the single-lemma check, or with lemma "Z" to the driver-set
    check seeded from (f1, f2) plus the default start pairs."""
    lemma = lemma.upper()
    if lemma == "Z":
        pairs = [(check_fortune(f1, params.ell), check_fortune(f2, params.ell))] + default_pairs(params)
        return supermartingale_check(params, pairs, prefix_len, min_states)
    if lemma not in ("A", "R", "B", "C"):
        raise PreconditionViolated(f"unknown lemma {lemma!r}")
    return lemma_check(f1, f2, params, lemma)


# -- Monte Carlo -----------------------------------------------------------------

CHUNK = 4096
SIM_COLUMNS = ("step", "x_goal", "y_ruin", "split", "active", "mean_gap")


@dataclass
class MonteCarloResult:
    samples: int
    split: int
    unabsorbed: int
    estimate: float
    ci_low: float
    ci_high: float
    stderr: float
    seed: int
    horizon: int
    per_step: list = field(default_factory=list)

    def to_json(self) -> dict:
        d = dict(self.__dict__)
        d.pop("per_step")
        return d

    def to_csv(self) -> str:
        lines = [",".join(SIM_COLUMNS)]
        for row in self.per_step:
            lines.append(",".join(str(v) for v in row))
        return "\n".join(lines) + "\n"


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = k / n
    den = 1 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


class _Transitions:
    """Memoized successor lookup shared by all samples of one run."""

    def __init__(self, ell):
        self.ell = ell
        self.cache: dict = {}

    def __call__(self, f):
        s = self.cache.get(f)
        if s is None:
            s = self.cache[f] = successors(f, self.ell)
        return s


def _run_chunk(index, n, f1, f2, params, horizon, seed, trans):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))
    wins = rng.random((n, horizon)) < float(params.w)
    ell = params.ell
    # per-step counters; events are recorded at the step they happen, tails
    # at absorption carry the final gap forward
    x_goal = np.zeros(horizon + 2, dtype=np.int64)
    y_ruin = np.zeros(horizon + 2, dtype=np.int64)
    split_at = np.zeros(horizon + 2, dtype=np.int64)
    done_at = np.zeros(horizon + 2, dtype=np.int64)
    gap_sum = np.zeros(horizon + 1)
    gap_tail = np.zeros(horizon + 2)
    split = unabsorbed = 0
    for i in range(n):
        x, y = f1, f2
        xg = yr = False
        row = wins[i]
        for k in range(horizon + 1):
            if not xg and x == ONE:
                xg = True
                x_goal[k] += 1
            if not yr and y == ZERO:
                yr = True
                y_ruin[k] += 1
            if (x == ONE or x == ZERO) and (y == ONE or y == ZERO):
                done_at[k] += 1
                split_at[k] += xg and yr
                g = float(x == ONE) - float(y == ONE)
                gap_tail[k] += g
                gap_tail[horizon + 1] -= g
                break
            gap_sum[k] += lf_float(x - y, ell)
            if k == horizon:
                unabsorbed += 1
                break
            j = 0 if row[k] else 1
            x, y = trans(x)[j], trans(y)[j]
        split += xg and yr and x == ONE and y == ZERO
    gaps = gap_sum + np.cumsum(gap_tail)[:horizon + 1]
    counts = np.stack([np.cumsum(a)[:horizon + 1] for a in (x_goal, y_ruin, split_at, done_at)], axis=1)
    return split, unabsorbed, counts, gaps


def monte_carlo_diff(f1: LinearForm, f2: LinearForm, params: GameParams, samples: int,
                     horizon: int = 200, seed: int = 0, threads: int = 1) -> MonteCarloResult:
    """Estimate Q(f1) - Q(f2) as the frequency of X absorbed at 1 with Y at 0.

    Outcomes for chunk i come from SeedSequence(seed, spawn_key=(i,)), so the
    result does not depend on the thread count.
    """
    if samples < 1:
        raise PreconditionViolated("samples must be >= 1")
    if horizon < 1:
        raise PreconditionViolated("horizon must be >= 1")
    ell = params.ell
    x0, y0 = check_fortune(f1, ell), check_fortune(f2, ell)
    if lf_cmp(y0, x0, ell) > 0:
        raise PreconditionViolated("need f2 <= f1")
    trans = _Transitions(ell)
    jobs = [(i, min(CHUNK, samples - i * CHUNK)) for i in range((samples + CHUNK - 1) // CHUNK)]
    args = [(i, n, x0, y0, params, horizon, seed, trans) for i, n in jobs]
    if threads > 1:
        with concurrent.futures.ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda a: _run_chunk(*a), args))
    else:
        parts = [_run_chunk(*a) for a in args]
    split = sum(p[0] for p in parts)
    unabsorbed = sum(p[1] for p in parts)
    counts = sum(p[2] for p in parts)
    gaps = sum(p[3] for p in parts)
    est = split / samples
    lo, hi = wilson_interval(split, samples)
    per_step = [(k, int(c[0]), int(c[1]), int(c[2]), samples - int(c[3]), repr(float(gaps[k] / samples)))
                for k, c in enumerate(counts)]
    return MonteCarloResult(samples, split, unabsorbed, est, lo, hi,
                            math.sqrt(est * (1 - est) / samples), seed, horizon, per_step)


def lemma_pairs(params: GameParams) -> dict[str, list[tuple[LinearForm, LinearForm]]]:
    """A few start pairs inside each lemma's hypothesis region."""
    ell = params.ell
    half = LinearForm(Dyadic(1, 1))
    top = ONE - ELL

    def gap(k):
        return LinearForm(Dyadic(1, k))

    low = [(half, half - gap(6)), (ELL, ELL.halve()), (top - gap(10), ELL.halve()),
           (ELL.halve(), ELL.halve() - gap(12)), (half - gap(3), half - gap(3))]
    pairs = {
        "A": [(ONE, top), (ONE - ELL.shift(-2), top), (ONE - ELL.shift(-3), ONE - ELL.halve())],
        "R": low,
        "B": low,
        "C": [(ONE - ELL.scale(3).shift(-2), top - gap(6)), (top, half - gap(4)),
              (ONE - ELL.scale(5).shift(-3), ELL)],
    }
    return {k: [(ell.canon(a), ell.canon(b)) for a, b in v
                if lf_sign(b, ell) >= 0 and lf_cmp(b, a, ell) <= 0] for k, v in pairs.items()}
