"""Certified two-sided bounds on Q(f), the bold-play success probability.

The reachable state graph is expanded breadth-first from the query fortune
and keyed by canonical LinearForm, so fortunes that coincide are merged.
Unexpanded frontier states get [0, 1]; the expanded part is then solved
exactly over rationals, one strongly connected component at a time.
"""
from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass, field
from fractions import Fraction

import networkx as nx

from .chain import GameParams, check_fortune, successors
from .errors import InconsistencyDetected, PreconditionViolated
from .numeric import ELL, ONE, ZERO, LinearForm


@dataclass(frozen=True)
class ProbInterval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        lo, hi = Fraction(self.lo), Fraction(self.hi)
        if not 0 <= lo <= hi <= 1:
            raise ValueError(f"invalid probability interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi

    def intersects(self, other: ProbInterval) -> bool:
        return max(self.lo, other.lo) <= min(self.hi, other.hi)

    def subset_of(self, other: ProbInterval) -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def to_json(self) -> dict:
        return {"lo": str(self.lo), "hi": str(self.hi),
                "lo_float": float(self.lo), "hi_float": float(self.hi)}

    @classmethod
    def from_json(cls, obj) -> ProbInterval:
        return cls(Fraction(obj["lo"]), Fraction(obj["hi"]))


def mix(w: Fraction, up: ProbInterval, down: ProbInterval) -> ProbInterval:
    """Interval of w*Q(up) + (1-w)*Q(down)."""
    return ProbInterval(w * up.lo + (1 - w) * down.lo, w * up.hi + (1 - w) * down.hi)


@dataclass(frozen=True)
class Budget:
    max_depth: int = 64
    max_states: int = 200_000
    target_width: Fraction = Fraction(1, 10**9)

    def __post_init__(self):
        tw = Fraction(self.target_width)
        if self.max_depth < 1 or self.max_states < 1 or tw <= 0:
            raise PreconditionViolated("budget fields must be positive")
        object.__setattr__(self, "target_width", tw)

    def scaled(self, factor: int) -> Budget:
        return Budget(self.max_depth * factor, self.max_states * factor, self.target_width / factor)

    def doubled(self) -> Budget:
        return self.scaled(2)

    def to_json(self) -> dict:
        return {"max_depth": self.max_depth, "max_states": self.max_states,
                "target_width": str(self.target_width)}


@dataclass
class QStats:
    states_explored: int = 0
    expanded: int = 0
    frontier: int = 0
    depth: int = 0
    rounds: int = 0
    state_cap_hit: bool = False
    complete: bool = False
    runtime_ms: float = 0.0

    def to_json(self) -> dict:
        return dict(self.__dict__)


class _Node:
    __slots__ = ("form", "depth", "succ")

    def __init__(self, form, depth):
        self.form = form
        self.depth = depth
        self.succ = None


DEPTH_STEP = 8


class StateTable:
    """Memoized reachable states with certified intervals.

    Intervals only tighten: each solve runs on a superset of the previously
    expanded graph, and stored bounds are merged monotonically.
    """

    def __init__(self, params: GameParams):
        self.params = params
        self.nodes: dict[LinearForm, _Node] = {}
        self.pending: list = []  # heap of (depth, seq, node)
        self._seq = itertools.count()
        self.lo: dict[LinearForm, Fraction] = {}
        self.hi: dict[LinearForm, Fraction] = {}
        self.depth = 0
        self.state_cap_hit = False
        self.rounds = 0

    def add_root(self, f: LinearForm) -> LinearForm:
        f = check_fortune(f, self.params)
        node = self.nodes.get(f)
        if node is None:
            self._add(f, 0)
        elif node.depth > 0:
            # a new root makes this state shallower; stale heap entries are skipped
            node.depth = 0
            if node.succ is None:
                self._push(node)
        return f

    def _push(self, node):
        heapq.heappush(self.pending, (node.depth, next(self._seq), node))

    def _add(self, f, depth):
        node = _Node(f, depth)
        self.nodes[f] = node
        if f != ONE and f != ZERO:
            self._push(node)
        return node

    def _live_pending(self) -> int:
        return sum(1 for d, _, n in self.pending if n.succ is None and d == n.depth)

    @property
    def complete(self) -> bool:
        return self._live_pending() == 0

    def expand(self, max_depth: int, max_states: int) -> int:
        """Expand queued states shallower than max_depth; returns count."""
        count = 0
        params = self.params
        while self.pending:
            depth, _, node = self.pending[0]
            if node.succ is not None or depth != node.depth:
                heapq.heappop(self.pending)
                continue
            if depth >= max_depth:
                break
            if len(self.nodes) + 2 > max_states:
                self.state_cap_hit = True
                break
            heapq.heappop(self.pending)
            up, down = successors(node.form, params)
            node.succ = (up, down)
            for g in (up, down):
                nxt = self.nodes.get(g)
                if nxt is None:
                    self._add(g, node.depth + 1)
            count += 1
        self.depth = max(self.depth, max_depth)
        return count

    def _leaf(self, f, upper: bool) -> Fraction:
        if f == ONE:
            return Fraction(1)
        if f == ZERO:
            return Fraction(0)
        return Fraction(int(upper))

    def solve(self):
        """Exact absorption bounds on the expanded graph."""
        w = self.params.w
        v = 1 - w
        expanded = [f for f, n in self.nodes.items() if n.succ is not None]
        graph = nx.DiGraph()
        graph.add_nodes_from(expanded)
        for f in expanded:
            for g in self.nodes[f].succ:
                if self.nodes[g].succ is not None:
                    graph.add_edge(f, g)
        cond = nx.condensation(graph)
        lo_new: dict[LinearForm, Fraction] = {}
        hi_new: dict[LinearForm, Fraction] = {}

        def get(g, table, upper):
            x = table.get(g)
            return x if x is not None else self._leaf(g, upper)

        for comp in reversed(list(nx.topological_sort(cond))):
            members = cond.nodes[comp]["members"]
            if len(members) == 1:
                (f,) = members
                up, down = self.nodes[f].succ
                lo_new[f] = w * get(up, lo_new, False) + v * get(down, lo_new, False)
                hi_new[f] = w * get(up, hi_new, True) + v * get(down, hi_new, True)
            else:
                self._solve_component(list(members), lo_new, hi_new, get)
        for f, x in lo_new.items():
            old = self.lo.get(f)
            self.lo[f] = x if old is None or x > old else old
        for f, x in hi_new.items():
            old = self.hi.get(f)
            self.hi[f] = x if old is None or x < old else old
        self.rounds += 1

    def _solve_component(self, members, lo_new, hi_new, get):
        # x_i - w x_up - (1-w) x_down = known terms, solved by Gauss-Jordan
        w = self.params.w
        v = 1 - w
        index = {f: i for i, f in enumerate(members)}
        n = len(members)
        rows = []
        for f in members:
            row = [Fraction(0)] * n + [Fraction(0), Fraction(0)]
            row[index[f]] += 1
            for g, coef in zip(self.nodes[f].succ, (w, v)):
                j = index.get(g)
                if j is not None:
                    row[j] -= coef
                else:
                    row[n] += coef * get(g, lo_new, False)
                    row[n + 1] += coef * get(g, hi_new, True)
            rows.append(row)
        for col in range(n):
            piv = next(r for r in range(col, n) if rows[r][col] != 0)
            rows[col], rows[piv] = rows[piv], rows[col]
            pr = rows[col]
            inv = 1 / pr[col]
            for k in range(col, n + 2):
                pr[k] *= inv
            for r in range(n):
                if r != col and rows[r][col] != 0:
                    fac = rows[r][col]
                    rr = rows[r]
                    for k in range(col, n + 2):
                        rr[k] -= fac * pr[k]
        for f, i in index.items():
            lo_new[f] = rows[i][n]
            hi_new[f] = rows[i][n + 1]

    def interval(self, f: LinearForm) -> ProbInterval:
        f = self.params.canon(f)
        if f == ONE:
            return ProbInterval(1, 1)
        if f == ZERO:
            return ProbInterval(0, 0)
        lo = self.lo.get(f)
        if lo is None:
            return ProbInterval(0, 1)
        return ProbInterval(lo, self.hi[f])

    def stats(self) -> QStats:
        expanded = sum(1 for n in self.nodes.values() if n.succ is not None)
        return QStats(states_explored=len(self.nodes), expanded=expanded,
                      frontier=self._live_pending(), depth=self.depth, rounds=self.rounds,
                      state_cap_hit=self.state_cap_hit, complete=self.complete)

    def refine(self, budget: Budget, targets=None, done=None) -> int:
        """Deepen in steps of DEPTH_STEP until `done()` holds, the widths at
        `targets` reach the target, or the budget binds. Returns final depth."""
        targets = list(targets or [])
        depth = self.depth
        while True:
            nxt = min(budget.max_depth, max(depth + DEPTH_STEP, DEPTH_STEP))
            grew = self.expand(nxt, budget.max_states)
            depth = nxt
            if grew or self.rounds == 0:
                self.solve()
            if done is not None and done():
                break
            if targets and all(self.interval(t).width <= budget.target_width for t in targets):
                break
            if self.complete or self.state_cap_hit or depth >= budget.max_depth:
                break
        return depth


def q_bounds(params: GameParams, f: LinearForm, budget: Budget | None = None,
             table: StateTable | None = None) -> tuple[ProbInterval, QStats]:
    """Certified enclosure lo <= Q(f) <= hi.

    Hitting the budget is not an error: the interval reached so far is
    returned and the stats say which limit bound.
    """
    budget = budget or Budget()
    t0 = time.perf_counter()
    table = table or StateTable(params)
    root = table.add_root(f)
    if root == ONE or root == ZERO:
        stats = table.stats()
        stats.runtime_ms = (time.perf_counter() - t0) * 1000
        return table.interval(root), stats
    table.refine(budget, targets=[root])
    stats = table.stats()
    stats.runtime_ms = (time.perf_counter() - t0) * 1000
    return table.interval(root), stats


def q_near_goal(params: GameParams, n: int, q_at_one_minus_ell: ProbInterval) -> ProbInterval:
    """Enclosure of Q(1 - 2**-n * ell) from an enclosure of Q(1 - ell)."""
    if n < 0:
        raise PreconditionViolated("n must be >= 0")
    k = (1 - params.w) ** n
    return ProbInterval(1 - k * (1 - q_at_one_minus_ell.lo), 1 - k * (1 - q_at_one_minus_ell.hi))


def near_goal_fortune(n: int) -> LinearForm:
    return ONE - ELL.shift(-n)


@dataclass
class ConsistencyRow:
    n: int
    direct: ProbInterval
    mapped: ProbInterval
    margin: Fraction  # min(hi) - max(lo); negative means disjoint

    def to_json(self) -> dict:
        return {"n": self.n, "direct": self.direct.to_json(), "mapped": self.mapped.to_json(),
                "direct_width": float(self.direct.width), "mapped_width": float(self.mapped.width),
                "margin": str(self.margin)}


@dataclass
class ConsistencyReport:
    params: GameParams
    rows: list[ConsistencyRow] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(r.margin >= 0 for r in self.rows)

    @property
    def max_width(self) -> Fraction:
        return max((r.direct.width for r in self.rows), default=Fraction(0))

    def to_json(self) -> dict:
        return {"ell": str(self.params.ell), "w": str(self.params.w), "ok": self.ok,
                "max_direct_width": float(self.max_width), "rows": [r.to_json() for r in self.rows]}


def q_consistency_check(params: GameParams, n_max: int, budget: Budget | None = None) -> ConsistencyReport:
    """Compare direct bounds at 1 - 2**-n * ell with the closed form near the goal."""
    if n_max < 0:
        raise PreconditionViolated("n_max must be >= 0")
    budget = budget or Budget()
    base, _ = q_bounds(params, near_goal_fortune(0), budget)
    report = ConsistencyReport(params)
    for n in range(n_max + 1):
        direct, _ = q_bounds(params, near_goal_fortune(n), budget)
        mapped = q_near_goal(params, n, base)
        margin = min(direct.hi, mapped.hi) - max(direct.lo, mapped.lo)
        report.rows.append(ConsistencyRow(n, direct, mapped, margin))
        if margin < 0:
            raise InconsistencyDetected(f"closed form disagrees with direct bounds at n = {n}", n=n)
    return report
