"""Command-line runner. Every subcommand writes one JSON ExperimentReport
(or CSV where noted) and exits 0 on success, 2 when inconclusive, 1 on error.
"""
from __future__ import annotations

import argparse
import re
import sys
import time
import warnings
from fractions import Fraction
from pathlib import Path

from .chain import GameParams, parse_word, trace_csv
from .coupling import (exact_supermartingale_check, lemma_check, lemma_pairs, monte_carlo_diff,
                       stopping_params, supermartingale_check)
from .errors import BoldPlayError, ConfigError, InconsistencyDetected, ParseError, SearchExhausted
from .improve import (DEFAULT_BUDGET, DEFAULT_GRID, find_improvement, hps_demo, scaling_diagnostic,
                      verify_improvement)
from .numeric import Dyadic, lf_text, parse_ell, parse_form
from .qsolver import Budget, q_bounds, q_consistency_check
from .reach import classify, construct_counterexample
from .report import ExperimentReport

EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE = 0, 1, 2

DEFAULT_ELLS = "3/10,sqrt(1/5)"
DEFAULT_WS = "1/10,1/4,2/5"
_BOOLS = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


# -- value parsers --------------------------------------------------------------

def parse_w(text: str) -> Fraction:
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"w: not a rational number: {text!r}") from exc


def parse_params(ell: str, w: str) -> GameParams:
    if ell is None:
        raise ConfigError("ell: required")
    if w is None:
        raise ConfigError("w: required")
    try:
        return GameParams(parse_ell(ell), parse_w(w))
    except BoldPlayError as exc:
        raise ConfigError(f"ell/w: {exc}") from exc


def parse_grid(text: str) -> list[Dyadic]:
    """"4..24" means 2**-4 .. 2**-24; otherwise a comma list of dyadics."""
    s = text.strip()
    if m := re.fullmatch(r"(\d+)\.\.(\d+)", s):
        a, b = int(m.group(1)), int(m.group(2))
        step = 1 if b >= a else -1
        return [Dyadic(1, k) for k in range(a, b + step, step)]
    if not s:
        return []
    return [Dyadic.coerce(part) for part in s.split(",")]


def parse_budget(text: str | None, base: Budget) -> Budget:
    if not text:
        return base
    fields = {"max_depth": base.max_depth, "max_states": base.max_states,
              "target_width": base.target_width}
    aliases = {"depth": "max_depth", "states": "max_states", "width": "target_width"}
    for item in text.split(","):
        key, sep, val = item.partition("=")
        key = aliases.get(key.strip(), key.strip())
        if not sep or key not in fields:
            raise ConfigError(f"budget: bad entry {item!r}")
        try:
            fields[key] = Fraction(val.strip()) if key == "target_width" else int(val)
        except ValueError as exc:
            raise ConfigError(f"budget: bad value in {item!r}") from exc
    return Budget(**fields)


def load_config(path: str) -> dict:
    """key = value lines; '#' starts a comment. Keys use option names."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{no}: expected 'key = value', got {line!r}")
        out[key.strip().replace("-", "_")] = val.strip()
    return out


# -- subcommands ------------------------------------------------------------------

def _budget_from_flags(args, base: Budget) -> Budget:
    b = parse_budget(getattr(args, "budget", None), base)
    return Budget(int(args.max_depth) if getattr(args, "max_depth", None) else b.max_depth,
                  int(args.max_states) if getattr(args, "max_states", None) else b.max_states,
                  Fraction(args.target_width) if getattr(args, "target_width", None) else b.target_width)


def cmd_q(args):
    params = parse_params(args.ell, args.w)
    f = parse_form(args.fortune)
    budget = _budget_from_flags(args, Budget())
    interval, stats = q_bounds(params, f, budget)
    if args.trace:
        if not args.outcomes:
            raise ConfigError("trace: q needs --outcomes to write a trajectory")
        Path(args.trace).write_text(trace_csv(f, parse_word(args.outcomes), params))
    result = {"query": {"ell": str(params.ell), "w": str(params.w), "fortune": lf_text(params.canon(f), params.ell),
                        "fortune_form": f.to_json()},
              "interval": interval.to_json(), "width": str(interval.width),
              "states_explored": stats.states_explored, "depth": stats.depth,
              "runtime_ms": stats.runtime_ms, "stats": stats.to_json()}
    status = "ok" if interval.width <= budget.target_width else "inconclusive"
    return result, status


def cmd_reach(args):
    ell = parse_ell(args.ell)
    f = parse_form(args.fortune)
    verdict = classify(ell, f, int(args.max_depth))
    if args.trace and verdict.witness is not None:
        Path(args.trace).write_text(trace_csv(f, verdict.witness, ell))
    result = {"ell": str(ell), "fortune": lf_text(ell.canon(f), ell), "max_depth": int(args.max_depth),
              "verdict": verdict.to_json()}
    return result, "inconclusive" if verdict.status == "unknown" else "ok"


def cmd_counterexample(args):
    ell = parse_ell(args.ell)
    cx = construct_counterexample(ell)
    if args.trace:
        Path(args.trace).write_text(trace_csv(cx.start, cx.witness, ell))
    return {"ell": str(ell), "counterexample": cx.to_json()}, "ok"


def cmd_verify_theorem(args):
    params = parse_params(args.ell, args.w)
    grid = parse_grid(args.epsilon_grid) if args.epsilon_grid is not None else list(DEFAULT_GRID)
    budget = _budget_from_flags(args, DEFAULT_BUDGET)
    try:
        cert = find_improvement(params, budget, grid, levels=int(args.levels))
    except SearchExhausted as exc:
        return {"ell": str(params.ell), "w": str(params.w), "certified": False, "message": str(exc),
                "attempts": [a.to_json() for a in exc.attempts]}, "inconclusive"
    again = verify_improvement(params, cert.f, cert.epsilon, cert.budget.doubled())
    result = {"ell": str(params.ell), "w": str(params.w), "certified": True,
              "certificate": cert.to_json(),
              "doubled_budget_margin": str(again.margin) if again else None}
    return result, "ok" if again is not None else "inconclusive"


def cmd_hps_demo(args):
    params = parse_params(args.ell, args.w)
    rep = hps_demo(params, Dyadic.coerce(args.delta), _budget_from_flags(args, DEFAULT_BUDGET))
    return rep.to_json(), "ok" if rep.verdict != "inconclusive" else "inconclusive"


def _point(text: str, params: GameParams):
    if text in ("f0-ell", "f0+ell", "f0"):
        cx = construct_counterexample(params.ell)
        return {"f0-ell": cx.start, "f0+ell": cx.above, "f0": cx.f0}[text]
    return parse_form(text)


def cmd_scaling(args):
    params = parse_params(args.ell, args.w)
    f = _point(args.point, params)
    diag = scaling_diagnostic(params, f, args.side, parse_grid(args.epsilons),
                              _budget_from_flags(args, DEFAULT_BUDGET))
    return diag.to_json(), "ok", diag.to_csv()


def cmd_coupling_check(args):
    params = parse_params(args.ell, args.w)
    rep = exact_supermartingale_check(parse_form(args.f1), parse_form(args.f2), params, args.lemma,
                                      prefix_len=int(args.prefix_len))
    return rep.to_json(), "ok"


def cmd_coupling_sim(args):
    params = parse_params(args.ell, args.w)
    res = monte_carlo_diff(parse_form(args.f1), parse_form(args.f2), params, int(args.samples),
                           int(args.horizon), int(args.seed), int(args.threads))
    return res.to_json(), "ok", res.to_csv()


def lemma_check_suite(ells: list[str], ws: list[str], n_max: int = 6,
                      budget: Budget | None = None, prefix_len: int = 8) -> dict:
    """Closed-form consistency plus every gap-inequality check over a grid."""
    budget = budget or Budget(max_depth=64, max_states=200_000, target_width=Fraction(1, 10**6))
    grid = [(e, w) for e in ells for w in ws]
    warn = []
    if not grid:
        warn.append("empty parameter grid: nothing checked")
        warnings.warn(warn[0])
    rows = []
    for e, w in grid:
        params = parse_params(e, w)
        row = {"ell": str(params.ell), "w": str(params.w), "checks": []}
        try:
            cons = q_consistency_check(params, n_max, budget)
            row["checks"].append({"name": "closed_form", "ok": cons.ok,
                                  "max_width": float(cons.max_width)})
        except InconsistencyDetected as exc:
            row["checks"].append({"name": "closed_form", "ok": False, "detail": str(exc)})
        stop = stopping_params(params)
        row["L"], row["alpha"] = stop.L, stop.alpha_float
        for lemma, pairs in lemma_pairs(params).items():
            results = [lemma_check(a, b, params, lemma, raise_on_fail=False) for a, b in pairs]
            row["checks"].append({"name": lemma, "ok": all(r.ok for r in results),
                                  "pairs": len(results), "max_stop": max(r.max_stop for r in results)})
        sm = supermartingale_check(params, prefix_len=prefix_len, raise_on_fail=False)
        row["checks"].append({"name": "Z", **sm.to_json()})
        row["ok"] = all(c["ok"] for c in row["checks"])
        rows.append(row)
    return {"grid": rows, "ok": all(r["ok"] for r in rows), "warnings": warn}


def cmd_lemma_check(args):
    ells = [s for s in args.ells.split(",") if s.strip()]
    ws = [s for s in args.ws.split(",") if s.strip()]
    rep = lemma_check_suite(ells, ws, int(args.n_max), prefix_len=int(args.prefix_len))
    return rep, "ok" if rep["ok"] else "error"


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print the JSON report on stdout")
    common.add_argument("--out", help="write the report (JSON) or table (CSV) here")
    common.add_argument("--trace", help="write a CSV trace here")
    common.add_argument("--config", help="key = value file; flags override it")
    common.add_argument("--threads", default=1, type=int)

    p = _Parser(prog="boldplay", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn)
        return sp

    def game(sp, need_w=True):
        sp.add_argument("--ell")
        if need_w:
            sp.add_argument("--w")

    def budget(sp):
        sp.add_argument("--budget", help="comma list of max_depth=, max_states=, target_width=")
        sp.add_argument("--max-depth")
        sp.add_argument("--max-states")
        sp.add_argument("--target-width")

    sp = add("q", cmd_q, "certified bounds on the bold-play success probability")
    game(sp)
    sp.add_argument("--fortune")
    sp.add_argument("--outcomes", help="W/L word for --trace")
    budget(sp)

    sp = add("reach", cmd_reach, "membership of a fortune in the hitting set")
    game(sp, need_w=False)
    sp.add_argument("--fortune")
    sp.add_argument("--max-depth", default=24)

    sp = add("counterexample", cmd_counterexample, "the lattice point with f0 - ell in S, f0 + ell not")
    game(sp, need_w=False)

    sp = add("verify-theorem", cmd_verify_theorem, "certify a deviation that beats bold play")
    game(sp)
    sp.add_argument("--epsilon-grid", help='"4..24" or a comma list of dyadic epsilons')
    sp.add_argument("--levels", default=3)
    budget(sp)

    sp = add("hps-demo", cmd_hps_demo, "bold play at 1/2 - delta against a first stake of ell - delta")
    game(sp)
    sp.add_argument("--delta", default="1/64")
    budget(sp)

    sp = add("scaling", cmd_scaling, "Q-difference table normalized by (1-w)**(-log2 eps), as CSV")
    game(sp)
    sp.add_argument("--point", default="f0-ell", help='"f0-ell", "f0+ell", "f0" or a fortune')
    sp.add_argument("--side", choices=("below", "above"), default="below")
    sp.add_argument("--epsilons", default="4..12")
    budget(sp)

    sp = add("coupling-check", cmd_coupling_check, "exhaustive gap-inequality check")
    game(sp)
    sp.add_argument("--f1")
    sp.add_argument("--f2")
    sp.add_argument("--lemma", choices=("A", "R", "B", "C", "Z"), default="A")
    sp.add_argument("--prefix-len", default=8)

    sp = add("coupling-sim", cmd_coupling_sim, "coupled Monte Carlo estimate of Q(f1) - Q(f2), CSV per step")
    game(sp)
    sp.add_argument("--f1")
    sp.add_argument("--f2")
    sp.add_argument("--samples", default=10_000)
    sp.add_argument("--horizon", default=200)
    sp.add_argument("--seed", default=0)

    sp = add("lemma-check", cmd_lemma_check, "all consistency and gap checks over a parameter grid")
    sp.add_argument("--ells", default=DEFAULT_ELLS)
    sp.add_argument("--ws", default=DEFAULT_WS)
    sp.add_argument("--n-max", default=6)
    sp.add_argument("--prefix-len", default=8)
    p.subcommands = sub.choices
    return p


def _with_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    cfg = load_config(args.config)
    known = vars(args)
    for key, val in cfg.items():
        if key not in known or key in ("func", "command", "config"):
            raise ConfigError(f"{args.config}: unknown key {key!r} for {args.command}")
        if isinstance(known[key], bool):
            if val.lower() not in _BOOLS:
                raise ConfigError(f"{args.config}: {key} must be true or false, got {val!r}")
            cfg[key] = _BOOLS[val.lower()]
    # re-parse with the file as defaults so explicit flags still win
    parser.subcommands[args.command].set_defaults(**cfg)
    return parser.parse_args(argv)


def run(argv: list[str] | None = None, stdout=None) -> tuple[int, ExperimentReport | None]:
    stdout = stdout or sys.stdout
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    t0 = time.perf_counter()
    try:
        args = _with_config(parser, argv)
        for name in ("threads",):
            if int(getattr(args, name)) < 1:
                raise ConfigError(f"{name}: must be >= 1")
        out = args.func(args)
    except (BoldPlayError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR, None
    result, status = out[0], out[1]
    csv_text = out[2] if len(out) > 2 else None
    config = {k: (v if isinstance(v, (str, int, bool)) or v is None else str(v))
              for k, v in sorted(vars(args).items()) if k not in ("func",)}
    report = ExperimentReport(args.command, config, result, status,
                              runtime_ms=(time.perf_counter() - t0) * 1000,
                              warnings=list(result.get("warnings", [])) if isinstance(result, dict) else [])
    text = report.dumps()
    if csv_text is not None and not args.json:
        if args.out:
            Path(args.out).write_text(csv_text)
        else:
            stdout.write(csv_text)
    else:
        if csv_text is not None and args.trace:
            Path(args.trace).write_text(csv_text)
        if args.out:
            Path(args.out).write_text(text)
        if args.json or not args.out:
            stdout.write(text)
    code = {"ok": EXIT_OK, "inconclusive": EXIT_INCONCLUSIVE, "error": EXIT_ERROR}[status]
    return code, report


def main(argv: list[str] | None = None) -> int:
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
