"""Command-line interface.

Exit codes: 0 success / property holds, 1 property fails, 2 input error,
3 invalid signature (without --unsafe-constants), 4 unknown.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
import warnings
from pathlib import Path

from . import logic as L
from . import source as S
from .algebras import AlgebraConfig, Status, evaluate, trace_check
from .cps import cps_term, cost_formula, rewrite_cost, rewrite_trace, trace_formula
from .dfa import Dfa
from .errors import NondeterministicAutomaton, WpcpsError
from .oracle import oracle_ect, oracle_moments, run_cost, run_trace, trace_inclusion_verdict
from .parser import parse_program
from .signature import BUILTIN_SIGNATURES, COST_SIGNATURE, TRACE_SIGNATURE, Signature, validate_signature

EXIT_OK, EXIT_FAILS, EXIT_INPUT, EXIT_SIGNATURE, EXIT_UNKNOWN = 0, 1, 2, 3, 4
AGREEMENT_TOL = 1e-6

UNSAFE_CONSTANTS_WARNING = ("warning: --unsafe-constants: signature validation failed, so the correspondence between "
                "the generated formula and the program's semantics is not guaranteed (theorem void)")


class _Abort(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Run:
    """Collects the pieces of a run report."""

    def __init__(self, args):
        self.args = args
        self.report: dict = {"command": args.command, "argv": sys.argv[1:] if args.argv is None else args.argv,
                             "signature": None, "cps": None, "eval": None, "verdict": None,
                             "oracle": None, "agreement": None, "warnings": [], "timings": {}}
        self.lines: list[str] = []
        self._t = time.perf_counter()

    def lap(self, stage: str):
        now = time.perf_counter()
        self.report["timings"][stage] = round(now - self._t, 6)
        self._t = now

    def warn(self, message: str):
        self.report["warnings"].append(message)
        print(message, file=sys.stderr)

    def say(self, line: str):
        self.lines.append(line)


def _signature(args, instance: str | None) -> Signature:
    base = BUILTIN_SIGNATURES[instance] if instance else TRACE_SIGNATURE.merge(COST_SIGNATURE)
    if args.sig:
        return base.merge(Signature.load(args.sig))
    return base


def _front_end(run: _Run, instance: str | None):
    """Load, validate, parse and translate the program."""
    args = run.args
    sig = _signature(args, instance)
    report = validate_signature(sig)
    run.report["signature"] = report.to_json()
    if not report.ok:
        if not args.unsafe_constants:
            raise _Abort(EXIT_SIGNATURE, f"error: {report.describe()}; pass --unsafe-constants to proceed anyway")
        run.warn(UNSAFE_CONSTANTS_WARNING + f" ({report.describe()})")
    text = Path(args.program).read_text(encoding="utf-8")
    program = parse_program(text, sig)
    run.lap("parse")
    out = cps_term(sig, program)
    run.lap("cps")
    return sig, program, out


def _cps_section(out, rewritten: L.Formula | None, with_ast: bool) -> dict:
    section = {"raw": L.pretty_print(out.term), "simplified": L.pretty_print(L.normalize(out.term)),
               "rewritten": None if rewritten is None else L.pretty_print(L.normalize(rewritten)),
               "type": str(out.type), "source_type": str(out.source_type)}
    if with_ast:
        section["ast"] = L.to_json(out.term)
    return section


def cmd_cps(run: _Run) -> int:
    args = run.args
    sig, _, out = _front_end(run, args.instance)
    rewritten = rewrite_trace(out.term) if args.instance == "trace" else (
        rewrite_cost(out.term) if args.instance == "cost" else None)
    section = _cps_section(out, rewritten, args.ast)
    run.report["cps"] = section
    run.lap("rewrite")
    run.say(f"source type: {section['source_type']}")
    run.say(f"cps: {section['raw']}")
    run.say(f"simplified: {section['simplified']}")
    if rewritten is not None:
        run.say(f"{args.instance} formula: {section['rewritten']}")
        run.say(f"  untyped: {L.pretty_print(L.normalize(rewritten), types=False)}")
    return EXIT_OK


def _dump(path: str | None, data: dict):
    if path:
        Path(path).write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def cmd_check_trace(run: _Run) -> int:
    args = run.args
    try:
        dfa = Dfa.from_json(json.loads(Path(args.dfa).read_text(encoding="utf-8")))
    except NondeterministicAutomaton as e:
        raise _Abort(EXIT_INPUT, f"error: {e}") from None
    except json.JSONDecodeError as e:
        raise _Abort(EXIT_INPUT, f"error: {args.dfa}: invalid JSON: {e}") from None
    for w in dfa.warnings():
        run.warn(f"warning: {w}")
    sig, program, out = _front_end(run, "trace")
    formula = rewrite_trace(trace_formula(out))
    run.report["cps"] = _cps_section(out, formula, args.ast)
    config = AlgebraConfig("trace", dfa=dfa, epsilon=args.epsilon, max_unfold=args.max_unfold,
                           quad_points=args.quad_points)
    verdict, result = trace_check(config, formula)
    run.lap("evaluate")
    run.report["eval"] = result.to_json()
    run.report["verdict"] = verdict.value
    run.say(f"formula: {run.report['cps']['rewritten']}")
    run.say(f"value: {{{', '.join(sorted(result.value))}}} ({result.status.value}, {result.iterations_used} unfoldings)")
    run.say(f"verdict: {verdict.value}")
    if args.oracle or args.dump_oracle:
        approx = run_trace(sig, program, args.oracle_depth)
        run.lap("oracle")
        oracle_verdict = trace_inclusion_verdict(approx, dfa)
        run.report["oracle"] = {"verdict": oracle_verdict, "depth": approx.depth, "complete": approx.complete}
        _dump(args.dump_oracle, approx.to_json())
        decided = {verdict.value, oracle_verdict} <= {"holds", "fails"}
        run.report["agreement"] = (verdict.value == oracle_verdict) if decided else None
        run.say(f"oracle (depth {approx.depth}): {oracle_verdict}")
        if decided:
            run.say(f"agreement: {'yes' if verdict.value == oracle_verdict else 'NO'}")
    return {"holds": EXIT_OK, "fails": EXIT_FAILS, "unknown": EXIT_UNKNOWN}[verdict.value]


def _uses_unif(t: S.Term) -> bool:
    match t:
        case S.Op(o, _, a):
            return o == "unif" or _uses_unif(a)
        case S.Var() | S.UnitVal():
            return False
        case S.Const(_, a) | S.Proj(_, a) | S.Absurd(a, _) | S.Inj(_, _, a) | S.Lam(_, _, a):
            return _uses_unif(a)
        case S.Pair(a, b) | S.App(a, b):
            return _uses_unif(a) or _uses_unif(b)
        case S.Case(s, _, b1, _, b2):
            return _uses_unif(s) or _uses_unif(b1) or _uses_unif(b2)
        case S.LetRec(_, _, _, _, body, rest):
            return _uses_unif(body) or _uses_unif(rest)
    return False


def _fmt(w: float) -> str:
    return "inf" if math.isinf(w) else f"{w:.12g}"


def cmd_expected_cost(run: _Run) -> int:
    args = run.args
    sig, program, out = _front_end(run, "cost")
    moments = args.moments
    if moments:
        # tick acts on moment vectors through the elapse function, so the raw translation is evaluated
        formula = cost_formula(out)
        config = AlgebraConfig("moments", moment_order=moments, epsilon=args.epsilon,
                               max_unfold=args.max_unfold, quad_points=args.quad_points)
        run.report["cps"] = _cps_section(out, rewrite_cost(formula), args.ast)
    else:
        formula = rewrite_cost(cost_formula(out))
        config = AlgebraConfig("cost", epsilon=args.epsilon, max_unfold=args.max_unfold,
                               quad_points=args.quad_points)
        run.report["cps"] = _cps_section(out, formula, args.ast)
    result = evaluate(config, {}, formula)
    run.lap("evaluate")
    run.report["eval"] = result.to_json()
    run.say(f"formula: {run.report['cps']['rewritten']}")
    if moments:
        run.say(f"moments: ({', '.join(_fmt(x) for x in result.value)})")
    else:
        run.say(f"expected cost: {_fmt(result.value)}")
    bound = "" if result.error_bound is None else f", error bound {result.error_bound:g}"
    run.say(f"status: {result.status.value} ({result.iterations_used} unfoldings{bound})")
    if result.status is Status.TRUNCATED:
        run.warn("warning: iteration cap reached; the value is a lower bound")
    if args.oracle or args.dump_oracle:
        if _uses_unif(program):
            run.warn("warning: the oracle handles discrete programs only; skipped because the program uses unif")
            return EXIT_OK
        dist = run_cost(sig, program, args.oracle_depth)
        run.lap("oracle")
        _dump(args.dump_oracle, dist.to_json())
        bound = oracle_ect(dist)
        analytic = result.value if moments else (result.value,)
        oracle_vals = oracle_moments(dist, moments) if moments else (bound.lower,)
        gap = bound.upper_gap
        # oracle values are lower bounds, exact up to the gap when no path was cut
        agree = all(o - AGREEMENT_TOL <= a and (bound.unbounded or a <= o + AGREEMENT_TOL + gap)
                    for a, o in zip(analytic, oracle_vals))
        run.report["oracle"] = {"values": [_json_weight(v) for v in oracle_vals], "depth": dist.depth,
                                "truncated_mass": dist.truncated_mass,
                                "upper_gap": _json_weight(gap), "unbounded": bound.unbounded}
        run.report["agreement"] = agree
        run.say(f"oracle (depth {dist.depth}): ({', '.join(_fmt(x) for x in oracle_vals)}), "
                f"truncated mass {dist.truncated_mass:.3g}" + (", gap unbounded" if bound.unbounded else ""))
        run.say(f"agreement: {'yes' if agree else 'NO'}")
        if not agree:
            return EXIT_FAILS
    return EXIT_OK


def _json_weight(w: float):
    return "inf" if math.isinf(w) else w


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wpcps", description="Verification conditions for effectful programs by CPS translation.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser):
        p.add_argument("program", help="program file")
        p.add_argument("--sig", help="signature JSON file extending the built-in signature")
        p.add_argument("--unsafe-constants", action="store_true",
                       help="proceed even if a constant's coarity is not built from base types, unit and products")
        p.add_argument("--json", action="store_true", help="print a JSON report instead of text")
        p.add_argument("--ast", action="store_true", help="include the translated formula's AST in the JSON report")

    def numeric(p: argparse.ArgumentParser):
        p.add_argument("--epsilon", type=float, default=1e-9, help="convergence tolerance (default 1e-9)")
        p.add_argument("--max-unfold", type=int, default=10**6, help="fixpoint iteration cap (default 1e6)")
        p.add_argument("--quad-points", type=int, default=1024, help="quadrature points for unif (default 1024)")
        p.add_argument("--oracle", action="store_true", help="cross-check against the direct semantics")
        p.add_argument("--oracle-depth", type=int, default=None, help="letrec unfoldings allowed per oracle path")
        p.add_argument("--dump-oracle", metavar="PATH", help="write the oracle's result as JSON to PATH")

    p = sub.add_parser("cps", help="print the CPS translation of a program")
    common(p)
    p.add_argument("--instance", choices=sorted(BUILTIN_SIGNATURES), help="also print the instance formula")
    p.set_defaults(handler=cmd_cps)

    p = sub.add_parser("check-trace", help="check that every event trace is accepted by an automaton")
    common(p)
    p.add_argument("--dfa", required=True, help="automaton JSON file")
    numeric(p)
    p.set_defaults(handler=cmd_check_trace, default_depth=8)

    p = sub.add_parser("expected-cost", help="expected number of ticks, or its higher moments")
    common(p)
    p.add_argument("--moments", type=int, default=None, metavar="N", help="report the first N moments")
    numeric(p)
    p.set_defaults(handler=cmd_expected_cost, default_depth=60)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    args.argv = argv
    if getattr(args, "oracle_depth", 0) is None:
        args.oracle_depth = args.default_depth
    if getattr(args, "moments", None) is not None and args.moments < 1:
        print("error: --moments must be at least 1", file=sys.stderr)
        return EXIT_INPUT
    run = _Run(args)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            code = args.handler(run)
    except _Abort as e:
        print(e, file=sys.stderr)
        code = e.code
        run.report["error"] = str(e)
    except (WpcpsError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        code = EXIT_INPUT
        run.report["error"] = str(e)
    run.report["exit_code"] = code
    if args.json:
        print(json.dumps(run.report, indent=2))
    else:
        for line in run.lines:
            print(line)
    return code


if __name__ == "__main__":
    sys.exit(main())
