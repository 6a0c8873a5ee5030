"""Direct semantics of source programs, independent of the CPS pipeline.

Programs are run by a big-step interpreter that enumerates every branch of
``choice`` and ``flip``.  Each path carries its emitted events, probability,
tick count and remaining fuel; a call to a recursive function made with no
fuel left cuts the path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

from . import source as S
from .constants import InjVal, apply_constant, show_value
from .dfa import Dfa
from .errors import EvaluationError
from .signature import Signature, split_indexed

CUT = object()


@dataclass(frozen=True)
class _Closure:
    lam: S.Lam
    env: dict = field(compare=False)


@dataclass(frozen=True)
class _RecClosure:
    node: S.LetRec
    env: dict = field(compare=False)


@dataclass(frozen=True)
class _Path:
    trace: tuple[str, ...] = ()
    prob: float = 1.0
    cost: int = 0
    fuel: int = 0


class _Interpreter:
    def __init__(self, sig: Signature, mode: str):
        self.sig = sig
        self.mode = mode  # "trace" or "cost"

    def run(self, t: S.Term, env: dict, path: _Path) -> Iterator[tuple[_Path, object]]:
        """Yield ``(path, value)`` for every outcome; value is CUT when fuel ran out."""
        match t:
            case S.Var(x):
                yield path, env[x]
            case S.UnitVal():
                yield path, ()
            case S.Const(c, a):
                for p, v in self.run(a, env, path):
                    yield p, (CUT if v is CUT else apply_constant(c, v))
            case S.Pair(a, b):
                for p1, v1 in self.run(a, env, path):
                    if v1 is CUT:
                        yield p1, CUT
                        continue
                    for p2, v2 in self.run(b, env, p1):
                        yield p2, (CUT if v2 is CUT else (v1, v2))
            case S.Proj(i, a):
                for p, v in self.run(a, env, path):
                    yield p, (CUT if v is CUT else v[i - 1])
            case S.Inj(i, _, a):
                for p, v in self.run(a, env, path):
                    yield p, (CUT if v is CUT else InjVal(i, v))
            case S.Absurd(a, _):
                for p, v in self.run(a, env, path):
                    if v is CUT:
                        yield p, CUT
                    else:
                        raise EvaluationError("reached absurd")
            case S.Case(s, x1, b1, x2, b2):
                for p, v in self.run(s, env, path):
                    if v is CUT:
                        yield p, CUT
                    elif v.index == 1:
                        yield from self.run(b1, {**env, x1: v.value}, p)
                    else:
                        yield from self.run(b2, {**env, x2: v.value}, p)
            case S.Lam():
                yield path, _Closure(t, env)
            case S.App(f, a):
                for p1, fv in self.run(f, env, path):
                    if fv is CUT:
                        yield p1, CUT
                        continue
                    for p2, av in self.run(a, env, p1):
                        if av is CUT:
                            yield p2, CUT
                        else:
                            yield from self.call(fv, av, p2)
            case S.LetRec():
                rec = _RecClosure(t, env)
                yield from self.run(t.rest, {**env, t.fname: rec}, path)
            case S.Op(o, _, a):
                for p, v in self.run(a, env, path):
                    if v is CUT:
                        yield p, CUT
                    else:
                        yield from self.operation(o, v[0], v[1], p)
            case _:
                raise TypeError(f"not a source term: {t!r}")

    def call(self, fn, arg, path: _Path):
        match fn:
            case _Closure(lam, env):
                yield from self.run(lam.body, {**env, lam.var: arg}, path)
            case _RecClosure(node, env):
                if path.fuel <= 0:
                    yield path, CUT
                    return
                inner = {**env, node.fname: fn, node.var: arg}
                yield from self.run(node.body, inner, _Path(path.trace, path.prob, path.cost, path.fuel - 1))
            case _:
                raise EvaluationError(f"applying a non-function value {fn!r}")

    def operation(self, name: str, resume, coarity, path: _Path):
        family, index = split_indexed(name)
        if self.mode == "trace":
            if family == "event" and index is not None:
                yield from self.call(resume, (), _Path(path.trace + (index,), path.prob, path.cost, path.fuel))
                return
            if family == "choice":
                yield from self.call(resume, InjVal(1, ()), path)
                yield from self.call(resume, InjVal(2, ()), path)
                return
        else:
            if family == "tick":
                yield from self.call(resume, (), _Path(path.trace, path.prob, path.cost + 1, path.fuel))
                return
            if family == "flip" and index is not None:
                p = float(index)
                for branch, q in ((InjVal(1, ()), p), (InjVal(2, ()), 1.0 - p)):
                    if q > 0:
                        yield from self.call(resume, branch, _Path(path.trace, path.prob * q, path.cost, path.fuel))
                return
            if family == "unif":
                raise EvaluationError("the oracle only handles discrete programs; unif is not supported")
        raise EvaluationError(f"operation {name} is not part of the {self.mode} instance")


# ---------------------------------------------------------------- traces

Word = tuple[str, ...]


@dataclass(frozen=True)
class TraceApprox:
    unterminated: frozenset[Word]
    terminated: dict[Word, frozenset]
    depth: int
    cuts: frozenset[Word] = frozenset()  # traces at which a path ran out of fuel

    @property
    def complete(self) -> bool:
        return not self.cuts

    def words(self) -> frozenset[Word]:
        return self.unterminated | frozenset(self.terminated)

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "unterminated": sorted(list(w) for w in self.unterminated),
            "terminated": [{"trace": list(w), "values": sorted(show_value(v) for v in vs)}
                           for w, vs in sorted(self.terminated.items())],
            "cuts": sorted(list(w) for w in self.cuts),
        }


def run_trace(sig: Signature, term: S.Term, depth: int) -> TraceApprox:
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    interp = _Interpreter(sig, "trace")
    prefixes: set[Word] = {()}
    terminated: dict[Word, set] = {}
    cuts: set[Word] = set()
    for path, value in interp.run(term, {}, _Path(fuel=depth)):
        w = path.trace
        prefixes.update(w[:i] for i in range(len(w) + 1))
        if value is CUT:
            cuts.add(w)
        else:
            terminated.setdefault(w, set()).add(value)
    return TraceApprox(frozenset(prefixes), {w: frozenset(v) for w, v in terminated.items()}, depth,
                       frozenset(cuts))


def _event_word(dfa: Dfa, word: Word, post) -> frozenset:
    # states whose run along word exists and ends in post, by forward simulation
    return frozenset(q for q in dfa.states if (end := dfa.run(q, word)) is not None and end in post)


def oracle_wp_trace(approx: TraceApprox, dfa: Dfa, post) -> frozenset:
    """Intersection of the word preimages of U over unterminated words and of ``post`` over terminated ones."""
    result = frozenset(dfa.states)
    for w in approx.unterminated:
        result &= _event_word(dfa, w, dfa.states)
    for w in approx.terminated:
        result &= _event_word(dfa, w, post)
    return result


def trace_inclusion_verdict(approx: TraceApprox, dfa: Dfa) -> str:
    """Decide ``Trace(M) subset L(dfa)`` from an approximation: a rejected word is a real
    violation; without cut paths the approximation is the whole trace set."""
    if any(not dfa.accepts(w) for w in approx.words()):
        return "fails"
    return "holds" if approx.complete else "unknown"


# ---------------------------------------------------------------- costs

@dataclass(frozen=True)
class CostDistribution:
    mass: dict[tuple[int, object], float]
    truncated_mass: float
    depth: int

    def total(self) -> float:
        return math.fsum(self.mass.values()) + self.truncated_mass

    def to_json(self) -> dict:
        return {
            "depth": self.depth,
            "mass": [{"cost": c, "value": show_value(v), "probability": p}
                     for (c, v), p in sorted(self.mass.items(), key=lambda kv: (kv[0][0], repr(kv[0][1])))],
            "truncated_mass": self.truncated_mass,
        }


def run_cost(sig: Signature, term: S.Term, depth: int) -> CostDistribution:
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    interp = _Interpreter(sig, "cost")
    mass: dict[tuple[int, object], list[float]] = {}
    truncated: list[float] = []
    for path, value in interp.run(term, {}, _Path(fuel=depth)):
        if value is CUT:
            truncated.append(path.prob)
        else:
            mass.setdefault((path.cost, value), []).append(path.prob)
    return CostDistribution({k: math.fsum(v) for k, v in mass.items()}, math.fsum(truncated), depth)


@dataclass(frozen=True)
class CostBound:
    lower: float
    upper_gap: float
    unbounded: bool = False


def oracle_ect(dist: CostDistribution, cost_bound: float | None = None) -> CostBound:
    """Lower bound of the expected cost; the gap is zero when nothing was truncated and
    ``truncated_mass * cost_bound`` when a bound on the cost of any run is supplied."""
    lower = math.fsum(c * p for (c, _), p in dist.mass.items())
    if dist.truncated_mass == 0:
        return CostBound(lower, 0.0)
    if cost_bound is not None:
        return CostBound(lower, dist.truncated_mass * cost_bound)
    return CostBound(lower, math.inf, unbounded=True)


def oracle_moments(dist: CostDistribution, n: int) -> tuple[float, ...]:
    if n < 1:
        raise ValueError("n must be at least 1")
    return tuple(math.fsum(c ** i * p for (c, _), p in dist.mass.items()) for i in range(1, n + 1))
