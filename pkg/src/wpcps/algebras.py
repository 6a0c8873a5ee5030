"""Evaluation of formulas under an answer algebra.

Three algebras are provided: state sets of an automaton (trace properties),
extended nonnegative weights (expected cost) and weight vectors (cost
moments).  Recursive predicates are solved by Kleene iteration from the
algebra's bottom element, demand-driven over the arguments actually reached.
"""

from __future__ import annotations

import itertools
import math
import sys
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from . import logic as L
from .constants import InjVal, apply_constant
from .dfa import Dfa
from .errors import EvaluationError, UnsupportedNode
from .signature import split_indexed
from .types import Empty, Prod, Sum, Type, Unit, enumerable

KINDS = ("trace", "cost", "moments")
INF = math.inf


class Status(str, Enum):
    EXACT = "exact"
    CONVERGED = "converged"
    TRUNCATED = "truncated"

    @property
    def rank(self) -> int:
        return ("exact", "converged", "truncated").index(self.value)


class Verdict(str, Enum):
    HOLDS = "holds"
    FAILS = "fails"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class AlgebraConfig:
    kind: str
    dfa: Dfa | None = None
    moment_order: int = 1
    epsilon: float = 1e-9
    max_unfold: int = 10**6
    quad_points: int = 1024
    strict: bool = False  # raise instead of returning a truncated result

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown algebra {self.kind!r}; expected one of {KINDS}")
        if self.kind == "trace" and self.dfa is None:
            raise ValueError("the trace algebra needs an automaton")
        if self.moment_order < 1:
            raise ValueError("moment_order must be at least 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.max_unfold < 1 or self.quad_points < 1:
            raise ValueError("max_unfold and quad_points must be at least 1")


@dataclass(frozen=True)
class EvalResult:
    value: object
    status: Status
    iterations_used: int
    error_bound: float | None = None

    def to_json(self) -> dict:
        return {"value": value_to_json(self.value), "status": self.status.value,
                "iterations": self.iterations_used, "error_bound": self.error_bound}


def _weight_json(w: float):
    return "inf" if math.isinf(w) else w


def value_to_json(v):
    match v:
        case frozenset() | set():
            return sorted(v)
        case float() | int():
            return _weight_json(float(v))
        case tuple():
            return [_weight_json(x) for x in v]
    return repr(v)


# ---------------------------------------------------------------- weights

def wmul(a: float, b: float) -> float:
    """Product on [0, inf] with 0 * inf = 0."""
    if a == 0 or b == 0:
        return 0.0
    return a * b


def wpow(b: float, i: int) -> float:
    return 1.0 if i == 0 else (0.0 if b == 0 else b ** i)


def elapse(a: tuple[float, ...], b: float) -> tuple[float, ...]:
    """Right action of a cost ``b`` on a moment vector: component i is
    ``b^i + sum_{j=1..i} C(i, j) a_j b^(i-j)``."""
    out = []
    for i in range(1, len(a) + 1):
        total = wpow(b, i)
        for j in range(1, i + 1):
            total += wmul(math.comb(i, j) * a[j - 1], wpow(b, i - j))
        out.append(total)
    return tuple(out)


def _change(old: float, new: float) -> float:
    if old == new:
        return 0.0
    if math.isinf(old) or math.isinf(new):
        return INF
    return abs(new - old)


def _not_below(old: float, new: float) -> bool:
    # tolerates rounding noise; the tolerance term would be nan at infinity
    return new >= old or new >= old - 1e-12 * max(1.0, old)


# ---------------------------------------------------------------- trace operations

def trace_event(dfa: Dfa, a: str, s: frozenset) -> frozenset:
    """Predecessors of ``s`` under ``a``."""
    return dfa.pre(a, s)


def trace_meet(s1: frozenset, s2: frozenset) -> frozenset:
    return frozenset(s1) & frozenset(s2)


# ---------------------------------------------------------------- algebras

Resume = Callable[[object], object]


class _Algebra:
    name = ""

    def unsupported(self, what: str):
        raise UnsupportedNode(f"{what} is not supported by the {self.name} algebra")

    def modal(self, op: str, resume: Resume, coarity, ev: "_Evaluator"):
        self.unsupported(f"operation {op}")

    def truth(self, b: bool):
        self.unsupported("true/false")

    def conj(self, a, b):
        self.unsupported("&&")

    def disj(self, a, b):
        self.unsupported("||")

    def implies(self, a, b):
        self.unsupported("=>")

    def weight(self, w: float):
        self.unsupported("weight literal")

    def add(self, a, b):
        self.unsupported("+")

    def mul(self, a, b):
        self.unsupported("*")


class TraceAlgebra(_Algebra):
    """Subsets of the automaton's states; the recursion order is reversed inclusion."""

    name = "trace"

    def __init__(self, dfa: Dfa):
        self.dfa = dfa
        self.bottom = dfa.universe

    def modal(self, op, resume, coarity, ev):
        family, index = split_indexed(op)
        if family == "event" and index is not None:
            return trace_event(self.dfa, index, resume(()))
        if family == "choice" and index is None:
            return trace_meet(resume(InjVal(1, ())), resume(InjVal(2, ())))
        return super().modal(op, resume, coarity, ev)

    def truth(self, b):
        return self.dfa.universe if b else frozenset()

    def conj(self, a, b):
        return a & b

    def disj(self, a, b):
        return a | b

    def implies(self, a, b):
        return (self.dfa.universe - a) | b

    def change(self, old, new) -> float:
        return 0.0 if old == new else INF

    def descends(self, old, new) -> bool:
        return new <= old


class CostAlgebra(_Algebra):
    """Extended nonnegative reals ordered as usual."""

    name = "cost"
    bottom = 0.0

    def __init__(self, quad_points: int):
        self.quad_points = quad_points

    def modal(self, op, resume, coarity, ev):
        family, index = split_indexed(op)
        if family == "tick" and index is None:
            return 1.0 + resume(())
        if family == "flip" and index is not None:
            p = float(index)
            return wmul(p, resume(InjVal(1, ()))) + wmul(1.0 - p, resume(InjVal(2, ())))
        if family == "unif" and index is None:
            ev.approximate()
            n = self.quad_points
            return math.fsum(resume((i + 0.5) / n) for i in range(n)) / n
        return super().modal(op, resume, coarity, ev)

    def weight(self, w):
        return float(w)

    def add(self, a, b):
        return a + b

    def mul(self, a, b):
        return wmul(a, b)

    def change(self, old, new) -> float:
        return _change(old, new)

    def descends(self, old, new) -> bool:
        return _not_below(old, new)


class MomentAlgebra(_Algebra):
    """Vectors of the first ``n`` cost moments, ordered componentwise."""

    name = "moments"

    def __init__(self, order: int, quad_points: int):
        self.order = order
        self.quad_points = quad_points
        self.bottom = (0.0,) * order

    def modal(self, op, resume, coarity, ev):
        family, index = split_indexed(op)
        if family == "tick" and index is None:
            return elapse(resume(()), 1.0)
        if family == "flip" and index is not None:
            p = float(index)
            a, b = resume(InjVal(1, ())), resume(InjVal(2, ()))
            return tuple(wmul(p, x) + wmul(1.0 - p, y) for x, y in zip(a, b))
        if family == "unif" and index is None:
            ev.approximate()
            n = self.quad_points
            samples = [resume((i + 0.5) / n) for i in range(n)]
            return tuple(math.fsum(col) / n for col in zip(*samples))
        return super().modal(op, resume, coarity, ev)

    def weight(self, w):
        # a constant cost w has moments (w, w^2, ..., w^n)
        return tuple(wpow(float(w), i) for i in range(1, self.order + 1))

    def change(self, old, new) -> float:
        return max(_change(a, b) for a, b in zip(old, new))

    def descends(self, old, new) -> bool:
        return all(_not_below(a, b) for a, b in zip(old, new))


def make_algebra(config: AlgebraConfig) -> _Algebra:
    match config.kind:
        case "trace":
            return TraceAlgebra(config.dfa)
        case "cost":
            return CostAlgebra(config.quad_points)
        case "moments":
            return MomentAlgebra(config.moment_order, config.quad_points)
    raise ValueError(config.kind)


# ---------------------------------------------------------------- semantic values

class Closure:
    """A predicate denoted by a lambda; equal closures have equal code and captured values."""

    __slots__ = ("lam", "env", "key", "_hash")

    def __init__(self, lam: L.Lam, env: dict, fv: tuple[str, ...]):
        self.lam = lam
        self.env = env
        self.key = (id(lam), tuple(env[x] for x in fv))
        self._hash = hash(self.key)

    def __eq__(self, other):
        return isinstance(other, Closure) and self.key == other.key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"<closure \\{self.lam.var}>"


class PrimPred:
    """A predicate given by a Python function, for supplying postconditions in the environment."""

    def __init__(self, fn: Callable[[object], object], name: str = "prim"):
        self.fn = fn
        self.name = name

    def __repr__(self):
        return f"<{self.name}>"


class RecPred:
    """A recursively defined predicate; calling it solves the fixpoint at the given argument."""

    __slots__ = ("solver", "key", "_hash")

    def __init__(self, solver: "_Solver", key):
        self.solver = solver
        self.key = key
        self._hash = hash(key)

    def __eq__(self, other):
        return isinstance(other, RecPred) and self.key == other.key

    def __hash__(self):
        return self._hash

    def __call__(self, arg):
        return self.solver.call(arg)

    @property
    def status(self) -> Status:
        return self.solver.ev.status

    def __repr__(self):
        return f"<letrec {self.solver.node.fname}>"


def enumerate_values(t: Type) -> list:
    match t:
        case Unit():
            return [()]
        case Empty():
            return []
        case Prod(l, r):
            return [(a, b) for a, b in itertools.product(enumerate_values(l), enumerate_values(r))]
        case Sum(l, r):
            return [InjVal(1, a) for a in enumerate_values(l)] + [InjVal(2, b) for b in enumerate_values(r)]
    raise EvaluationError(f"cannot enumerate the values of {t}")


SEED_LIMIT = 4096


class _BudgetExhausted(Exception):
    pass


class _Solver:
    def __init__(self, ev: "_Evaluator", node: L.LetRecPred, env: dict):
        self.ev = ev
        self.node = node
        self.env = env
        self.table: dict = {}
        self.iterating = False
        self.grew = False
        self.solved = False
        if node.ty is not None and enumerable(node.ty):
            values = enumerate_values(node.ty)
            if len(values) <= SEED_LIMIT:
                self.table = {v: ev.alg.bottom for v in values}

    def call(self, arg):
        if self.iterating:
            if arg not in self.table:
                self.table[arg] = self.ev.alg.bottom
                self.grew = True
            return self.table[arg]
        if arg not in self.table:
            self.table[arg] = self.ev.alg.bottom
            self.solved = False
        if not self.solved:
            self.solve()
        return self.table[arg]

    def solve(self):
        ev, alg, node = self.ev, self.ev.alg, self.node
        self.iterating = True
        try:
            while True:
                self.grew = False
                current = dict(self.table)
                updated = {}
                biggest = 0.0
                truncated = False
                for arg, old in current.items():
                    if ev.used >= ev.config.max_unfold:
                        truncated = True
                        break
                    ev.used += 1
                    new = ev.eval(node.body, {**self.env, node.var: arg})
                    if not alg.descends(old, new):
                        raise EvaluationError(f"fixpoint iteration of {node.fname} is not monotone")
                    updated[arg] = new
                    biggest = max(biggest, alg.change(old, new))
                self.table.update(updated)
                if truncated:
                    ev.degrade(Status.TRUNCATED)
                    if ev.config.strict:
                        raise EvaluationError(f"iteration cap of {ev.config.max_unfold} exhausted in {node.fname}")
                    break
                if not self.grew and biggest == 0.0:
                    break
                if not self.grew and biggest < ev.config.epsilon:
                    ev.degrade(Status.CONVERGED)
                    break
        finally:
            self.iterating = False
        self.solved = True


def _first_order(v) -> bool:
    match v:
        case InjVal(_, inner):
            return _first_order(inner)
        case tuple():
            return all(_first_order(x) for x in v)
        case Closure():
            return all(_first_order(x) for x in v.env.values())
        case RecPred() | PrimPred():
            return False
    return True


class _Evaluator:
    def __init__(self, config: AlgebraConfig):
        self.config = config
        self.alg = make_algebra(config)
        self.used = 0
        self.status = Status.EXACT
        self.fv_cache: dict[int, tuple[str, ...]] = {}
        self.solved_preds: dict = {}

    def degrade(self, status: Status):
        if status.rank > self.status.rank:
            self.status = status

    def approximate(self):
        self.degrade(Status.CONVERGED)

    def free(self, node) -> tuple[str, ...]:
        key = id(node)
        fv = self.fv_cache.get(key)
        if fv is None:
            fv = self.fv_cache[key] = tuple(sorted(L.free_vars(node)))
        return fv

    @staticmethod
    def capture(fv: tuple[str, ...], env: dict) -> dict:
        missing = [x for x in fv if x not in env]
        if missing:
            raise EvaluationError(f"unbound variable {missing[0]}")
        return {x: env[x] for x in fv}

    def apply(self, fn, arg):
        match fn:
            case Closure():
                return self.eval(fn.lam.body, {**fn.env, fn.lam.var: arg})
            case RecPred():
                return fn.solver.call(arg)
            case PrimPred():
                return fn.fn(arg)
        raise EvaluationError(f"applying a non-predicate value {fn!r}")

    def eval(self, t: L.Formula, env: dict):
        alg = self.alg
        match t:
            case L.Var(x):
                try:
                    return env[x]
                except KeyError:
                    raise EvaluationError(f"unbound variable {x}") from None
            case L.UnitVal():
                return ()
            case L.Pair(a, b):
                return (self.eval(a, env), self.eval(b, env))
            case L.Proj(i, a):
                return self.eval(a, env)[i - 1]
            case L.Inj(i, _, a):
                return InjVal(i, self.eval(a, env))
            case L.Const(c, a):
                return apply_constant(c, self.eval(a, env))
            case L.Case(s, x1, b1, x2, b2):
                v = self.eval(s, env)
                if not isinstance(v, InjVal):
                    raise EvaluationError("case on a non-injection value")
                return self.eval(b1, {**env, x1: v.value}) if v.index == 1 else self.eval(b2, {**env, x2: v.value})
            case L.Absurd():
                raise EvaluationError("reached absurd: no value of the empty type exists")
            case L.Lam():
                fv = self.free(t)
                return Closure(t, self.capture(fv, env), fv)
            case L.App(f, a):
                return self.apply(self.eval(f, env), self.eval(a, env))
            case L.LetRecPred(f, _, _, _, rest):
                fv = self.free(t)
                captured = tuple(self.capture(fv, env).values())
                key = ("rec", id(t), captured)
                pred = self.solved_preds.get(key)
                if pred is None:
                    solver = _Solver(self, t, {})
                    pred = RecPred(solver, key)
                    solver.env = {**dict(zip(fv, captured)), f: pred}
                    # a predicate capturing only first-order data does not depend on any enclosing
                    # iteration, so its table stays valid and is shared
                    if all(_first_order(v) for v in captured):
                        self.solved_preds[key] = pred
                return self.eval(rest, {**env, f: pred})
            case L.Modal(o, a):
                v = self.eval(a, env)
                if not (isinstance(v, tuple) and len(v) == 2):
                    raise EvaluationError(f"operation {o} applied to a non-pair")
                resume, coarity = v
                return alg.modal(o, lambda x: self.apply(resume, x), coarity, self)
            case L.TrueF():
                return alg.truth(True)
            case L.FalseF():
                return alg.truth(False)
            case L.And(a, b):
                return alg.conj(self.eval(a, env), self.eval(b, env))
            case L.Or(a, b):
                return alg.disj(self.eval(a, env), self.eval(b, env))
            case L.Implies(a, b):
                return alg.implies(self.eval(a, env), self.eval(b, env))
            case L.Forall(x, ty, b) | L.Exists(x, ty, b):
                if not isinstance(alg, TraceAlgebra):
                    alg.unsupported("quantifier")
                if ty is None or not enumerable(ty):
                    raise EvaluationError(f"quantifier domain {ty} is not enumerable")
                combine, acc = (alg.conj, alg.truth(True)) if isinstance(t, L.Forall) else (alg.disj, alg.truth(False))
                for v in enumerate_values(ty):
                    acc = combine(acc, self.eval(b, {**env, x: v}))
                return acc
            case L.WeightLit(w):
                return alg.weight(w)
            case L.Add(a, b) | L.Mul(a, b):
                op = alg.add if isinstance(t, L.Add) else alg.mul
                if isinstance(alg, (TraceAlgebra, MomentAlgebra)):
                    alg.unsupported("weight arithmetic")
                x, y = self.eval(a, env), self.eval(b, env)
                for v in (x, y):
                    if not isinstance(v, (int, float)) or v < 0:
                        raise EvaluationError(f"weight arithmetic on a negative or non-numeric value {v!r}")
                return op(float(x), float(y))
        raise TypeError(f"not a formula: {t!r}")


def evaluate(config: AlgebraConfig, env: dict, term: L.Formula) -> EvalResult:
    """Interpret a closed (up to ``env``) formula; see :class:`EvalResult` for the status."""
    ev = _Evaluator(config)
    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 20000))
    try:
        value = ev.eval(term, dict(env))
    finally:
        sys.setrecursionlimit(old_limit)
    return EvalResult(value, ev.status, ev.used, 0.0 if ev.status is Status.EXACT else None)


def fixpoint_letrec(config: AlgebraConfig, env: dict, fname: str, binder: str, rho: Type,
                    body: L.Formula) -> RecPred:
    """The recursive predicate ``f`` defined by ``f binder = body``, as a callable solving on demand."""
    node = L.LetRecPred(fname, binder, rho, body, L.Var(fname))
    ev = _Evaluator(config)
    solver = _Solver(ev, node, {})
    pred = RecPred(solver, ("rec", id(node), ()))
    solver.env = {**env, fname: pred}
    return pred


def trace_check(config: AlgebraConfig, formula: L.Formula) -> tuple[Verdict, EvalResult]:
    if config.kind != "trace":
        raise ValueError("trace checking needs the trace algebra")
    result = evaluate(config, {}, formula)
    if config.dfa.initial not in result.value:
        return Verdict.FAILS, result
    if result.status is Status.EXACT:
        return Verdict.HOLDS, result
    return Verdict.UNKNOWN, result


def check_trace_property(config: AlgebraConfig, formula: L.Formula) -> Verdict:
    """``holds`` iff the initial state is in the exact value; ``fails`` iff it is absent
    (sound because approximants over-approximate); ``unknown`` otherwise."""
    return trace_check(config, formula)[0]
