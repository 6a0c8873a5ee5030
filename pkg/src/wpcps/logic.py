"""The target logic: a simply typed lambda calculus whose only arrows are
predicates ``rho -> R``, with modal operators, recursive predicates, and the
optional connectives and weight arithmetic used by the two instances."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from typing import Union

from .errors import SignatureError, TypeMismatch, UnboundVariable
from .signature import REAL, Signature
from .types import ANSWER, EMPTY, UNIT, Arrow, Meta, PredArrow, Prod, Sum, Type, base_names, show_type


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str
    arg: "Formula"


@dataclass(frozen=True)
class Modal:
    """Modal operator ``o M`` with ``M : (ar(o) -> R) * car(o)``."""

    name: str
    arg: "Formula"


@dataclass(frozen=True)
class UnitVal:
    pass


@dataclass(frozen=True)
class Pair:
    fst: "Formula"
    snd: "Formula"


@dataclass(frozen=True)
class Proj:
    index: int
    arg: "Formula"


@dataclass(frozen=True)
class Absurd:
    arg: "Formula"


@dataclass(frozen=True)
class Inj:
    index: int
    other: Type
    arg: "Formula"


@dataclass(frozen=True)
class Case:
    scrut: "Formula"
    x1: str
    b1: "Formula"
    x2: str
    b2: "Formula"


@dataclass(frozen=True)
class Lam:
    var: str
    ty: Type | None
    body: "Formula"
    # names to show when printing ``\z. M[fst z/x, snd z/y]`` as ``\(x, y). M``
    pattern: tuple[str, str] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class App:
    fn: "Formula"
    arg: "Formula"


@dataclass(frozen=True)
class LetRecPred:
    fname: str
    var: str
    ty: Type | None
    body: "Formula"
    rest: "Formula"
    pattern: tuple[str, str] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class TrueF:
    pass


@dataclass(frozen=True)
class FalseF:
    pass


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Forall:
    var: str
    ty: Type
    body: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    ty: Type
    body: "Formula"


@dataclass(frozen=True)
class WeightLit:
    value: float

    def __post_init__(self):
        if not (self.value >= 0):
            raise ValueError(f"weight literal must be a nonnegative extended real, got {self.value}")


@dataclass(frozen=True)
class Add:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Mul:
    left: "Formula"
    right: "Formula"


Formula = Union[Var, Const, Modal, UnitVal, Pair, Proj, Absurd, Inj, Case, Lam, App, LetRecPred,
                TrueF, FalseF, And, Or, Implies, Forall, Exists, WeightLit, Add, Mul]

UNIT_VAL = UnitVal()
TRUE = TrueF()
FALSE = FalseF()

BINARY_CONNECTIVES = (And, Or, Implies)
ARITHMETIC = (Add, Mul)
QUANTIFIERS = (Forall, Exists)

_fresh = itertools.count()


def fresh_name(base: str) -> str:
    return f"{base.split(chr(39))[0]}'{next(_fresh)}"


def children(t: Formula) -> list[Formula]:
    match t:
        case Var() | UnitVal() | TrueF() | FalseF() | WeightLit():
            return []
        case Const(_, a) | Modal(_, a) | Proj(_, a) | Absurd(a) | Inj(_, _, a):
            return [a]
        case Pair(a, b) | App(a, b) | And(a, b) | Or(a, b) | Implies(a, b) | Add(a, b) | Mul(a, b):
            return [a, b]
        case Case(s, _, b1, _, b2):
            return [s, b1, b2]
        case Lam(_, _, b) | Forall(_, _, b) | Exists(_, _, b):
            return [b]
        case LetRecPred(_, _, _, body, rest):
            return [body, rest]
    raise TypeError(f"not a formula: {t!r}")


def subterms(t: Formula):
    yield t
    for c in children(t):
        yield from subterms(c)


def free_vars(t: Formula) -> set[str]:
    match t:
        case Var(x):
            return {x}
        case Case(s, x1, b1, x2, b2):
            return free_vars(s) | (free_vars(b1) - {x1}) | (free_vars(b2) - {x2})
        case Lam(x, _, b) | Forall(x, _, b) | Exists(x, _, b):
            return free_vars(b) - {x}
        case LetRecPred(f, x, _, body, rest):
            return (free_vars(body) - {f, x}) | (free_vars(rest) - {f})
    out: set[str] = set()
    for c in children(t):
        out |= free_vars(c)
    return out


def all_names(t: Formula) -> set[str]:
    """Every variable name occurring in ``t``, free or bound."""
    names: set[str] = set()
    for s in subterms(t):
        match s:
            case Var(x):
                names.add(x)
            case Case(_, x1, _, x2, _):
                names |= {x1, x2}
            case Lam(x, _, _) | Forall(x, _, _) | Exists(x, _, _):
                names.add(x)
            case LetRecPred(f, x, _, _, _):
                names |= {f, x}
    return names


def map_children(t: Formula, fn) -> Formula:
    match t:
        case Var() | UnitVal() | TrueF() | FalseF() | WeightLit():
            return t
        case Const(n, a):
            return Const(n, fn(a))
        case Modal(n, a):
            return Modal(n, fn(a))
        case Proj(i, a):
            return Proj(i, fn(a))
        case Absurd(a):
            return Absurd(fn(a))
        case Inj(i, o, a):
            return Inj(i, o, fn(a))
        case Pair(a, b) | App(a, b) | And(a, b) | Or(a, b) | Implies(a, b) | Add(a, b) | Mul(a, b):
            return type(t)(fn(a), fn(b))
    raise TypeError(f"binder or unknown node: {t!r}")


def substitute(term: Formula, var: str, value: Formula) -> Formula:
    """Capture-avoiding substitution ``term[value/var]``."""
    return substitute_many(term, {var: value})


def substitute_many(term: Formula, mapping: dict[str, Formula]) -> Formula:
    if not mapping:
        return term
    fv_values: set[str] = set()
    for v in mapping.values():
        fv_values |= free_vars(v)

    def go(t: Formula, m: dict[str, Formula]) -> Formula:
        if not m:
            return t
        match t:
            case Var(x):
                return m.get(x, t)
            case Case(s, x1, b1, x2, b2):
                x1, b1, m1 = _enter(x1, b1, m)
                x2, b2, m2 = _enter(x2, b2, m)
                return Case(go(s, m), x1, go(b1, m1), x2, go(b2, m2))
            case Lam(x, ty, b):
                x, b, m1 = _enter(x, b, m)
                return replace(t, var=x, body=go(b, m1))
            case Forall(x, ty, b) | Exists(x, ty, b):
                x, b, m1 = _enter(x, b, m)
                return type(t)(x, ty, go(b, m1))
            case LetRecPred(f, x, ty, body, rest):
                f2, rest2, mr = _enter(f, rest, m)
                if f2 != f:
                    body = substitute(body, f, Var(f2))
                x2, body2, mb = _enter(x, body, mr)
                return replace(t, fname=f2, var=x2, body=go(body2, mb), rest=go(rest2, mr))
        return map_children(t, lambda c: go(c, m))

    def _enter(x: str, body: Formula, m: dict[str, Formula]):
        m = {k: v for k, v in m.items() if k != x}
        if m and x in fv_values:
            y = fresh_name(x)
            return y, substitute(body, x, Var(y)), m
        return x, body, m

    return go(term, mapping)


def alpha_equiv(a: Formula, b: Formula, types: bool = True) -> bool:
    """Equality up to renaming of bound variables; binder types compared when ``types``."""

    def ty_eq(s, t):
        return not types or s == t

    def go(s, t, es: dict, et: dict, d: int) -> bool:
        if type(s) is not type(t):
            return False
        match s:
            case Var(x):
                return es.get(x, ("free", x)) == et.get(t.name, ("free", t.name))
            case UnitVal() | TrueF() | FalseF():
                return True
            case WeightLit(w):
                return w == t.value
            case Const(n, a) | Modal(n, a):
                return n == t.name and go(a, t.arg, es, et, d)
            case Proj(i, a):
                return i == t.index and go(a, t.arg, es, et, d)
            case Inj(i, o, a):
                return i == t.index and ty_eq(o, t.other) and go(a, t.arg, es, et, d)
            case Absurd(a):
                return go(a, t.arg, es, et, d)
            case Case(sc, x1, b1, x2, b2):
                return (go(sc, t.scrut, es, et, d)
                        and go(b1, t.b1, {**es, x1: d}, {**et, t.x1: d}, d + 1)
                        and go(b2, t.b2, {**es, x2: d}, {**et, t.x2: d}, d + 1))
            case Lam(x, ty, body) | Forall(x, ty, body) | Exists(x, ty, body):
                return ty_eq(ty, t.ty) and go(body, t.body, {**es, x: d}, {**et, t.var: d}, d + 1)
            case LetRecPred(f, x, ty, body, rest):
                es1, et1 = {**es, f: d}, {**et, t.fname: d}
                return (ty_eq(ty, t.ty)
                        and go(body, t.body, {**es1, x: d + 1}, {**et1, t.var: d + 1}, d + 2)
                        and go(rest, t.rest, es1, et1, d + 1))
        return all(go(c1, c2, es, et, d) for c1, c2 in zip(children(s), children(t)))

    return go(a, b, {}, {}, 0)


# ---------------------------------------------------------------- typing

def _check_target_type(sig: Signature, t: Type, path):
    match t:
        case Arrow():
            raise TypeMismatch("arrow with non-answer codomain", "a type of the form rho -> R",
                               show_type(t), path)
        case Meta():
            raise TypeMismatch("unresolved type", path=path)
        case Prod(l, r) | Sum(l, r):
            _check_target_type(sig, l, path)
            _check_target_type(sig, r, path)
        case PredArrow(d):
            _check_target_type(sig, d, path)
    unknown = base_names(t) - sig.base_types
    if unknown:
        raise TypeMismatch(f"undeclared base type(s) {sorted(unknown)}", path=path)


def typecheck_target(sig: Signature, ctx, term: Formula) -> Type:
    """Infer the type of a formula; ``ctx`` is a list of (name, type) pairs or a dict."""
    env = dict(ctx)

    def answer(t, env, path):
        found = go(t, env, path)
        if found != ANSWER:
            raise TypeMismatch("expected a formula of the answer type", ANSWER, found, path)

    def weight_operand(t, env, path):
        found = go(t, env, path)
        if found not in (ANSWER, REAL):
            raise TypeMismatch("connective used at non-answer type", ANSWER, found, path)

    def need_binder_type(ty, path):
        if ty is None:
            raise TypeMismatch("binder needs a type annotation", path=path)
        _check_target_type(sig, ty, path)

    def go(t: Formula, env: dict, path: tuple) -> Type:
        match t:
            case Var(x):
                if x not in env:
                    raise UnboundVariable(f"unbound variable {x}", path=path)
                return env[x]
            case UnitVal():
                return UNIT
            case Const(c, a):
                try:
                    decl = sig.constant(c)
                except SignatureError as e:
                    raise TypeMismatch(str(e), path=path) from None
                found = go(a, env, path + (c,))
                if found != decl.ar:
                    raise TypeMismatch("constant argument", decl.ar, found, path + (c,))
                return decl.car
            case Modal(o, a):
                try:
                    decl = sig.operation(o)
                except SignatureError as e:
                    raise TypeMismatch(str(e), path=path) from None
                want = Prod(PredArrow(decl.ar), decl.car)
                found = go(a, env, path + (o,))
                if found != want:
                    raise TypeMismatch("modal operator argument", want, found, path + (o,))
                return ANSWER
            case Pair(a, b):
                return Prod(go(a, env, path + ("fst",)), go(b, env, path + ("snd",)))
            case Proj(i, a):
                found = go(a, env, path + (f"proj{i}",))
                if not isinstance(found, Prod):
                    raise TypeMismatch("projection from a non-product", "a product type", found, path)
                return found.left if i == 1 else found.right
            case Absurd(a):
                found = go(a, env, path + ("absurd",))
                if found != EMPTY:
                    raise TypeMismatch("absurd on a non-empty type", EMPTY, found, path)
                return ANSWER
            case Inj(i, other, a):
                _check_target_type(sig, other, path)
                inner = go(a, env, path + (f"inj{i}",))
                return Sum(inner, other) if i == 1 else Sum(other, inner)
            case Case(s, x1, b1, x2, b2):
                found = go(s, env, path + ("case",))
                if not isinstance(found, Sum):
                    raise TypeMismatch("case on a non-sum", "a sum type", found, path)
                answer(b1, {**env, x1: found.left}, path + ("inl",))
                answer(b2, {**env, x2: found.right}, path + ("inr",))
                return ANSWER
            case Lam(x, ty, b):
                need_binder_type(ty, path)
                answer(b, {**env, x: ty}, path + (f"\\{x}",))
                return PredArrow(ty)
            case App(f, a):
                ft = go(f, env, path + ("fn",))
                if not isinstance(ft, PredArrow):
                    raise TypeMismatch("applying a non-predicate", "a type rho -> R", ft, path + ("fn",))
                at = go(a, env, path + ("arg",))
                if at != ft.dom:
                    raise TypeMismatch("argument type", ft.dom, at, path + ("arg",))
                return ANSWER
            case LetRecPred(f, x, ty, body, rest):
                need_binder_type(ty, path)
                env1 = {**env, f: PredArrow(ty)}
                answer(body, {**env1, x: ty}, path + (f"letrec {f}",))
                return go(rest, env1, path + ("in",))
            case TrueF() | FalseF() | WeightLit():
                return ANSWER
            case And(a, b) | Or(a, b) | Implies(a, b):
                answer(a, env, path + ("left",))
                answer(b, env, path + ("right",))
                return ANSWER
            case Add(a, b) | Mul(a, b):
                weight_operand(a, env, path + ("left",))
                weight_operand(b, env, path + ("right",))
                return ANSWER
            case Forall(x, ty, b) | Exists(x, ty, b):
                need_binder_type(ty, path)
                answer(b, {**env, x: ty}, path + (f"q {x}",))
                return ANSWER
        raise TypeError(f"not a formula: {t!r}")

    return go(term, env, ())


# ---------------------------------------------------------------- normalization

def normalize(t: Formula) -> Formula:
    """Beta/projection/case reduction plus hoisting ``letrec f = M in \\k. N`` to
    ``\\k. letrec f = M in N``.  Used to tidy CPS output for display."""
    match t:
        case App(f, a):
            f2, a2 = normalize(f), normalize(a)
            if isinstance(f2, Lam):
                return normalize(substitute(f2.body, f2.var, a2))
            return App(f2, a2)
        case Proj(i, a):
            a2 = normalize(a)
            if isinstance(a2, Pair):
                return a2.fst if i == 1 else a2.snd
            return Proj(i, a2)
        case Case(s, x1, b1, x2, b2):
            s2 = normalize(s)
            if isinstance(s2, Inj):
                x, b = (x1, b1) if s2.index == 1 else (x2, b2)
                return normalize(substitute(b, x, s2.arg))
            return Case(s2, x1, normalize(b1), x2, normalize(b2))
        case Lam(x, ty, b):
            return replace(t, body=normalize(b))
        case Forall(x, ty, b) | Exists(x, ty, b):
            return type(t)(x, ty, normalize(b))
        case LetRecPred(f, x, ty, body, rest):
            body2, rest2 = normalize(body), normalize(rest)
            if f not in free_vars(rest2):
                return rest2
            if isinstance(rest2, Lam) and rest2.var not in free_vars(body2) and rest2.var not in (f, x):
                return replace(rest2, body=replace(t, body=body2, rest=rest2.body))
            return replace(t, body=body2, rest=rest2)
    return map_children(t, normalize)


# ---------------------------------------------------------------- printing

def format_weight(w: float) -> str:
    if math.isinf(w):
        return "inf"
    if w == int(w) and abs(w) < 1e15:
        return str(int(w))
    return repr(w)


def _only_projected(t: Formula, z: str) -> bool:
    """Every free occurrence of ``z`` in ``t`` is directly under a projection."""
    match t:
        case Var(x):
            return x != z
        case Proj(_, Var(x)) if x == z:
            return True
        case Case(s, x1, b1, x2, b2):
            return (_only_projected(s, z) and (x1 == z or _only_projected(b1, z))
                    and (x2 == z or _only_projected(b2, z)))
        case Lam(x, _, b) | Forall(x, _, b) | Exists(x, _, b):
            return x == z or _only_projected(b, z)
        case LetRecPred(f, x, _, body, rest):
            return ((f == z or x == z or _only_projected(body, z))
                    and (f == z or _only_projected(rest, z)))
    return all(_only_projected(c, z) for c in children(t))


def _pattern_names(z: str, body: Formula, hint) -> tuple[str, str] | None:
    if z not in free_vars(body) or not _only_projected(body, z):
        return None
    taken = all_names(body)
    if hint and hint[0] != hint[1] and not (set(hint) & taken):
        return hint
    a, b = f"{z}_1", f"{z}_2"
    while a in taken or b in taken:
        a, b = a + "'", b + "'"
    return a, b


def _unproject(body: Formula, z: str, names: tuple[str, str]) -> Formula:
    a, b = names
    # substituting the projections is safe because a and b are unused in body
    def go(t):
        match t:
            case Proj(i, Var(x)) if x == z:
                return Var(a if i == 1 else b)
            case Case(s, x1, b1, x2, b2):
                return Case(go(s), x1, b1 if x1 == z else go(b1), x2, b2 if x2 == z else go(b2))
            case Lam(x, _, bd):
                return t if x == z else replace(t, body=go(bd))
            case Forall(x, ty, bd) | Exists(x, ty, bd):
                return t if x == z else type(t)(x, ty, go(bd))
            case LetRecPred(f, x, _, bd, rest):
                if f == z:
                    return t
                return replace(t, body=bd if x == z else go(bd), rest=go(rest))
        return map_children(t, go)
    return go(body)


def _modal_symbol(name: str) -> str | None:
    if name.startswith("event[") and name.endswith("]"):
        return name[len("event["):-1]
    return None


def pretty_print(t: Formula, types: bool = True) -> str:
    """Render a formula in the concrete formula syntax (see ``formula_parser``)."""

    def ann(ty):
        return f":{show_type(ty)}" if types and ty is not None else ""

    def binder(var, ty, body, hint):
        names = _pattern_names(var, body, hint) if (ty is None or isinstance(ty, Prod)) else None
        if names is None:
            return f"{var}{ann(ty)}", body
        return f"({names[0]}, {names[1]}){ann(ty)}", _unproject(body, var, names)

    def go(t: Formula, prec: int) -> str:
        def paren(s, level):
            return f"({s})" if prec > level else s

        match t:
            case Var(x):
                return x
            case UnitVal():
                return "()"
            case TrueF():
                return "true"
            case FalseF():
                return "false"
            case WeightLit(w):
                return format_weight(w)
            case Pair(a, b):
                return f"({go(a, 0)}, {go(b, 0)})"
            case Proj(i, a):
                return f"{'fst' if i == 1 else 'snd'} {go(a, 7)}"
            case Inj(i, other, a):
                tag = "inl" if i == 1 else "inr"
                return f"{tag}[{show_type(other)}] {go(a, 7)}" if types else f"{tag} {go(a, 7)}"
            case Const(c, a):
                return f"{c}({go(a, 0)})"
            case Modal(o, a):
                inner = f"{go(a.fst, 0)}, {go(a.snd, 0)}" if isinstance(a, Pair) else go(a, 0)
                sym = _modal_symbol(o)
                return f"<{sym}>({inner})" if sym is not None else f"{o}{{{inner}}}"
            case App(f, a):
                return paren(f"{go(f, 6)} {go(a, 7)}", 6)
            case Mul(a, b):
                return paren(f"{go(a, 5)} * {go(b, 6)}", 5)
            case Add(a, b):
                return paren(f"{go(a, 4)} + {go(b, 5)}", 4)
            case And(a, b):
                return paren(f"{go(a, 3)} && {go(b, 4)}", 3)
            case Or(a, b):
                return paren(f"{go(a, 2)} || {go(b, 3)}", 2)
            case Implies(a, b):
                return paren(f"{go(a, 2)} => {go(b, 1)}", 1)
            case Lam(x, ty, b):
                head, body = binder(x, ty, b, t.pattern)
                return paren(f"\\{head}. {go(body, 0)}", 0)
            case Forall(x, ty, b):
                return paren(f"forall {x}:{show_type(ty)}. {go(b, 0)}", 0)
            case Exists(x, ty, b):
                return paren(f"exists {x}:{show_type(ty)}. {go(b, 0)}", 0)
            case LetRecPred(f, x, ty, body, rest):
                head, body = binder(x, ty, body, t.pattern)
                if types and ty is not None:
                    head = f"({head})"
                return paren(f"letrec {f} {head} = {go(body, 0)} in {go(rest, 0)}", 0)
            case Case(s, x1, b1, x2, b2):
                return paren(f"case {go(s, 0)} of inl {x1} -> {go(b1, 0)} | inr {x2} -> {go(b2, 0)}", 0)
            case Absurd(a):
                return paren(f"absurd {go(a, 0)}", 0)
        raise TypeError(f"not a formula: {t!r}")

    return go(t, 0)


def to_json(t: Formula):
    """Node-tagged JSON tree."""
    match t:
        case Var(x):
            return {"node": "Var", "name": x}
        case WeightLit(w):
            return {"node": "WeightLit", "value": format_weight(w)}
        case Const(n, a) | Modal(n, a):
            return {"node": type(t).__name__, "name": n, "arg": to_json(a)}
        case Proj(i, a):
            return {"node": "Proj", "index": i, "arg": to_json(a)}
        case Inj(i, o, a):
            return {"node": "Inj", "index": i, "other": show_type(o), "arg": to_json(a)}
        case Case(s, x1, b1, x2, b2):
            return {"node": "Case", "scrut": to_json(s), "x1": x1, "b1": to_json(b1), "x2": x2, "b2": to_json(b2)}
        case Lam(x, ty, b) | Forall(x, ty, b) | Exists(x, ty, b):
            return {"node": type(t).__name__, "var": x, "type": None if ty is None else show_type(ty),
                    "body": to_json(b)}
        case LetRecPred(f, x, ty, body, rest):
            return {"node": "LetRecPred", "fname": f, "var": x, "type": None if ty is None else show_type(ty),
                    "body": to_json(body), "rest": to_json(rest)}
    return {"node": type(t).__name__, "args": [to_json(c) for c in children(t)]}


__all__ = [
    "Var", "Const", "Modal", "UnitVal", "Pair", "Proj", "Absurd", "Inj", "Case", "Lam", "App",
    "LetRecPred", "TrueF", "FalseF", "And", "Or", "Implies", "Forall", "Exists", "WeightLit",
    "Add", "Mul", "Formula", "UNIT_VAL", "TRUE", "FALSE", "free_vars", "substitute", "substitute_many",
    "alpha_equiv", "typecheck_target", "normalize", "pretty_print", "to_json", "fresh_name",
]
