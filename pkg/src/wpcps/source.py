"""Terms of the source calculus: call-by-value lambda calculus with algebraic
operations, effect-free constants and recursive functions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from .types import Type, show_type, underline_size


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    name: str
    arg: "Term"


@dataclass(frozen=True)
class Op:
    """``o_rho M`` where ``M : (ar(o) -> rho) * car(o)``; ``rtype`` is rho, filled in by elaboration."""

    name: str
    rtype: Type | None
    arg: "Term"


@dataclass(frozen=True)
class UnitVal:
    pass


@dataclass(frozen=True)
class Pair:
    fst: "Term"
    snd: "Term"


@dataclass(frozen=True)
class Proj:
    index: int
    arg: "Term"


@dataclass(frozen=True)
class Absurd:
    arg: "Term"
    ty: Type | None = None


@dataclass(frozen=True)
class Inj:
    """``inl``/``inr``; ``other`` is the type of the summand not being injected into."""

    index: int
    other: Type
    arg: "Term"


@dataclass(frozen=True)
class Case:
    scrut: "Term"
    x1: str
    b1: "Term"
    x2: str
    b2: "Term"


@dataclass(frozen=True)
class Lam:
    var: str
    ty: Type
    body: "Term"


@dataclass(frozen=True)
class App:
    fn: "Term"
    arg: "Term"


@dataclass(frozen=True)
class LetRec:
    fname: str
    var: str
    dom: Type | None
    cod: Type | None
    body: "Term"
    rest: "Term"


Term = Union[Var, Const, Op, UnitVal, Pair, Proj, Absurd, Inj, Case, Lam, App, LetRec]

UNIT_VAL = UnitVal()


def free_vars(t: Term) -> set[str]:
    match t:
        case Var(x):
            return {x}
        case UnitVal():
            return set()
        case Const(_, a) | Op(_, _, a) | Proj(_, a) | Absurd(a, _) | Inj(_, _, a):
            return free_vars(a)
        case Pair(a, b) | App(a, b):
            return free_vars(a) | free_vars(b)
        case Case(s, x1, b1, x2, b2):
            return free_vars(s) | (free_vars(b1) - {x1}) | (free_vars(b2) - {x2})
        case Lam(x, _, b):
            return free_vars(b) - {x}
        case LetRec(f, x, _, _, body, rest):
            return (free_vars(body) - {f, x}) | (free_vars(rest) - {f})
    raise TypeError(f"not a source term: {t!r}")


def alpha_equiv(a: Term, b: Term, annotations: bool = False) -> bool:
    """Equality up to renaming of bound variables.

    Inferred annotations (operation result types, absurd types, letrec types)
    are only compared when ``annotations`` is set.
    """

    def go(s: Term, t: Term, env_s: dict, env_t: dict, depth: int) -> bool:
        match s, t:
            case Var(x), Var(y):
                return env_s.get(x, x) == env_t.get(y, y)
            case UnitVal(), UnitVal():
                return True
            case Const(c, a1), Const(d, a2):
                return c == d and go(a1, a2, env_s, env_t, depth)
            case Op(o, r1, a1), Op(p, r2, a2):
                return o == p and (not annotations or r1 == r2) and go(a1, a2, env_s, env_t, depth)
            case (Pair(a1, b1), Pair(a2, b2)) | (App(a1, b1), App(a2, b2)):
                return go(a1, a2, env_s, env_t, depth) and go(b1, b2, env_s, env_t, depth)
            case Proj(i, a1), Proj(j, a2):
                return i == j and go(a1, a2, env_s, env_t, depth)
            case Absurd(a1, t1), Absurd(a2, t2):
                return (not annotations or t1 == t2) and go(a1, a2, env_s, env_t, depth)
            case Inj(i, o1, a1), Inj(j, o2, a2):
                return i == j and o1 == o2 and go(a1, a2, env_s, env_t, depth)
            case Case(s1, x1, p1, y1, q1), Case(s2, x2, p2, y2, q2):
                tag = f"#{depth}"
                return (go(s1, s2, env_s, env_t, depth)
                        and go(p1, p2, {**env_s, x1: tag}, {**env_t, x2: tag}, depth + 1)
                        and go(q1, q2, {**env_s, y1: tag}, {**env_t, y2: tag}, depth + 1))
            case Lam(x, t1, b1), Lam(y, t2, b2):
                tag = f"#{depth}"
                return t1 == t2 and go(b1, b2, {**env_s, x: tag}, {**env_t, y: tag}, depth + 1)
            case LetRec(f1, x1, d1, c1, m1, n1), LetRec(f2, x2, d2, c2, m2, n2):
                if annotations and (d1, c1) != (d2, c2):
                    return False
                ft, xt = f"#{depth}", f"#{depth + 1}"
                es, et = {**env_s, f1: ft}, {**env_t, f2: ft}
                return (go(m1, m2, {**es, x1: xt}, {**et, x2: xt}, depth + 2)
                        and go(n1, n2, es, et, depth + 1))
        return False

    return go(a, b, {}, {}, 0)


def term_depth(t: Term) -> int:
    match t:
        case Var() | UnitVal():
            return 1
        case Const(_, a) | Op(_, _, a) | Proj(_, a) | Absurd(a, _) | Inj(_, _, a) | Lam(_, _, a):
            return 1 + term_depth(a)
        case Pair(a, b) | App(a, b):
            return 1 + max(term_depth(a), term_depth(b))
        case Case(s, _, b1, _, b2):
            return 1 + max(term_depth(s), term_depth(b1), term_depth(b2))
        case LetRec(_, _, _, _, body, rest):
            return 1 + max(term_depth(body), term_depth(rest))
    raise TypeError(f"not a source term: {t!r}")


def nary_branches(op: Op) -> list[Term] | None:
    """Recover ``[M1, ..., Mn]`` from the desugared form of ``o(M1, ..., Mn)``."""
    match op.arg:
        case Pair(Lam(x, ty, body), UnitVal()):
            n = underline_size(ty)
            if n is None or n == 0:
                return None
            return _peel(body, x, n)
    return None


def _peel(body: Term, x: str, n: int) -> list[Term] | None:
    if n == 1:
        return None if x in free_vars(body) else [body]
    match body:
        case Case(Var(y), x1, inner, xn, last) if y == x:
            if x in free_vars(inner) | free_vars(last) or xn in free_vars(last):
                return None
            rest = _peel(inner, x1, n - 1)
            return None if rest is None else [*rest, last]
    return None


# precedence: 0 = binders (fun/letrec/case/absurd), 1 = application, 2 = atom
def show(t: Term, prec: int = 0) -> str:
    """Print a term in the concrete program syntax."""

    def paren(s: str, level: int) -> str:
        return f"({s})" if prec > level else s

    match t:
        case Var(x):
            return x
        case UnitVal():
            return "()"
        case Pair(a, b):
            return f"({show(a)}, {show(b)})"
        case Proj(i, a):
            return f"{'fst' if i == 1 else 'snd'} {show(a, 2)}"
        case Inj(i, other, a):
            return f"{'inl' if i == 1 else 'inr'} [{show_type(other)}] {show(a, 2)}"
        case Const(c, a):
            return f"{c}({show(a)})"
        case Op(o, _, a):
            branches = nary_branches(t)
            if branches is not None:
                return f"{o}({', '.join(show(b) for b in branches)})"
            return f"{o}({show(a)})"
        case App(f, a):
            return paren(f"{show(f, 1)} {show(a, 2)}", 1)
        case Lam(x, ty, b):
            return paren(f"fun {x}:{show_type(ty)}. {show(b)}", 0)
        case LetRec(f, x, _, _, body, rest):
            return paren(f"letrec {f} {x} = {show(body)} in {show(rest)}", 0)
        case Case(s, x1, b1, x2, b2):
            return paren(f"case {show(s)} of inl {x1} -> {show(b1)} | inr {x2} -> {show(b2)}", 0)
        case Absurd(a, _):
            return paren(f"absurd {show(a)}", 0)
    raise TypeError(f"not a source term: {t!r}")
