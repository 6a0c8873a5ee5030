"""Random well-typed programs and automata for property tests and the agreement harness."""

from __future__ import annotations

import itertools
import math
import random

from wpcps import source as S
from wpcps.dfa import Dfa
from wpcps.signature import NAT
from wpcps.types import BOOL, UNIT, Arrow, Prod, Sum, Type, is_ground

GROUND = [UNIT, BOOL, Prod(UNIT, BOOL), NAT]
SMALL = [UNIT, BOOL, NAT]
PROBS = ["0.25", "0.5", "0.75", "0.1"]


def surface_depth(t: S.Term) -> int:
    """Depth of the program as written: an n-ary operation counts once above its arguments."""
    match t:
        case S.Op():
            branches = S.nary_branches(t)
            if branches is not None:
                return 1 + max(surface_depth(b) for b in branches)
            return 1 + surface_depth(t.arg)
        case S.Var() | S.UnitVal():
            return 1
        case S.Const(_, a) | S.Proj(_, a) | S.Absurd(a, _) | S.Inj(_, _, a) | S.Lam(_, _, a):
            return 1 + surface_depth(a)
        case S.Pair(a, b) | S.App(a, b):
            return 1 + max(surface_depth(a), surface_depth(b))
        case S.Case(s, _, b1, _, b2):
            return 1 + max(surface_depth(s), surface_depth(b1), surface_depth(b2))
        case S.LetRec(_, _, _, _, body, rest):
            return 1 + max(surface_depth(body), surface_depth(rest))
    raise TypeError(t)


def has_letrec(t: S.Term) -> bool:
    match t:
        case S.LetRec():
            return True
        case S.Var() | S.UnitVal():
            return False
        case S.Const(_, a) | S.Op(_, _, a) | S.Proj(_, a) | S.Absurd(a, _) | S.Inj(_, _, a) | S.Lam(_, _, a):
            return has_letrec(a)
        case S.Pair(a, b) | S.App(a, b):
            return has_letrec(a) or has_letrec(b)
        case S.Case(s, _, b1, _, b2):
            return has_letrec(s) or has_letrec(b1) or has_letrec(b2)
    raise TypeError(t)


class ProgramGen:
    """Type-directed generator.  Recursion is bounded by a boolean counter except for
    the rare ``loop`` form, which may run forever."""

    def __init__(self, rng: random.Random, instance: str, loop_rate: float = 0.0, higher_order: bool = True):
        self.rng = rng
        self.instance = instance
        self.loop_rate = loop_rate
        self.higher_order = higher_order
        self.names = itertools.count()

    def fresh(self, base: str = "v") -> str:
        return f"{base}{next(self.names)}"

    # -- helpers building the desugared forms the parser produces
    def nary(self, name: str, args: list[S.Term]) -> S.Term:
        x = self.fresh("u")
        body = args[0] if len(args) == 1 else S.Case(S.Var(x), self.fresh("u"), args[0], self.fresh("u"), args[1])
        n_type = UNIT if len(args) == 1 else BOOL
        return S.Op(name, None, S.Pair(S.Lam(x, n_type, body), S.UNIT_VAL))

    def effect1(self, m: S.Term) -> S.Term:
        if self.instance == "trace":
            return self.nary(f"event[{self.rng.choice('ab')}]", [m])
        return self.nary("tick", [m])

    def effect2(self, m1: S.Term, m2: S.Term) -> S.Term:
        if self.instance == "trace":
            return self.nary("choice", [m1, m2])
        return self.nary(f"flip[{self.rng.choice(PROBS)}]", [m1, m2])

    def value(self, ty: Type) -> S.Term:
        match ty:
            case _ if ty == UNIT:
                return S.UNIT_VAL
            case Sum(l, r):
                return S.Inj(1, r, self.value(l)) if self.rng.random() < 0.5 else S.Inj(2, l, self.value(r))
            case Prod(l, r):
                return S.Pair(self.value(l), self.value(r))
            case Arrow(d, c):
                x = self.fresh()
                return S.Lam(x, d, self.value(c))
            case _ if ty == NAT:
                z = S.Const("zero", S.UNIT_VAL)
                return z if self.rng.random() < 0.5 else S.Const("succ", z)
        raise ValueError(f"no canonical value of {ty}")

    def leaf(self, ctx: dict[str, Type], ty: Type) -> S.Term:
        vs = [x for x, t in ctx.items() if t == ty]
        if vs and self.rng.random() < 0.6:
            return S.Var(self.rng.choice(vs))
        return self.value(ty)

    def term(self, ctx: dict[str, Type], ty: Type, d: int) -> S.Term:
        rng = self.rng
        if d <= 1 or rng.random() < 0.12:
            return self.leaf(ctx, ty)
        forms = ["effect1", "effect2", "case", "app", "proj"]
        weights = [3, 3, 2, 2, 1]
        if isinstance(ty, Prod):
            forms.append("pair"), weights.append(2)
        if ty == NAT:
            forms.append("succ"), weights.append(1)
        if self.higher_order and d >= 3:
            forms.append("hof"), weights.append(1)
        if d >= 4:
            forms.append("letrec"), weights.append(2)
        if d >= 3 and self.loop_rate and rng.random() < self.loop_rate:
            return self.loop(ctx, ty, d)
        form = rng.choices(forms, weights)[0]
        match form:
            case "effect1":
                return self.effect1(self.term(ctx, ty, d - 1))
            case "effect2":
                return self.effect2(self.term(ctx, ty, d - 1), self.term(ctx, ty, d - 1))
            case "case":
                x, y = self.fresh(), self.fresh()
                scrut = self.term(ctx, BOOL, d - 1)
                return S.Case(scrut, x, self.term({**ctx, x: UNIT}, ty, d - 1), y, self.term({**ctx, y: UNIT}, ty, d - 1))
            case "app":
                sigma = rng.choice(SMALL)
                x = self.fresh()
                return S.App(S.Lam(x, sigma, self.term({**ctx, x: sigma}, ty, d - 2)), self.term(ctx, sigma, d - 1))
            case "proj":
                other = rng.choice(SMALL)
                if rng.random() < 0.5:
                    return S.Proj(1, S.Pair(self.term(ctx, ty, d - 2), self.term(ctx, other, d - 2)))
                return S.Proj(2, S.Pair(self.term(ctx, other, d - 2), self.term(ctx, ty, d - 2)))
            case "pair":
                return S.Pair(self.term(ctx, ty.left, d - 1), self.term(ctx, ty.right, d - 1))
            case "succ":
                return S.Const("succ", self.term(ctx, NAT, d - 1))
            case "hof":
                # (fun h:unit -> ty. h ()) (fun u:unit. M)
                h, u = self.fresh("h"), self.fresh()
                fn_ty = Arrow(UNIT, ty)
                return S.App(S.Lam(h, fn_ty, S.App(S.Var(h), S.UNIT_VAL)), S.Lam(u, UNIT, self.term({**ctx, u: UNIT}, ty, d - 2)))
            case "letrec":
                return self.bounded_rec(ctx, ty, d)
        raise AssertionError(form)

    def bounded_rec(self, ctx, ty, d) -> S.Term:
        """``letrec f x = case x of inl _ -> BASE | inr _ -> STEP[f (inl ())] in f ARG``"""
        f, x, u1, u2 = self.fresh("f"), self.fresh(), self.fresh(), self.fresh()
        inner = {**ctx, f: Arrow(BOOL, ty), x: BOOL}
        base = self.term({**inner, u1: UNIT}, ty, d - 3)
        call = S.App(S.Var(f), S.Inj(1, UNIT, S.UNIT_VAL))
        other = self.term({**inner, u2: UNIT}, ty, d - 4)
        match self.rng.randrange(4):
            case 0:
                step = self.effect1(call)
            case 1:
                step = self.effect2(call, other) if self.rng.random() < 0.5 else self.effect2(other, call)
            case 2:
                v = self.fresh()
                step = S.App(S.Lam(v, ty, self.effect1(S.Var(v))), call)
            case _:
                step = S.Proj(1, S.Pair(call, self.value(UNIT)))
        body = S.Case(S.Var(x), u1, base, u2, step)
        arg = self.term(ctx, BOOL, d - 2)
        return S.LetRec(f, x, None, None, body, S.App(S.Var(f), arg))

    def loop(self, ctx, ty, d) -> S.Term:
        """``letrec f x = op2(BASE, op1(f ())) in f ()``: possibly infinite."""
        f, x = self.fresh("f"), self.fresh()
        inner = {**ctx, f: Arrow(UNIT, ty), x: UNIT}
        base = self.term(inner, ty, max(1, d - 3))
        body = self.effect2(base, self.effect1(S.App(S.Var(f), S.UNIT_VAL)))
        return S.LetRec(f, x, None, None, body, S.App(S.Var(f), S.UNIT_VAL))

    def program(self, max_depth: int = 6, ty: Type | None = None) -> tuple[S.Term, Type]:
        """A closed program of ground type with surface depth at most ``max_depth``."""
        while True:
            t = ty or self.rng.choice(GROUND)
            m = self.term({}, t, max_depth)
            if surface_depth(m) <= max_depth:
                return m, t

    def random_type(self, depth: int = 2) -> Type:
        rng = self.rng
        if depth <= 0 or rng.random() < 0.4:
            return rng.choice(SMALL)
        match rng.randrange(3):
            case 0:
                return Prod(self.random_type(depth - 1), self.random_type(depth - 1))
            case 1:
                return Sum(self.random_type(depth - 1), self.random_type(depth - 1))
        return Arrow(self.random_type(depth - 1), self.random_type(depth - 1))


def random_dfa(rng: random.Random, alphabet=("a", "b"), max_states: int = 3) -> Dfa:
    """A deterministic, possibly partial automaton in which every state is final."""
    n = rng.randint(1, max_states)
    states = [f"q{i}" for i in range(n)]
    trans = set()
    for q in states:
        for a in alphabet:
            if rng.random() < 0.7:
                trans.add((q, a, rng.choice(states)))
    return Dfa(frozenset(states), frozenset(alphabet), frozenset(trans), "q0", frozenset(states))


def is_ground_program_type(t: Type) -> bool:
    return is_ground(t)


class FormulaGen:
    """Closed answer-typed formulas over one instance: connectives and quantifiers for
    traces, weight arithmetic for costs, modalities with case-splitting resumptions."""

    def __init__(self, rng: random.Random, instance: str):
        from wpcps import logic as L

        self.L = L
        self.rng = rng
        self.instance = instance
        self.names = itertools.count()

    def fresh(self, base: str = "y") -> str:
        return f"{base}{next(self.names)}"

    def bool_value(self, ctx: list[str]):
        L = self.L
        if ctx and self.rng.random() < 0.6:
            return L.Var(self.rng.choice(ctx))
        return L.Inj(self.rng.choice((1, 2)), UNIT, L.UNIT_VAL)

    def split(self, ctx, d):
        """``\\x:bool. case x of inl _ -> A | inr _ -> B``"""
        L = self.L
        x, u1, u2 = self.fresh(), self.fresh(), self.fresh()
        return L.Lam(x, BOOL, L.Case(L.Var(x), u1, self.formula(ctx, d - 1), u2, self.formula(ctx, d - 1)))

    def formula(self, ctx: list[str], d: int):
        L, rng = self.L, self.rng
        trace = self.instance == "trace"
        if d <= 1 or rng.random() < 0.15:
            if trace:
                return rng.choice([L.TRUE, L.TRUE, L.FALSE])
            return L.WeightLit(rng.choice([0.0, 0.5, 1.0, 2.0, 3.0, math.inf]))
        form = rng.randrange(6)
        match form:
            case 0:
                if trace:
                    return rng.choice([L.And, L.Or])(self.formula(ctx, d - 1), self.formula(ctx, d - 1))
                return rng.choice([L.Add, L.Mul])(self.formula(ctx, d - 1), self.formula(ctx, d - 1))
            case 1:
                u = self.fresh()
                if trace:
                    name = f"event[{rng.choice('ab')}]"
                    return L.Modal(name, L.Pair(L.Lam(u, UNIT, self.formula(ctx, d - 1)), L.UNIT_VAL))
                return L.Modal("tick", L.Pair(L.Lam(u, UNIT, self.formula(ctx, d - 1)), L.UNIT_VAL))
            case 2:
                name = "choice" if trace else f"flip[{rng.choice(PROBS)}]"
                return L.Modal(name, L.Pair(self.split(ctx, d), L.UNIT_VAL))
            case 3:
                x = self.fresh()
                return L.App(L.Lam(x, BOOL, self.formula([*ctx, x], d - 1)), self.bool_value(ctx))
            case 4:
                u1, u2 = self.fresh(), self.fresh()
                return L.Case(self.bool_value(ctx), u1, self.formula(ctx, d - 1), u2, self.formula(ctx, d - 1))
        if trace:
            x = self.fresh()
            return rng.choice([L.Forall, L.Exists])(x, BOOL, self.formula([*ctx, x], d - 1))
        return self.recursion(ctx, d)

    def recursion(self, ctx, d):
        """``letrec f x = op(A, f ...) in f v`` over a boolean argument."""
        L = self.L
        f, x, u = self.fresh("f"), self.fresh(), self.fresh()
        call = L.App(L.Var(f), self.bool_value([x]))
        base = self.formula(ctx, d - 2)
        if self.instance == "trace":
            name = f"event[{self.rng.choice('ab')}]"
            step = L.Modal(name, L.Pair(L.Lam(u, UNIT, call), L.UNIT_VAL))
            body = self.rng.choice([L.And, L.Or])(base, step)
        else:
            body = L.Modal(f"flip[{self.rng.choice(PROBS)}]",
                           L.Pair(L.Lam(u, BOOL, L.Case(L.Var(u), self.fresh(), base, self.fresh(),
                                                        L.Add(L.WeightLit(1.0), call))), L.UNIT_VAL))
        return L.LetRecPred(f, x, BOOL, body, L.App(L.Var(f), self.bool_value(ctx)))
