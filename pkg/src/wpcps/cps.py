"""CPS translation from source programs to formulas, and the instance rewrites
that replace modal operators by connectives or weight arithmetic."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from . import logic as L
from . import source as S
from .signature import Signature, split_indexed
from .typecheck import TypingContext, elaborate
from .types import UNIT, Arrow, PredArrow, Prod, Sum, Type, underline


@dataclass(frozen=True)
class CpsOutput:
    term: L.Formula
    type: Type  # (rho' -> R) -> R where rho' is the translated source type
    source_type: Type


def cps_type(t: Type) -> Type:
    match t:
        case Prod(l, r):
            return Prod(cps_type(l), cps_type(r))
        case Sum(l, r):
            return Sum(cps_type(l), cps_type(r))
        case Arrow(d, c):
            return PredArrow(Prod(cps_type(d), PredArrow(cps_type(c))))
    return t


def computation_type(t: Type) -> Type:
    """``(t' -> R) -> R``: the type of the translation of a term of type ``t``."""
    return PredArrow(PredArrow(cps_type(t)))


class _Translator:
    def __init__(self, sig: Signature):
        self.sig = sig
        self.counter = itertools.count()

    def fresh(self, base: str) -> str:
        return f"{base}{next(self.counter)}"

    @staticmethod
    def lam_k(k: str, ty: Type, body: L.Formula) -> L.Lam:
        """``\\k:(ty' -> R). body``"""
        return L.Lam(k, PredArrow(cps_type(ty)), body)

    def then(self, comp: L.Formula, ty: Type, body) -> L.Formula:
        """``comp (\\m:ty'. body(m))``"""
        m = self.fresh("m")
        return L.App(comp, L.Lam(m, cps_type(ty), body(L.Var(m))))

    def go(self, ctx: dict[str, Type], t: S.Term) -> tuple[L.Formula, Type]:
        if isinstance(t, S.LetRec):
            return self.letrec(ctx, t)
        # binder names are drawn in reading order of the output, outermost first
        k = self.fresh("k")
        kv = L.Var(k)
        match t:
            case S.Var(x):
                ty = ctx[x]
                return self.lam_k(k, ty, L.App(kv, L.Var(x))), ty
            case S.UnitVal():
                return self.lam_k(k, UNIT, L.App(kv, L.UNIT_VAL)), UNIT
            case S.Const(c, a):
                decl = self.sig.constant(c)
                ma, _ = self.go(ctx, a)
                return self.lam_k(k, decl.car, self.then(ma, decl.ar, lambda m: L.App(kv, L.Const(c, m)))), decl.car
            case S.Op(o, rho, a):
                decl = self.sig.operation(o)
                ma, ta = self.go(ctx, a)
                w, x = self.fresh("w"), self.fresh("x")
                resume = L.Lam(x, decl.ar, L.App(L.Proj(1, L.Var(w)), L.Pair(L.Var(x), kv)))
                modal = L.Modal(o, L.Pair(resume, L.Proj(2, L.Var(w))))
                body = L.App(ma, L.Lam(w, cps_type(ta), modal, (f"{w}_1", f"{w}_2")))
                return self.lam_k(k, rho, body), rho
            case S.Pair(a, b):
                ma, ta = self.go(ctx, a)
                mb, tb = self.go(ctx, b)
                ty = Prod(ta, tb)
                return self.lam_k(k, ty, self.then(
                    ma, ta, lambda m1: self.then(mb, tb, lambda m2: L.App(kv, L.Pair(m1, m2))))), ty
            case S.Proj(i, a):
                ma, ta = self.go(ctx, a)
                ty = ta.left if i == 1 else ta.right
                return self.lam_k(k, ty, self.then(ma, ta, lambda m: L.App(kv, L.Proj(i, m)))), ty
            case S.Absurd(a, ty):
                ma, ta = self.go(ctx, a)
                return self.lam_k(k, ty, self.then(ma, ta, lambda m: L.Absurd(m))), ty
            case S.Inj(i, other, a):
                ma, ta = self.go(ctx, a)
                ty = Sum(ta, other) if i == 1 else Sum(other, ta)
                other_c = cps_type(other)
                return self.lam_k(k, ty, self.then(ma, ta, lambda m: L.App(kv, L.Inj(i, other_c, m)))), ty
            case S.Case(s, x1, b1, x2, b2):
                ms, ts_ = self.go(ctx, s)
                m1, ty = self.go({**ctx, x1: ts_.left}, b1)
                m2, _ = self.go({**ctx, x2: ts_.right}, b2)
                return self.lam_k(k, ty, self.then(
                    ms, ts_, lambda m: L.Case(m, x1, L.App(m1, kv), x2, L.App(m2, kv)))), ty
            case S.Lam(x, dom, body):
                h, z = self.fresh("k"), self.fresh("z")
                mb, cod = self.go({**ctx, x: dom}, body)
                ty = Arrow(dom, cod)
                # \(x, h). [[body]] h  expanded to  \z. [[body]][fst z/x] (snd z)
                inner = L.substitute_many(L.App(mb, L.Var(h)), {x: L.Proj(1, L.Var(z)), h: L.Proj(2, L.Var(z))})
                fn = L.Lam(z, Prod(cps_type(dom), PredArrow(cps_type(cod))), inner, (x, h))
                return self.lam_k(k, ty, L.App(kv, fn)), ty
            case S.App(f, a):
                mf, tf = self.go(ctx, f)
                ma, ta = self.go(ctx, a)
                cod = tf.cod
                return self.lam_k(k, cod, self.then(
                    mf, tf, lambda m: self.then(ma, ta, lambda n: L.App(m, L.Pair(n, kv))))), cod
        raise TypeError(f"not a source term: {t!r}")

    def letrec(self, ctx: dict[str, Type], t: S.LetRec) -> tuple[L.Formula, Type]:
        # letrec f (x, k) = [[body]] k in [[rest]]
        f, x, dom, cod = t.fname, t.var, t.dom, t.cod
        fty = Arrow(dom, cod)
        k, z = self.fresh("k"), self.fresh("z")
        mb, _ = self.go({**ctx, f: fty, x: dom}, t.body)
        mr, ty = self.go({**ctx, f: fty}, t.rest)
        inner = L.substitute_many(L.App(mb, L.Var(k)), {x: L.Proj(1, L.Var(z)), k: L.Proj(2, L.Var(z))})
        arg_ty = Prod(cps_type(dom), PredArrow(cps_type(cod)))
        return L.LetRecPred(f, z, arg_ty, inner, mr, (x, k)), ty


def cps_term(sig: Signature, term: S.Term, ctx: TypingContext = ()) -> CpsOutput:
    """Translate a well-typed program; the continuation binders are named k0, k1, ... in order."""
    filled, ty = elaborate(sig, list(ctx), term)
    env = {x: t for x, t in ctx}
    out, ty2 = _Translator(sig).go(env, filled)
    assert ty2 == ty, (ty2, ty)
    return CpsOutput(out, computation_type(ty), ty)


def cps_context(ctx: TypingContext) -> list[tuple[str, Type]]:
    return [(x, cps_type(t)) for x, t in ctx]


# ---------------------------------------------------------------- instance rewrites

def finite_elements(n: int) -> list[L.Formula]:
    """Closed formulas for the ``n`` elements of the finite type with ``n`` elements."""
    if n == 1:
        return [L.UNIT_VAL]
    smaller = finite_elements(n - 1)
    return [L.Inj(1, UNIT, e) for e in smaller] + [L.Inj(2, underline(n - 1), L.UNIT_VAL)]


def _reduce_head(t: L.Formula) -> L.Formula:
    # contract the redexes created by plugging a concrete branch into a case-splitting lambda
    while True:
        match t:
            case L.App(L.Lam(x, _, body), v):
                t = L.substitute(body, x, v)
            case L.Case(L.Inj(i, _, v), x1, b1, x2, b2):
                t = L.substitute(b1, x1, v) if i == 1 else L.substitute(b2, x2, v)
            case _:
                return t


def _branch(resume: L.Formula, value: L.Formula) -> L.Formula:
    return _reduce_head(L.App(resume, value))


def _resumption(arg: L.Formula) -> L.Formula:
    return arg.fst if isinstance(arg, L.Pair) else L.Proj(1, arg)


def _rewrite(term: L.Formula, rule) -> L.Formula:
    def go(t):
        match t:
            case L.Case(s, x1, b1, x2, b2):
                t = L.Case(go(s), x1, go(b1), x2, go(b2))
            case L.Lam(x, ty, b):
                t = L.Lam(x, ty, go(b), t.pattern)
            case L.Forall(x, ty, b) | L.Exists(x, ty, b):
                t = type(t)(x, ty, go(b))
            case L.LetRecPred(f, x, ty, body, rest):
                t = L.LetRecPred(f, x, ty, go(body), go(rest), t.pattern)
            case _:
                t = L.map_children(t, go)
        if isinstance(t, L.Modal):
            replaced = rule(t)
            if replaced is not None:
                return replaced
        return t
    return go(term)


def rewrite_trace(term: L.Formula) -> L.Formula:
    """Replace every binary ``choice`` modality by the conjunction of its two branches."""

    def rule(t: L.Modal):
        if t.name != "choice":
            return None
        k = _resumption(t.arg)
        left, right = (_branch(k, e) for e in finite_elements(2))
        return L.And(left, right)

    return _rewrite(term, rule)


def rewrite_cost(term: L.Formula) -> L.Formula:
    """``tick`` becomes ``1 + A`` and ``flip[p]`` becomes ``p * A + (1 - p) * B``; ``unif`` is kept."""

    def rule(t: L.Modal):
        family, index = split_indexed(t.name)
        k = _resumption(t.arg)
        if family == "tick" and index is None:
            return L.Add(L.WeightLit(1.0), _branch(k, L.UNIT_VAL))
        if family == "flip" and index is not None:
            p = float(index)
            left, right = (_branch(k, e) for e in finite_elements(2))
            return L.Add(L.Mul(L.WeightLit(p), left), L.Mul(L.WeightLit(1.0 - p), right))
        return None

    return _rewrite(term, rule)


REWRITES = {"trace": rewrite_trace, "cost": rewrite_cost}


def trace_formula(out: CpsOutput) -> L.Formula:
    """``[[M]] (\\_. true)``"""
    return L.App(out.term, L.Lam("r", cps_type(out.source_type), L.TRUE))


def cost_formula(out: CpsOutput) -> L.Formula:
    """``[[M]] (\\_. 0)``"""
    return L.App(out.term, L.Lam("r", cps_type(out.source_type), L.WeightLit(0.0)))


__all__ = ["CpsOutput", "cps_type", "cps_term", "computation_type", "rewrite_trace", "rewrite_cost",
           "trace_formula", "cost_formula", "finite_elements", "REWRITES"]
