"""Typechecking for the source calculus.

Lambda binders and injections carry explicit types; letrec types, operation
result types and the target type of ``absurd`` are inferred by first-order
unification.  Anything left undetermined after inference defaults to unit.
"""

from __future__ import annotations

from .errors import SignatureError, TypeMismatch, UnboundVariable
from .signature import Signature
from .source import (
    Absurd, App, Case, Const, Inj, Lam, LetRec, Op, Pair, Proj, Term, UnitVal, Var,
)
from .types import EMPTY, UNIT, Arrow, Meta, Prod, Sum, Type, base_names

TypingContext = list[tuple[str, Type]]


class _Inference:
    def __init__(self, sig: Signature):
        self.sig = sig
        self.subst: dict[int, Type] = {}
        self.next_meta = 0

    def fresh(self) -> Meta:
        m = Meta(self.next_meta)
        self.next_meta += 1
        return m

    def resolve(self, t: Type) -> Type:
        while isinstance(t, Meta) and t.ident in self.subst:
            t = self.subst[t.ident]
        return t

    def zonk(self, t: Type, default: Type | None = None) -> Type:
        t = self.resolve(t)
        match t:
            case Meta():
                return t if default is None else default
            case Prod(l, r):
                return Prod(self.zonk(l, default), self.zonk(r, default))
            case Sum(l, r):
                return Sum(self.zonk(l, default), self.zonk(r, default))
            case Arrow(l, r):
                return Arrow(self.zonk(l, default), self.zonk(r, default))
        return t

    def occurs(self, m: Meta, t: Type) -> bool:
        t = self.resolve(t)
        match t:
            case Meta(i):
                return i == m.ident
            case Prod(l, r) | Sum(l, r) | Arrow(l, r):
                return self.occurs(m, l) or self.occurs(m, r)
        return False

    def unify(self, expected: Type, found: Type, path: tuple[str, ...]):
        a, b = self.resolve(expected), self.resolve(found)
        if a == b:
            return
        if isinstance(a, Meta) or isinstance(b, Meta):
            m, t = (a, b) if isinstance(a, Meta) else (b, a)
            if self.occurs(m, t):
                raise TypeMismatch("infinite type", self.zonk(expected), self.zonk(found), path)
            self.subst[m.ident] = t
            return
        if type(a) is type(b) and isinstance(a, (Prod, Sum, Arrow)):
            try:
                self.unify(a.left if not isinstance(a, Arrow) else a.dom,
                           b.left if not isinstance(b, Arrow) else b.dom, path)
                self.unify(a.right if not isinstance(a, Arrow) else a.cod,
                           b.right if not isinstance(b, Arrow) else b.cod, path)
            except TypeMismatch:
                raise TypeMismatch("type mismatch", self.zonk(expected), self.zonk(found), path) from None
            return
        raise TypeMismatch("type mismatch", self.zonk(expected), self.zonk(found), path)

    def check_type(self, t: Type, path):
        unknown = base_names(t) - self.sig.base_types
        if unknown:
            raise TypeMismatch(f"undeclared base type(s) {sorted(unknown)}", path=path)

    def infer(self, ctx: dict[str, Type], t: Term, path: tuple[str, ...]) -> tuple[Type, Term]:
        """Infer a type for ``t``; also returns ``t`` with annotations set to (possibly meta) types."""
        match t:
            case Var(x):
                if x not in ctx:
                    raise UnboundVariable(f"unbound variable {x}", path=path)
                return ctx[x], t
            case UnitVal():
                return UNIT, t
            case Const(c, a):
                try:
                    decl = self.sig.constant(c)
                except SignatureError as e:
                    raise TypeMismatch(str(e), path=path) from None
                ta, a2 = self.infer(ctx, a, path + (c,))
                self.unify(decl.ar, ta, path + (c,))
                return decl.car, Const(c, a2)
            case Op(o, rtype, a):
                try:
                    decl = self.sig.operation(o)
                except SignatureError as e:
                    raise TypeMismatch(str(e), path=path) from None
                if rtype is not None:
                    self.check_type(rtype, path)
                rho = rtype if rtype is not None else self.fresh()
                ta, a2 = self.infer(ctx, a, path + (o,))
                self.unify(Prod(Arrow(decl.ar, rho), decl.car), ta, path + (o,))
                return rho, Op(o, rho, a2)
            case Pair(a, b):
                ta, a2 = self.infer(ctx, a, path + ("fst",))
                tb, b2 = self.infer(ctx, b, path + ("snd",))
                return Prod(ta, tb), Pair(a2, b2)
            case Proj(i, a):
                l, r = self.fresh(), self.fresh()
                ta, a2 = self.infer(ctx, a, path + (f"proj{i}",))
                self.unify(Prod(l, r), ta, path + (f"proj{i}",))
                return (l if i == 1 else r), Proj(i, a2)
            case Absurd(a, ty):
                ta, a2 = self.infer(ctx, a, path + ("absurd",))
                self.unify(EMPTY, ta, path + ("absurd",))
                if ty is not None:
                    self.check_type(ty, path)
                res = ty if ty is not None else self.fresh()
                return res, Absurd(a2, res)
            case Inj(i, other, a):
                self.check_type(other, path)
                inner, a2 = self.infer(ctx, a, path + (f"inj{i}",))
                return (Sum(inner, other) if i == 1 else Sum(other, inner)), Inj(i, other, a2)
            case Case(s, x1, b1, x2, b2):
                l, r = self.fresh(), self.fresh()
                ts_, s2 = self.infer(ctx, s, path + ("case",))
                self.unify(Sum(l, r), ts_, path + ("case",))
                t1, c1 = self.infer({**ctx, x1: l}, b1, path + ("inl",))
                t2, c2 = self.infer({**ctx, x2: r}, b2, path + ("inr",))
                self.unify(t1, t2, path + ("inr",))
                return t1, Case(s2, x1, c1, x2, c2)
            case Lam(x, ty, body):
                self.check_type(ty, path)
                tb, body2 = self.infer({**ctx, x: ty}, body, path + (f"fun {x}",))
                return Arrow(ty, tb), Lam(x, ty, body2)
            case App(f, a):
                tf, f2 = self.infer(ctx, f, path + ("fn",))
                ta, a2 = self.infer(ctx, a, path + ("arg",))
                resolved = self.resolve(tf)
                if isinstance(resolved, Arrow):
                    self.unify(resolved.dom, ta, path + ("arg",))
                    return resolved.cod, App(f2, a2)
                if not isinstance(resolved, Meta):
                    raise TypeMismatch("applying a non-function", "a function type",
                                       self.zonk(tf), path + ("fn",))
                r = self.fresh()
                self.unify(tf, Arrow(ta, r), path + ("fn",))
                return r, App(f2, a2)
            case LetRec(f, x, dom, cod, body, rest):
                for ann in (dom, cod):
                    if ann is not None:
                        self.check_type(ann, path)
                d = dom if dom is not None else self.fresh()
                c = cod if cod is not None else self.fresh()
                fty = Arrow(d, c)
                tb, body2 = self.infer({**ctx, f: fty, x: d}, body, path + (f"letrec {f}",))
                self.unify(c, tb, path + (f"letrec {f}",))
                tr, rest2 = self.infer({**ctx, f: fty}, rest, path + ("in",))
                return tr, LetRec(f, x, d, c, body2, rest2)
        raise TypeError(f"not a source term: {t!r}")

    def fill(self, t: Term) -> Term:
        """Replace solved metas in annotations; unsolved ones default to unit."""
        z = lambda ty: self.zonk(ty, UNIT)  # noqa: E731
        match t:
            case Var() | UnitVal():
                return t
            case Const(c, a):
                return Const(c, self.fill(a))
            case Op(o, r, a):
                return Op(o, z(r), self.fill(a))
            case Pair(a, b):
                return Pair(self.fill(a), self.fill(b))
            case Proj(i, a):
                return Proj(i, self.fill(a))
            case Absurd(a, ty):
                return Absurd(self.fill(a), z(ty))
            case Inj(i, o, a):
                return Inj(i, o, self.fill(a))
            case Case(s, x1, b1, x2, b2):
                return Case(self.fill(s), x1, self.fill(b1), x2, self.fill(b2))
            case Lam(x, ty, b):
                return Lam(x, ty, self.fill(b))
            case App(f, a):
                return App(self.fill(f), self.fill(a))
            case LetRec(f, x, dom, cod, body, rest):
                return LetRec(f, x, z(dom), z(cod), self.fill(body), self.fill(rest))
        raise TypeError(f"not a source term: {t!r}")


def elaborate(sig: Signature, ctx: TypingContext, term: Term) -> tuple[Term, Type]:
    """Typecheck ``term`` and return it with every inferred annotation filled in, plus its type."""
    names = [n for n, _ in ctx]
    if len(set(names)) != len(names):
        raise TypeMismatch("typing context binds a variable twice")
    inf = _Inference(sig)
    for _, ty in ctx:
        inf.check_type(ty, ())
    ty, annotated = inf.infer(dict(ctx), term, ())
    return inf.fill(annotated), inf.zonk(ty, UNIT)


def typecheck(sig: Signature, ctx: TypingContext, term: Term) -> Type:
    """Return the type of ``term`` in ``ctx``; raises TypeMismatch on ill-typed input."""
    return elaborate(sig, ctx, term)[1]
