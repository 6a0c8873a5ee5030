"""Parser for the program syntax.

    term    ::= "fun" ident ":" type "." term
              | "letrec" ident ident "=" term "in" term
              | "case" term "of" "inl" ident "->" term "|" "inr" ident "->" term
              | "absurd" term | appterm
    appterm ::= appterm atom | atom
    atom    ::= ident | "()" | "(" term "," term ")" | "fst" atom | "snd" atom
              | "inl" "[" type "]" atom | "inr" "[" type "]" atom
              | ident "(" term {"," term} ")"
              | ident "[" literal "]" "(" term {"," term} ")"
              | "(" term ")"
    type    ::= "unit" | "empty" | ident | type "*" type | type "+" type | type "->" type

Binders are renamed apart while parsing and the n-ary operation notation is
expanded into a plain operation node.
"""

from __future__ import annotations

from .errors import ParseError, SignatureError, UnknownIdentifier
from .lexer import Token, TokenStream
from .signature import Signature
from .source import (
    UNIT_VAL, Absurd, App, Case, Const, Inj, Lam, LetRec, Op, Pair, Proj, Term, Var,
)
from .types import ANSWER, EMPTY, UNIT, Base, PredArrow, Arrow, Prod, Sum, Type, underline

KEYWORDS = frozenset({"fun", "letrec", "in", "case", "of", "inl", "inr", "absurd", "fst", "snd", "unit", "empty"})


def parse_type_tokens(ts: TokenStream, target: bool = False) -> Type:
    left = _sum_type(ts, target)
    if ts.accept("->"):
        cod = parse_type_tokens(ts, target)
        if target:
            if cod != ANSWER:
                ts.fail("arrow types must have codomain R")
            return PredArrow(left)
        return Arrow(left, cod)
    return left


def _sum_type(ts: TokenStream, target: bool) -> Type:
    t = _prod_type(ts, target)
    while ts.accept("+"):
        t = Sum(t, _prod_type(ts, target))
    return t


def _prod_type(ts: TokenStream, target: bool) -> Type:
    t = _atom_type(ts, target)
    while ts.accept("*"):
        t = Prod(t, _atom_type(ts, target))
    return t


def _atom_type(ts: TokenStream, target: bool) -> Type:
    tok = ts.peek
    if ts.accept("("):
        t = parse_type_tokens(ts, target)
        ts.expect(")")
        return t
    if tok.kind == "num" and tok.text in ("0", "1"):
        ts.next()
        return EMPTY if tok.text == "0" else UNIT
    if tok.kind == "ident":
        ts.next()
        if tok.text == "unit":
            return UNIT
        if tok.text == "empty":
            return EMPTY
        if target and tok.text == "R":
            return ANSWER
        if tok.text in KEYWORDS:
            ts.fail("expected type", tok)
        return Base(tok.text)
    ts.fail("expected type")


def parse_type(text: str, target: bool = False) -> Type:
    ts = TokenStream(text)
    t = parse_type_tokens(ts, target)
    ts.done()
    return t


class _ProgramParser:
    def __init__(self, text: str, sig: Signature):
        self.ts = TokenStream(text)
        self.sig = sig
        self.counter = 0
        self.scope: dict[str, str] = {}

    def fresh(self, base: str) -> str:
        name = f"{base}_{self.counter}"
        self.counter += 1
        return name

    def bind(self, name: str) -> tuple[str, str | None]:
        new = self.fresh(name)
        old = self.scope.get(name)
        self.scope[name] = new
        return new, old

    def unbind(self, name: str, old: str | None):
        if old is None:
            del self.scope[name]
        else:
            self.scope[name] = old

    def term(self) -> Term:
        ts = self.ts
        if ts.accept("fun") or ts.accept("λ") or ts.accept("\\"):
            x = ts.ident(KEYWORDS).text
            ts.expect(":")
            ty = parse_type_tokens(ts)
            ts.expect(".")
            new, old = self.bind(x)
            body = self.term()
            self.unbind(x, old)
            return Lam(new, ty, body)
        if ts.accept("letrec"):
            f = ts.ident(KEYWORDS).text
            x = ts.ident(KEYWORDS).text
            ts.expect("=")
            fnew, fold = self.bind(f)
            xnew, xold = self.bind(x)
            body = self.term()
            self.unbind(x, xold)
            ts.expect("in")
            rest = self.term()
            self.unbind(f, fold)
            return LetRec(fnew, xnew, None, None, body, rest)
        if ts.accept("case"):
            scrut = self.term()
            ts.expect("of")
            ts.expect("inl")
            x1 = ts.ident(KEYWORDS).text
            ts.expect("->")
            n1, o1 = self.bind(x1)
            b1 = self.term()
            self.unbind(x1, o1)
            ts.expect("|")
            ts.expect("inr")
            x2 = ts.ident(KEYWORDS).text
            ts.expect("->")
            n2, o2 = self.bind(x2)
            b2 = self.term()
            self.unbind(x2, o2)
            return Case(scrut, n1, b1, n2, b2)
        if ts.accept("absurd"):
            return Absurd(self.term())
        return self.appterm()

    def starts_atom(self) -> bool:
        tok = self.ts.peek
        if tok.kind == "ident":
            return tok.text not in KEYWORDS or tok.text in ("fst", "snd", "inl", "inr")
        return tok.kind == "punct" and tok.text == "("

    def appterm(self) -> Term:
        t = self.atom()
        while self.starts_atom():
            t = App(t, self.atom())
        return t

    def atom(self) -> Term:
        ts = self.ts
        tok = ts.peek
        if ts.accept("("):
            if ts.accept(")"):
                return UNIT_VAL
            a = self.term()
            if ts.accept(","):
                b = self.term()
                ts.expect(")")
                return Pair(a, b)
            ts.expect(")")
            return a
        if ts.accept("fst"):
            return Proj(1, self.atom())
        if ts.accept("snd"):
            return Proj(2, self.atom())
        if ts.at("inl") or ts.at("inr"):
            index = 1 if ts.next().text == "inl" else 2
            ts.expect("[")
            other = parse_type_tokens(ts)
            ts.expect("]")
            return Inj(index, other, self.atom())
        if tok.kind != "ident" or tok.text in KEYWORDS:
            ts.fail("expected term")
        ts.next()
        name = tok.text
        if name in self.scope:
            return Var(self.scope[name])
        if ts.at("[") and name in self.sig.operations:
            ts.next()
            lit = ts.next()
            if lit.kind not in ("num", "ident"):
                ts.fail("expected index literal", lit)
            ts.expect("]")
            return self.operation(f"{name}[{lit.text}]", tok)
        if ts.at("(") and name in self.sig.operations:
            return self.operation(name, tok)
        if ts.at("(") and name in self.sig.constants:
            args = self.arguments()
            arg = args[-1]
            for a in reversed(args[:-1]):
                arg = Pair(a, arg)
            return Const(name, arg)
        raise UnknownIdentifier(f"unknown identifier {name!r}", tok.line, tok.col)

    def arguments(self) -> list[Term]:
        ts = self.ts
        ts.expect("(")
        if ts.at(")"):
            ts.fail("expected term")
        args = [self.term()]
        while ts.accept(","):
            args.append(self.term())
        ts.expect(")")
        return args

    def operation(self, name: str, tok: Token) -> Term:
        try:
            decl = self.sig.operation(name)
        except SignatureError as e:
            raise ParseError(str(e), tok.line, tok.col) from None
        args = self.arguments()
        if decl.nary is None:
            if len(args) != 1:
                raise ParseError(f"operation {name} is not declared n-ary; pass a single argument",
                                 tok.line, tok.col)
            return Op(name, None, args[0])
        if len(args) != decl.nary:
            raise ParseError(f"operation {name} takes {decl.nary} argument(s), got {len(args)}",
                             tok.line, tok.col)
        x = self.fresh("u")
        return Op(name, None, Pair(Lam(x, underline(decl.nary), self.branches(x, args)), UNIT_VAL))

    def branches(self, x: str, args: list[Term]) -> Term:
        # delta(x, x1. M1, ..., xn. Mn) for the left-nested finite coproduct
        if len(args) == 1:
            return args[0]
        inner = self.fresh("u")
        last = self.fresh("u")
        return Case(Var(x), inner, self.branches(inner, args[:-1]), last, args[-1])


def parse_program(text: str, sig: Signature) -> Term:
    p = _ProgramParser(text, sig)
    t = p.term()
    p.ts.done()
    return t
