"""Parser for the concrete formula syntax produced by :func:`logic.pretty_print`.

    formula ::= "\\" binder "." formula
              | ("forall" | "exists") ident ":" type "." formula
              | "letrec" ident recbinder "=" formula "in" formula
              | "case" formula "of" "inl" ident "->" formula "|" "inr" ident "->" formula
              | "absurd" formula | implies
    binder    ::= ident [":" type] | "(" ident "," ident ")" [":" type]
    recbinder ::= ident | "(" ident ":" type ")" | "(" ident "," ident ")"
                | "(" "(" ident "," ident ")" ":" type ")"
    implies ::= or ["=>" implies]
    or      ::= and {"||" and}
    and     ::= sum {"&&" sum}
    sum     ::= prod {"+" prod}
    prod    ::= app {"*" app}
    app     ::= atom {atom}
    atom    ::= ident | number | "inf" | "true" | "false" | "()" | "(" formula ")"
              | "(" formula "," formula ")" | "fst" atom | "snd" atom
              | ("inl" | "inr") ["[" type "]"] atom
              | "<" symbol ">" "(" formula ["," formula] ")"
              | op ["[" literal "]"] "{" formula ["," formula] "}"
              | const "(" formula {"," formula} ")"

Binder types may be omitted; such formulas can be compared with
``alpha_equiv(..., types=False)`` but do not typecheck.  A pattern binder
``(x, y)`` abbreviates a fresh ``z`` with ``x := fst z`` and ``y := snd z``.
"""

from __future__ import annotations

from collections import Counter

from .errors import ParseError
from .lexer import TokenStream
from .logic import (
    FALSE, TRUE, UNIT_VAL, Absurd, Add, And, App, Case, Const, Exists, Forall, Formula, Implies, Inj,
    Lam, LetRecPred, Modal, Mul, Or, Pair, Proj, Var, WeightLit, fresh_name, substitute_many,
)
from .parser import parse_type_tokens
from .signature import Signature
from .types import Type

KEYWORDS = frozenset({"letrec", "in", "case", "of", "inl", "inr", "absurd", "fst", "snd",
                      "true", "false", "forall", "exists", "inf"})


class _FormulaParser:
    def __init__(self, text: str, sig: Signature | None):
        self.ts = TokenStream(text)
        self.constants = set(sig.constants) if sig else set()
        self.bound: Counter[str] = Counter()

    def scoped(self, names, parse):
        for n in names:
            self.bound[n] += 1
        try:
            return parse()
        finally:
            for n in names:
                self.bound[n] -= 1

    def name(self) -> str:
        return self.ts.ident(KEYWORDS).text

    def opt_type(self) -> Type | None:
        return parse_type_tokens(self.ts, target=True) if self.ts.accept(":") else None

    def binder(self):
        """``x`` or ``(x, y)``, returning (names, is_pattern)."""
        ts = self.ts
        if ts.accept("("):
            a = self.name()
            ts.expect(",")
            b = self.name()
            ts.expect(")")
            if a == b:
                ts.fail("pattern binds the same name twice")
            return (a, b), True
        return (self.name(),), False

    @staticmethod
    def close(names, pattern, body):
        """Turn a body using ``names`` into (binder, body, hint)."""
        if not pattern:
            return names[0], body, None
        z = fresh_name("p")
        body = substitute_many(body, {names[0]: Proj(1, Var(z)), names[1]: Proj(2, Var(z))})
        return z, body, names

    def formula(self) -> Formula:
        ts = self.ts
        if ts.accept("\\") or ts.accept("λ"):
            names, pattern = self.binder()
            ty = self.opt_type()
            ts.expect(".")
            body = self.scoped(names, self.formula)
            var, body, hint = self.close(names, pattern, body)
            return Lam(var, ty, body, hint)
        for word, node in (("forall", Forall), ("exists", Exists)):
            if ts.accept(word):
                x = self.name()
                ts.expect(":")
                ty = parse_type_tokens(ts, target=True)
                ts.expect(".")
                return node(x, ty, self.scoped([x], self.formula))
        if ts.accept("letrec"):
            f = self.name()
            names, pattern, ty = self.rec_binder()
            ts.expect("=")
            body = self.scoped([f, *names], self.formula)
            ts.expect("in")
            rest = self.scoped([f], self.formula)
            var, body, hint = self.close(names, pattern, body)
            return LetRecPred(f, var, ty, body, rest, hint)
        if ts.accept("case"):
            scrut = self.formula()
            ts.expect("of")
            ts.expect("inl")
            x1 = self.name()
            ts.expect("->")
            b1 = self.scoped([x1], self.formula)
            ts.expect("|")
            ts.expect("inr")
            x2 = self.name()
            ts.expect("->")
            b2 = self.scoped([x2], self.formula)
            return Case(scrut, x1, b1, x2, b2)
        if ts.accept("absurd"):
            return Absurd(self.formula())
        return self.implies()

    def rec_binder(self):
        ts = self.ts
        if ts.at("(") and ts.lookahead().text == "(":
            ts.expect("(")
            names, pattern = self.binder()
            ts.expect(":")
            ty = parse_type_tokens(ts, target=True)
            ts.expect(")")
            return names, pattern, ty
        if ts.at("(") and ts.lookahead(2).text == ":":
            ts.expect("(")
            x = self.name()
            ts.expect(":")
            ty = parse_type_tokens(ts, target=True)
            ts.expect(")")
            return (x,), False, ty
        names, pattern = self.binder()
        return names, pattern, None

    def implies(self) -> Formula:
        left = self.disj()
        if self.ts.accept("=>"):
            return Implies(left, self.implies())
        return left

    def disj(self) -> Formula:
        t = self.conj()
        while self.ts.accept("||"):
            t = Or(t, self.conj())
        return t

    def conj(self) -> Formula:
        t = self.plus()
        while self.ts.accept("&&"):
            t = And(t, self.plus())
        return t

    def plus(self) -> Formula:
        t = self.times()
        while self.ts.accept("+"):
            t = Add(t, self.times())
        return t

    def times(self) -> Formula:
        t = self.app()
        while self.ts.accept("*"):
            t = Mul(t, self.app())
        return t

    def starts_atom(self) -> bool:
        tok = self.ts.peek
        if tok.kind == "ident":
            return tok.text not in KEYWORDS or tok.text in ("fst", "snd", "inl", "inr", "true", "false", "inf")
        if tok.kind == "num":
            return True
        return tok.kind == "punct" and tok.text in ("(", "<")

    def app(self) -> Formula:
        t = self.atom()
        while self.starts_atom():
            t = App(t, self.atom())
        return t

    def atom(self) -> Formula:
        ts = self.ts
        tok = ts.peek
        if ts.accept("("):
            if ts.accept(")"):
                return UNIT_VAL
            a = self.formula()
            if ts.accept(","):
                b = self.formula()
                ts.expect(")")
                return Pair(a, b)
            ts.expect(")")
            return a
        if tok.kind == "num":
            ts.next()
            return WeightLit(float(tok.text))
        if ts.accept("<"):
            sym = ts.next()
            if sym.kind not in ("ident", "num"):
                ts.fail("expected event symbol", sym)
            ts.expect(">")
            ts.expect("(")
            arg = self.modal_arg(")")
            return Modal(f"event[{sym.text}]", arg)
        if tok.kind != "ident":
            ts.fail("expected formula")
        ts.next()
        match tok.text:
            case "true":
                return TRUE
            case "false":
                return FALSE
            case "inf":
                return WeightLit(float("inf"))
            case "fst" | "snd":
                return Proj(1 if tok.text == "fst" else 2, self.atom())
            case "inl" | "inr":
                other = None
                if ts.accept("["):
                    other = parse_type_tokens(ts, target=True)
                    ts.expect("]")
                return Inj(1 if tok.text == "inl" else 2, other, self.atom())
        if tok.text in KEYWORDS:
            ts.fail("expected formula", tok)
        name = tok.text
        if self.bound[name]:
            return Var(name)
        if ts.at("[") or ts.at("{"):
            if ts.accept("["):
                lit = ts.next()
                if lit.kind not in ("num", "ident"):
                    ts.fail("expected index literal", lit)
                ts.expect("]")
                name = f"{name}[{lit.text}]"
            ts.expect("{")
            return Modal(name, self.modal_arg("}"))
        if name in self.constants and ts.at("("):
            ts.expect("(")
            args = [self.formula()]
            while ts.accept(","):
                args.append(self.formula())
            ts.expect(")")
            arg = args[-1]
            for a in reversed(args[:-1]):
                arg = Pair(a, arg)
            return Const(name, arg)
        return Var(name)

    def modal_arg(self, close: str) -> Formula:
        a = self.formula()
        if self.ts.accept(","):
            b = self.formula()
            self.ts.expect(close)
            return Pair(a, b)
        self.ts.expect(close)
        return a


def parse_formula(text: str, sig: Signature | None = None) -> Formula:
    """Parse a formula; names declared as constants in ``sig`` parse as constant applications."""
    p = _FormulaParser(text, sig)
    t = p.formula()
    p.ts.done()
    return t


__all__ = ["parse_formula", "ParseError"]
