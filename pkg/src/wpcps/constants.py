"""Denotations of the effect-free constants shipped with the built-in signatures.

Ground values are represented as: ``()`` for unit, 2-tuples for pairs,
:class:`InjVal` for injections, ``int`` for nat and ``float`` for real.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import EvaluationError


@dataclass(frozen=True)
class InjVal:
    index: int
    value: object

    def __repr__(self) -> str:
        return f"{'inl' if self.index == 1 else 'inr'}({self.value!r})"


TRUE_VAL = InjVal(1, ())
FALSE_VAL = InjVal(2, ())

DENOTATIONS = {
    "zero": lambda _: 0,
    "succ": lambda n: n + 1,
    "plus": lambda p: p[0] + p[1],
    "rzero": lambda _: 0.0,
    "rone": lambda _: 1.0,
    "radd": lambda p: p[0] + p[1],
    "rmul": lambda p: p[0] * p[1],
    # only meaningful under the unsafe-constants flag: its coarity is a sum
    "iszero": lambda n: TRUE_VAL if n == 0 else FALSE_VAL,
}


def apply_constant(name: str, arg):
    try:
        fn = DENOTATIONS[name]
    except KeyError:
        raise EvaluationError(f"constant {name} has no built-in denotation") from None
    return fn(arg)


def show_value(v) -> str:
    match v:
        case ():
            return "()"
        case (a, b):
            return f"({show_value(a)}, {show_value(b)})"
        case InjVal(i, x):
            return f"{'inl' if i == 1 else 'inr'} {show_value(x)}"
    return repr(v)
