"""Type syntax shared by the source calculus and the target logic.

Ground constructors (base types, unit, products, empty, sums) are common to
both languages, so the CPS translation of a ground type is literally the same
object.  ``Arrow`` only occurs in source types; ``Answer`` and ``PredArrow``
only occur in target types.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Union


@dataclass(frozen=True)
class Base:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Unit:
    def __str__(self) -> str:
        return "unit"


@dataclass(frozen=True)
class Empty:
    def __str__(self) -> str:
        return "empty"


@dataclass(frozen=True)
class Prod:
    left: "Type"
    right: "Type"

    def __str__(self) -> str:
        return show_type(self)


@dataclass(frozen=True)
class Sum:
    left: "Type"
    right: "Type"

    def __str__(self) -> str:
        return show_type(self)


@dataclass(frozen=True)
class Arrow:
    dom: "Type"
    cod: "Type"

    def __str__(self) -> str:
        return show_type(self)


@dataclass(frozen=True)
class Answer:
    """The answer type R of the target logic."""

    def __str__(self) -> str:
        return "R"


@dataclass(frozen=True)
class PredArrow:
    """The predicate type ``dom -> R``; the only arrow of the target logic."""

    dom: "Type"

    def __str__(self) -> str:
        return show_type(self)


@dataclass(frozen=True)
class Meta:
    """Unification variable used during source type inference."""

    ident: int

    def __str__(self) -> str:
        return f"?{self.ident}"


Type = Union[Base, Unit, Empty, Prod, Sum, Arrow, Answer, PredArrow, Meta]

UNIT = Unit()
EMPTY = Empty()
ANSWER = Answer()
BOOL = Sum(UNIT, UNIT)


def is_ground(t: Type) -> bool:
    match t:
        case Base() | Unit() | Empty():
            return True
        case Prod(l, r) | Sum(l, r):
            return is_ground(l) and is_ground(r)
        case _:
            return False


def is_product_ground(t: Type) -> bool:
    match t:
        case Base() | Unit():
            return True
        case Prod(l, r):
            return is_product_ground(l) and is_product_ground(r)
        case _:
            return False


def underline(n: int) -> Type:
    """The finite type with ``n`` elements: 0, 1, 1+1, (1+1)+1, ..."""
    if n < 0:
        raise ValueError("negative cardinality")
    if n == 0:
        return EMPTY
    t: Type = UNIT
    for _ in range(n - 1):
        t = Sum(t, UNIT)
    return t


def underline_size(t: Type) -> int | None:
    """Inverse of :func:`underline`, or None when ``t`` is not of that shape."""
    if t == EMPTY:
        return 0
    n = 1
    while t != UNIT:
        if not (isinstance(t, Sum) and t.right == UNIT):
            return None
        t = t.left
        n += 1
    return n


def type_size(t: Type) -> int:
    match t:
        case Prod(l, r) | Sum(l, r) | Arrow(l, r):
            return 1 + type_size(l) + type_size(r)
        case PredArrow(d):
            return 1 + type_size(d)
        case _:
            return 1


def enumerable(t: Type) -> bool:
    """Finite ground types built from unit/empty/products/sums."""
    match t:
        case Unit() | Empty():
            return True
        case Prod(l, r) | Sum(l, r):
            return enumerable(l) and enumerable(r)
        case _:
            return False


def base_names(t: Type) -> set[str]:
    match t:
        case Base(name):
            return {name}
        case Prod(l, r) | Sum(l, r) | Arrow(l, r):
            return base_names(l) | base_names(r)
        case PredArrow(d):
            return base_names(d)
        case _:
            return set()


def ground_types(max_size: int, bases: tuple[str, ...] = ("nat",)) -> Iterator[Type]:
    """Every ground type with at most ``max_size`` constructors."""
    by_size: dict[int, list[Type]] = {1: [UNIT, EMPTY, *(Base(b) for b in bases)]}
    for size in range(2, max_size + 1):
        layer: list[Type] = []
        for ls in range(1, size - 1):
            rs = size - 1 - ls
            for l, r in itertools.product(by_size[ls], by_size[rs]):
                layer.append(Prod(l, r))
                layer.append(Sum(l, r))
        by_size[size] = layer
    for size in range(1, max_size + 1):
        yield from by_size[size]


# precedence: -> (0, right assoc) < + (1, left) < * (2, left) < atoms
def show_type(t: Type, prec: int = 0) -> str:
    match t:
        case Arrow(d, c):
            s = f"{show_type(d, 1)} -> {show_type(c, 0)}"
            return f"({s})" if prec > 0 else s
        case PredArrow(d):
            s = f"{show_type(d, 1)} -> R"
            return f"({s})" if prec > 0 else s
        case Sum(l, r):
            s = f"{show_type(l, 1)} + {show_type(r, 2)}"
            return f"({s})" if prec > 1 else s
        case Prod(l, r):
            s = f"{show_type(l, 2)} * {show_type(r, 3)}"
            return f"({s})" if prec > 2 else s
        case _:
            return str(t)
