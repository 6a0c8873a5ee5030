"""Signatures: base types, effect-free constants and algebraic operations."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SignatureError
from .types import BOOL, UNIT, Base, Prod, Type, base_names, is_ground, is_product_ground, show_type, underline, underline_size

INDEX_KINDS = ("symbol", "probability")


@dataclass(frozen=True)
class ConstDecl:
    ar: Type
    car: Type


@dataclass(frozen=True)
class OpDecl:
    ar: Type
    car: Type
    nary: int | None = None
    index: str | None = None  # family of operations such as event[a] or flip[p]


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    offending: tuple[str, ...] = ()

    def describe(self) -> str:
        if self.ok:
            return "signature ok: every constant coarity is built from base types, unit and products"
        names = ", ".join(self.offending)
        return f"constant coarity contains empty, sum or arrow type: {names}"

    def to_json(self) -> dict:
        return {"ok": self.ok, "offending": list(self.offending)}


def split_indexed(name: str) -> tuple[str, str | None]:
    if name.endswith("]") and "[" in name:
        family, _, rest = name.partition("[")
        return family, rest[:-1]
    return name, None


@dataclass(frozen=True)
class Signature:
    base_types: frozenset[str] = frozenset()
    constants: dict[str, ConstDecl] = field(default_factory=dict)
    operations: dict[str, OpDecl] = field(default_factory=dict)

    def __post_init__(self):
        for kind, table in (("constant", self.constants), ("operation", self.operations)):
            for name, decl in table.items():
                for t in (decl.ar, decl.car):
                    if not is_ground(t):
                        raise SignatureError(f"{kind} {name}: {show_type(t)} is not a ground type")
                    unknown = base_names(t) - self.base_types
                    if unknown:
                        raise SignatureError(f"{kind} {name}: undeclared base type(s) {sorted(unknown)}")
        for name, decl in self.operations.items():
            if decl.nary is not None and (underline_size(decl.ar) != decl.nary or decl.car != UNIT):
                raise SignatureError(f"operation {name} declared {decl.nary}-ary but has type "
                                     f"{show_type(decl.ar)} -> {show_type(decl.car)}")
            if decl.index is not None and decl.index not in INDEX_KINDS:
                raise SignatureError(f"operation {name}: unknown index kind {decl.index!r}")
        clash = set(self.constants) & set(self.operations)
        if clash:
            raise SignatureError(f"names declared both as constant and operation: {sorted(clash)}")

    @property
    def n_ary(self) -> dict[str, int]:
        return {name: d.nary for name, d in self.operations.items() if d.nary is not None}

    def is_operation(self, name: str) -> bool:
        family, index = split_indexed(name)
        decl = self.operations.get(family)
        return decl is not None and (index is None) == (decl.index is None)

    def operation(self, name: str) -> OpDecl:
        family, index = split_indexed(name)
        decl = self.operations.get(family)
        if decl is None:
            raise SignatureError(f"unknown operation {name}")
        if (index is None) != (decl.index is None):
            want = "an index" if decl.index else "no index"
            raise SignatureError(f"operation {family} takes {want}")
        if decl.index == "probability":
            try:
                p = float(index)
            except ValueError:
                raise SignatureError(f"{name}: index must be a probability") from None
            if not 0.0 <= p <= 1.0:
                raise SignatureError(f"{name}: probability out of [0, 1]")
        return decl

    def constant(self, name: str) -> ConstDecl:
        try:
            return self.constants[name]
        except KeyError:
            raise SignatureError(f"unknown constant {name}") from None

    def merge(self, other: "Signature") -> "Signature":
        return Signature(self.base_types | other.base_types,
                         {**self.constants, **other.constants},
                         {**self.operations, **other.operations})

    # JSON: {base_types:[...], constants:{name:{ar,car}}, operations:{name:{ar,car,nary,index}}}
    @classmethod
    def from_json(cls, data: dict) -> "Signature":
        from .parser import parse_type

        bases = frozenset(data.get("base_types", []))
        consts = {n: ConstDecl(parse_type(d["ar"]), parse_type(d["car"]))
                  for n, d in data.get("constants", {}).items()}
        ops = {}
        for n, d in data.get("operations", {}).items():
            nary = d.get("nary")
            if nary is not None and "ar" not in d:
                ar, car = underline(nary), UNIT
            else:
                ar, car = parse_type(d["ar"]), parse_type(d["car"])
            ops[n] = OpDecl(ar, car, nary, d.get("index"))
        return cls(bases, consts, ops)

    @classmethod
    def load(cls, path: str | Path) -> "Signature":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise SignatureError(f"{path}: invalid JSON: {e}") from None
        return cls.from_json(data)

    def to_json(self) -> dict:
        ops = {}
        for n, d in self.operations.items():
            entry = {"ar": show_type(d.ar), "car": show_type(d.car)}
            if d.nary is not None:
                entry["nary"] = d.nary
            if d.index is not None:
                entry["index"] = d.index
            ops[n] = entry
        return {
            "base_types": sorted(self.base_types),
            "constants": {n: {"ar": show_type(d.ar), "car": show_type(d.car)} for n, d in self.constants.items()},
            "operations": ops,
        }


def validate_signature(sig: Signature) -> ValidationReport:
    bad = tuple(sorted(n for n, d in sig.constants.items() if not is_product_ground(d.car)))
    return ValidationReport(not bad, bad)


NAT = Base("nat")
REAL = Base("real")

ARITH_CONSTANTS = {
    "zero": ConstDecl(UNIT, NAT),
    "succ": ConstDecl(NAT, NAT),
    "plus": ConstDecl(Prod(NAT, NAT), NAT),
    "rzero": ConstDecl(UNIT, REAL),
    "rone": ConstDecl(UNIT, REAL),
    "radd": ConstDecl(Prod(REAL, REAL), REAL),
    "rmul": ConstDecl(Prod(REAL, REAL), REAL),
}

TRACE_SIGNATURE = Signature(
    frozenset({"nat", "real"}),
    dict(ARITH_CONSTANTS),
    {
        "event": OpDecl(UNIT, UNIT, 1, "symbol"),
        "choice": OpDecl(BOOL, UNIT, 2),
    },
)

COST_SIGNATURE = Signature(
    frozenset({"nat", "real"}),
    dict(ARITH_CONSTANTS),
    {
        "flip": OpDecl(BOOL, UNIT, 2, "probability"),
        "tick": OpDecl(UNIT, UNIT, 1),
        "unif": OpDecl(REAL, UNIT),
    },
)

BUILTIN_SIGNATURES = {"trace": TRACE_SIGNATURE, "cost": COST_SIGNATURE}
