"""Finite automata over event symbols, used by the trace instance."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path

from .errors import EvaluationError, NondeterministicAutomaton, WpcpsError

Transition = tuple[str, str, str]


def preimage(transitions, symbol: str, states) -> frozenset:
    """``{q | exists q' in states, q -symbol-> q'}`` for an arbitrary transition relation."""
    return frozenset(q for q, a, q2 in transitions if a == symbol and q2 in states)


@dataclass(frozen=True)
class Dfa:
    states: frozenset[str]
    alphabet: frozenset[str]
    transitions: frozenset[Transition]
    initial: str
    finals: frozenset[str]

    def __post_init__(self):
        for q, a, q2 in self.transitions:
            if q not in self.states or q2 not in self.states:
                raise WpcpsError(f"transition {q} -{a}-> {q2} mentions an unknown state")
            if a not in self.alphabet:
                raise WpcpsError(f"transition {q} -{a}-> {q2} uses a symbol outside the alphabet")
        if self.initial not in self.states:
            raise WpcpsError(f"initial state {self.initial} is not a state")
        if not self.finals <= self.states:
            raise WpcpsError("final states must be states")
        if not self.is_deterministic():
            raise NondeterministicAutomaton(
                "automaton is not deterministic: the trace check needs at most one successor "
                "per state and symbol, otherwise events do not distribute over meets")
        # (state, symbol) -> successor, and symbol -> list of (q, q')
        delta = {(q, a): q2 for q, a, q2 in self.transitions}
        object.__setattr__(self, "_delta", delta)

    def is_deterministic(self) -> bool:
        seen = set()
        for q, a, _ in self.transitions:
            if (q, a) in seen:
                return False
            seen.add((q, a))
        return True

    @property
    def universe(self) -> frozenset[str]:
        return self.states

    def step(self, q: str, a: str) -> str | None:
        return self._delta.get((q, a))

    def run(self, q: str, word) -> str | None:
        for a in word:
            q = self.step(q, a)
            if q is None:
                return None
        return q

    def accepts(self, word) -> bool:
        end = self.run(self.initial, word)
        return end is not None and end in self.finals

    def pre(self, symbol: str, states) -> frozenset[str]:
        if symbol not in self.alphabet:
            raise EvaluationError(f"event symbol {symbol!r} is not in the automaton alphabet")
        return preimage(self.transitions, symbol, states)

    def warnings(self) -> list[str]:
        if self.finals != self.states:
            return ["not every state is final; the trace check reads the automaton as if all states were "
                    "final, so the verdict concerns runs staying defined rather than ending in a final state"]
        return []

    @classmethod
    def from_json(cls, data: dict) -> "Dfa":
        try:
            trans = frozenset((t["from"], t["symbol"], t["to"]) for t in data["transitions"])
            return cls(frozenset(data["states"]), frozenset(data["alphabet"]), trans,
                       data["initial"], frozenset(data["finals"]))
        except (KeyError, TypeError) as e:
            raise WpcpsError(f"malformed automaton description: {e}") from None

    @classmethod
    def load(cls, path: str | Path) -> "Dfa":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise WpcpsError(f"{path}: invalid JSON: {e}") from None
        dfa = cls.from_json(data)
        for w in dfa.warnings():
            warnings.warn(w, stacklevel=2)
        return dfa

    def to_json(self) -> dict:
        return {
            "states": sorted(self.states),
            "alphabet": sorted(self.alphabet),
            "transitions": [{"from": q, "symbol": a, "to": q2} for q, a, q2 in sorted(self.transitions)],
            "initial": self.initial,
            "finals": sorted(self.finals),
        }


def a_star(symbols=("a", "b")) -> Dfa:
    """One state with an ``a`` self-loop: accepts exactly ``a*`` (every state final)."""
    return Dfa(frozenset({"q0"}), frozenset(symbols), frozenset({("q0", "a", "q0")}), "q0", frozenset({"q0"}))
