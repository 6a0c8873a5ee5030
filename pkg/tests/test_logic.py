import random

import pytest
from hypothesis import given, strategies as st

from _gen import GROUND, FormulaGen, ProgramGen
from wpcps import logic as L
from wpcps.algebras import AlgebraConfig, evaluate
from wpcps.cps import cost_formula, cps_term, rewrite_cost
from wpcps.errors import ParseError, TypeMismatch
from wpcps.formula_parser import parse_formula
from wpcps.signature import COST_SIGNATURE, REAL, TRACE_SIGNATURE
from wpcps.types import ANSWER, BOOL, UNIT, Answer, Arrow, PredArrow, Prod, Sum, Type, is_ground

SIG = TRACE_SIGNATURE.merge(COST_SIGNATURE)
X = L.Var("x")


def event_a(body):
    return L.Modal("event[a]", L.Pair(L.Lam("u", UNIT, body), L.UNIT_VAL))


# ---------------------------------------------------------------- typing

def test_constant_true_predicate():
    assert L.typecheck_target(SIG, [], L.Lam("x", UNIT, L.TRUE)) == PredArrow(UNIT)


def test_modal_has_answer_type():
    assert L.typecheck_target(SIG, [], event_a(L.TRUE)) == ANSWER


def test_case_eliminates_only_into_answer():
    bad = L.Case(L.Inj(1, UNIT, L.UNIT_VAL), "a", L.UNIT_VAL, "b", L.UNIT_VAL)
    with pytest.raises(TypeMismatch):
        L.typecheck_target(SIG, [], bad)
    good = L.Case(L.Inj(1, UNIT, L.UNIT_VAL), "a", L.TRUE, "b", L.FALSE)
    assert L.typecheck_target(SIG, [], good) == ANSWER


@pytest.mark.parametrize("term, message", [
    (L.And(L.UNIT_VAL, L.TRUE), "answer type"),
    (L.Lam("x", Arrow(UNIT, UNIT), L.TRUE), "non-answer codomain"),
    (L.Lam("x", None, L.TRUE), "annotation"),
    (L.Add(L.WeightLit(1.0), L.UNIT_VAL), None),
    (L.App(L.UNIT_VAL, L.UNIT_VAL), None),
    (L.Modal("event[a]", L.Pair(L.Lam("u", BOOL, L.TRUE), L.UNIT_VAL)), None),
])
def test_typecheck_target_rejects(term, message):
    with pytest.raises(TypeMismatch, match=message):
        L.typecheck_target(SIG, [], term)


def test_letrec_predicate_typing():
    f = L.LetRecPred("f", "x", UNIT, event_a(L.App(L.Var("f"), X)), L.Var("f"))
    assert L.typecheck_target(SIG, [], f) == PredArrow(UNIT)


def test_weight_arithmetic_over_reals():
    sq = L.Lam("x", REAL, L.Mul(X, X))
    assert L.typecheck_target(SIG, [], L.Modal("unif", L.Pair(sq, L.UNIT_VAL))) == ANSWER


def test_negative_weight_rejected():
    with pytest.raises(ValueError):
        L.WeightLit(-1.0)


def _types_of(t: L.Formula):
    match t:
        case L.Lam(_, ty, _) | L.LetRecPred(_, _, ty, _, _) | L.Forall(_, ty, _) | L.Exists(_, ty, _):
            yield ty
        case L.Inj(_, other, _):
            yield other
    for c in L.children(t):
        yield from _types_of(c)


def _only_answer_arrows(ty: Type) -> bool:
    match ty:
        case Arrow():
            return False
        case PredArrow(d):
            return _only_answer_arrows(d)
        case Prod(l, r) | Sum(l, r):
            return _only_answer_arrows(l) and _only_answer_arrows(r)
    return True


@given(st.integers(0, 2**32), st.sampled_from(["trace", "cost"]))
def test_translated_terms_use_only_predicate_arrows(seed, instance):
    gen = ProgramGen(random.Random(seed), instance)
    m = gen.term({}, gen.random_type(), 5)
    out = cps_term(SIG, m)
    ty = L.typecheck_target(SIG, [], out.term)
    assert isinstance(ty, PredArrow)
    for t in [ty, *_types_of(out.term)]:
        assert is_ground(t) or isinstance(t, Answer) or _only_answer_arrows(t)


# ---------------------------------------------------------------- substitution

def test_substitute_examples():
    assert L.substitute(X, "x", L.TRUE) == L.TRUE
    assert L.substitute(L.Lam("y", UNIT, X), "x", L.TRUE) == L.Lam("y", UNIT, L.TRUE)
    shadowed = L.Lam("x", UNIT, X)
    assert L.substitute(shadowed, "x", L.TRUE) == shadowed


def test_substitute_avoids_capture():
    t = L.Lam("y", UNIT, L.App(X, L.Var("y")))
    out = L.substitute(t, "x", L.Var("y"))
    assert isinstance(out, L.Lam) and out.var != "y"
    assert out.body == L.App(L.Var("y"), L.Var(out.var))


@given(st.integers(0, 2**32), st.sampled_from(GROUND))
def test_substitution_preserves_typing(seed, rho):
    gen = ProgramGen(random.Random(seed), "trace")
    m = gen.term({"x": rho}, gen.random_type(1), 4)
    out = cps_term(SIG, m, [("x", rho)])
    before = L.typecheck_target(SIG, [("x", rho)], out.term)
    v = _value_formula(gen.value(rho))
    assert L.typecheck_target(SIG, [], v) == rho
    after = L.typecheck_target(SIG, [], L.substitute(out.term, "x", v))
    assert before == after


def _value_formula(v) -> L.Formula:
    from wpcps import source as S

    match v:
        case S.UnitVal():
            return L.UNIT_VAL
        case S.Pair(a, b):
            return L.Pair(_value_formula(a), _value_formula(b))
        case S.Inj(i, other, a):
            return L.Inj(i, other, _value_formula(a))
        case S.Const(c, a):
            return L.Const(c, _value_formula(a))
    raise TypeError(v)


# ---------------------------------------------------------------- printing and parsing

def test_print_examples():
    assert L.pretty_print(L.TRUE) == "true"
    assert L.pretty_print(event_a(L.TRUE)) == "<a>(\\u:unit. true, ())"
    unif = L.Modal("unif", L.Pair(L.Lam("x", REAL, L.Mul(X, X)), L.UNIT_VAL))
    assert L.pretty_print(unif) == "unif{\\x:real. x * x, ()}"
    assert L.pretty_print(L.WeightLit(float("inf"))) == "inf"


def test_print_precedence():
    t = L.Add(L.Mul(L.WeightLit(0.5), L.WeightLit(1.0)), L.Mul(L.WeightLit(0.5), L.Add(L.WeightLit(1.0), L.WeightLit(2.0))))
    assert L.pretty_print(t) == "0.5 * 1 + 0.5 * (1 + 2)"
    imp = L.Implies(L.Implies(L.TRUE, L.FALSE), L.Or(L.TRUE, L.And(L.TRUE, L.FALSE)))
    assert L.pretty_print(imp) == "(true => false) => true || true && false"


def test_parse_displayed_cost_formula():
    text = "\\k. letrec g (x, h) = 0.5 * h () + 0.5 * (1 + g ((), h)) in g ((), k)"
    t = parse_formula(text)
    assert L.pretty_print(t, types=False) == text


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_formula("\\x. ")
    with pytest.raises(ParseError):
        parse_formula("true &&")


@given(st.integers(0, 2**32), st.sampled_from(["trace", "cost"]))
def test_round_trip_formulas(seed, instance):
    f = FormulaGen(random.Random(seed), instance).formula([], 6)
    assert L.alpha_equiv(parse_formula(L.pretty_print(f), SIG), f)


@given(st.integers(0, 2**32), st.sampled_from(["trace", "cost"]))
def test_round_trip_translations(seed, instance):
    m, _ = ProgramGen(random.Random(seed), instance, loop_rate=0.1).program()
    out = cps_term(SIG, m).term
    for t in (out, L.normalize(out)):
        assert L.alpha_equiv(parse_formula(L.pretty_print(t), SIG), t)


def test_alpha_equiv_distinguishes_types():
    a, b = L.Lam("x", UNIT, L.TRUE), L.Lam("y", BOOL, L.TRUE)
    assert not L.alpha_equiv(a, b)
    assert L.alpha_equiv(a, b, types=False)


# ---------------------------------------------------------------- normalization

def test_normalize_contracts_redexes():
    t = L.App(L.Lam("x", UNIT, L.App(L.Var("k"), X)), L.UNIT_VAL)
    assert L.normalize(t) == L.App(L.Var("k"), L.UNIT_VAL)
    assert L.normalize(L.Proj(2, L.Pair(L.TRUE, L.FALSE))) == L.FALSE


@given(st.integers(0, 2**32))
def test_normalize_preserves_expected_cost(seed):
    m, _ = ProgramGen(random.Random(seed), "cost").program()
    f = rewrite_cost(cost_formula(cps_term(COST_SIGNATURE, m)))
    config = AlgebraConfig("cost")
    assert evaluate(config, {}, L.normalize(f)).value == pytest.approx(evaluate(config, {}, f).value, abs=1e-12)


def test_json_tree():
    tree = L.to_json(event_a(L.TRUE))
    assert tree["node"] == "Modal" and tree["name"] == "event[a]"
