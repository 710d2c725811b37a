import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ctrlgeom.controller import (
    CONTROLLER_EXPRESSION,
    ConfigFunction,
    ControllerSpec,
    ParamPoint,
    controller_jet,
)
from ctrlgeom.expr import (
    Add,
    Div,
    ExprSyntaxError,
    Mul,
    Neg,
    Number,
    PowInt,
    Sub,
    Symbol,
    UnboundSymbol,
    UnknownSymbol,
    eval_jet,
    evaluate,
    parse,
    pretty_print,
    symbols_in,
)
from ctrlgeom.jet import DivisionBySingularJet, variable


def test_precedence_and_associativity():
    assert parse("a-b-S") == Sub(Sub(Symbol("a"), Symbol("b")), Symbol("S"))
    assert parse("a/b/S") == Div(Div(Symbol("a"), Symbol("b")), Symbol("S"))
    assert parse("a+b*S") == Add(Symbol("a"), Mul(Symbol("b"), Symbol("S")))
    assert parse("-a^2") == Neg(PowInt(Symbol("a"), 2))
    assert parse("(1+f*S)^n") == PowInt(Add(Number(1.0), Mul(Symbol("f"), Symbol("S"))), "n")


def test_numbers():
    assert parse("2.5e-3") == Number(2.5e-3)
    assert parse(".5") == Number(0.5)


def test_symbols_in_controller():
    assert symbols_in(parse(CONTROLLER_EXPRESSION)) == {"S", "a", "b", "f", "n"}


@pytest.mark.parametrize(
    "text, fragment",
    [
        ("a^b", "integer"),
        ("2a", "implicit multiplication"),
        ("a b", "implicit multiplication"),
        ("(a+b", "')'"),
        ("a+", "number, symbol or '('"),
        ("a $ b", "unexpected character"),
        ("a^-1", "integer"),
    ],
)
def test_syntax_errors(text, fragment):
    with pytest.raises(ExprSyntaxError) as exc:
        parse(text)
    assert fragment in str(exc.value)


def test_error_offsets_are_bytes():
    with pytest.raises(ExprSyntaxError) as exc:
        parse("a+ é")
    assert exc.value.offset == 3
    with pytest.raises(ExprSyntaxError) as exc:
        parse("(a+b")
    assert exc.value.offset == 4


def test_unknown_symbol():
    with pytest.raises(UnknownSymbol) as exc:
        parse("a + k")
    assert exc.value.name == "k" and exc.value.offset == 4
    assert parse("a + k", {"k": 2.0}) == Add(Symbol("a"), Symbol("k"))


def test_unbound_symbol_and_n():
    with pytest.raises(UnboundSymbol):
        evaluate(parse("a+b"), {"a": 1.0})
    with pytest.raises(UnboundSymbol):
        evaluate(parse("a^n"), {"a": 1.0})
    assert evaluate(parse("a^n"), {"a": 2.0}, {"n": 3}) == 8.0
    assert evaluate(parse("n*a"), {"a": 2.0}, {"n": 3}) == 6.0


def test_evaluate_singular_division():
    with pytest.raises(DivisionBySingularJet):
        evaluate(parse("1/(a-a)"), {"a": 0.3})
    with pytest.raises(DivisionBySingularJet):
        eval_jet(parse("1/a"), {"a": variable(0.0, 0, 1, 2)})


def test_eval_jet_lifts_constants():
    j = eval_jet(parse("2*S"), {"S": 3.0}, nvars=2, order=2)
    assert j.value == 6.0 and j.nvars == 2


def test_controller_expression_matches_builtin_jet():
    rng = np.random.default_rng(7)
    expr = ConfigFunction(CONTROLLER_EXPRESSION)
    checked = 0
    for _ in range(200):
        mode = "constant" if rng.random() < 0.5 else "variable"
        spec = ControllerSpec(S=float(rng.uniform(0.5, 2)), n=int(rng.integers(1, 4)), mode=mode,
                              f=float(rng.uniform(-0.8, 2)))
        pt = ParamPoint(*(float(v) for v in rng.uniform(-0.4, 0.4, size=2)), float(rng.uniform(0.1, 2)))
        j1 = controller_jet(spec, pt, 4)
        j2 = expr.jet(spec, pt, 4)
        scale = max(1.0, float(np.max(np.abs(j1.coeffs))))
        assert np.max(np.abs(j1.coeffs - j2.coeffs)) <= 1e-12 * scale
        checked += 1
    assert checked == 200


# -- random AST round trip ------------------------------------------------------

LEAVES = ["S", "a", "b", "f", "k"]


def random_ast(rng: random.Random, depth: int):
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.4:
            v = rng.choice([0.0, 1.0, 2.0, 0.5, 12.0, 1e-5, 3.25, 1e20, 0.1])
            return Number(v)
        return Symbol(rng.choice(LEAVES))
    kind = rng.randrange(6)
    if kind == 0:
        return Neg(random_ast(rng, depth - 1))
    if kind == 1:
        return PowInt(random_ast(rng, depth - 1), rng.choice([0, 1, 2, 3, 7, "n"]))
    op = [Add, Sub, Mul, Div][kind - 2]
    return op(random_ast(rng, depth - 1), random_ast(rng, depth - 1))


def test_pretty_print_roundtrip_1000_random_asts():
    rng = random.Random(12345)
    for _ in range(1000):
        tree = random_ast(rng, 6)
        text = pretty_print(tree)
        assert parse(text, {"k": 1.0}) == tree, text


def test_pretty_print_is_minimal_on_simple_cases():
    assert pretty_print(parse("(a+b)*S")) == "(a+b)*S"
    assert pretty_print(parse("a+(b+S)")) == "a+(b+S)"
    assert pretty_print(parse("(a*b)+S")) == "a*b+S"
    assert pretty_print(parse("((a))^2")) == "a^2"


nodes = st.recursive(
    st.one_of(
        st.sampled_from(LEAVES).map(Symbol),
        st.floats(0, 1e6, allow_nan=False, allow_infinity=False).map(Number),
    ),
    lambda kids: st.one_of(
        kids.map(Neg),
        st.tuples(kids, st.sampled_from([0, 1, 2, 5, "n"])).map(lambda t: PowInt(*t)),
        *[st.tuples(kids, kids).map(lambda t, op=op: op(*t)) for op in (Add, Sub, Mul, Div)],
    ),
    max_leaves=20,
)


@settings(max_examples=300, deadline=None)
@given(nodes)
def test_roundtrip_property(tree):
    assert parse(pretty_print(tree), {"k": 1.0}) == tree
