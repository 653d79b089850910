"""Expression language: tokenizer, parser, printer round trips, and
jet/plain evaluation equivalence."""

import math

import numpy as np
import pytest

from gbc import exprlang
from gbc.errors import EvalError, ExprError
from gbc.exprlang import (ExprNode, eval_expr, parse, to_source, tokenize,
                          validate_names)
from gbc.jets import Jet2, jet_var


def test_tokenize_function_power():
    kinds = [(t.kind, t.text) for t in tokenize("sin(u)^2")[:-1]]
    assert kinds == [("ident", "sin"), ("op", "("), ("ident", "u"),
                     ("op", ")"), ("op", "^"), ("number", "2")]


def test_tokenize_scientific():
    toks = tokenize("1e-3*v")
    assert toks[0].kind == "number" and toks[0].value == 1e-3
    assert toks[1].text == "*" and toks[2].text == "v"


def test_tokenize_illegal_character_offset():
    with pytest.raises(ExprError) as err:
        tokenize("2 @ u")
    assert err.value.position == 2


def test_parse_precedence():
    assert eval_expr(parse("1 + 2*3"), {}) == 7.0
    assert eval_expr(parse("2*3 + 4*5"), {}) == 26.0
    assert eval_expr(parse("(1 + 2)*3"), {}) == 9.0


def test_unary_minus_binds_below_power():
    node = parse("-u^2")
    assert node.kind == "unary"
    assert node.children[0].payload == "^"
    assert eval_expr(node, {"u": 3.0}) == -9.0


def test_power_right_associative():
    assert eval_expr(parse("2^3^2"), {}) == 512.0


def test_parse_unexpected_end():
    with pytest.raises(ExprError):
        parse("sin(")


def test_parse_empty():
    with pytest.raises(ExprError):
        parse("   ")


def test_variable_exponent_rejected():
    with pytest.raises(ExprError):
        parse("u^v")


def test_unknown_function_rejected():
    with pytest.raises(ExprError):
        parse("sinh(u)")


def test_eval_sin_squared_jet():
    node = parse("sin(u)^2")
    j = eval_expr(node, {"u": jet_var(0, math.pi / 2, 1)})
    assert j.value == pytest.approx(1.0, abs=1e-15)
    assert j.grad[0] == pytest.approx(0.0, abs=1e-15)
    assert j.hess[0, 0] == pytest.approx(-2.0, abs=1e-12)


def test_eval_parameter():
    assert eval_expr(parse("a*u"), {"a": 2.0, "u": 3.0}) == 6.0


def test_eval_domain_error_carries_position():
    node = parse("1 + ln(u)")
    with pytest.raises(EvalError) as err:
        eval_expr(node, {"u": -1.0})
    assert err.value.position == 4


def test_eval_unbound_variable():
    with pytest.raises(EvalError):
        eval_expr(parse("u + w"), {"u": 1.0})


def test_validate_names():
    node = parse("sin(theta) + amp")
    validate_names(node, {"theta", "amp"})
    with pytest.raises(ExprError):
        validate_names(node, {"theta"})


ROUND_TRIP_SOURCES = [
    "1 + 2*3",
    "-u^2",
    "sin(theta)^2*cos(phi)",
    "(1 + t*sin(theta)^2*cos(phi))*sin(theta)^2",
    "a*u - b/(1 + u^2)",
    "-(u + v)*w",
    "2^3^2",
    "1 - 2 - 3",
    "u/(v/w)",
    "exp(-(x1 + x2)^2)",
    "sqrt(1 + tanh(x1)^2)",
    "1e-3*v + 2.5",
]


@pytest.mark.parametrize("src", ROUND_TRIP_SOURCES)
def test_print_parse_round_trip(src):
    first = parse(src)
    again = parse(to_source(first))
    assert again == first
    # and printing is a fixpoint from there on
    assert to_source(again) == to_source(first)


def _random_expr(rng, names, depth):
    """Random total expression: ln/sqrt arguments are kept positive."""
    if depth == 0 or rng.random() < 0.3:
        r = rng.random()
        if r < 0.5:
            return exprlang.var(str(rng.choice(names)))
        return exprlang.const(round(float(rng.uniform(-2, 2)), 3))
    choice = rng.integers(0, 8)
    if choice <= 3:
        op = "+-*/"[choice]
        left = _random_expr(rng, names, depth - 1)
        right = _random_expr(rng, names, depth - 1)
        if op == "/":
            # keep denominators away from zero
            right = ExprNode("binary", "+", (exprlang.const(2.0),
                                             ExprNode("binary", "^", (right, exprlang.const(2.0)))))
        return ExprNode("binary", op, (left, right))
    if choice == 4:
        return ExprNode("unary", "-", (_random_expr(rng, names, depth - 1),))
    if choice == 5:
        return ExprNode("binary", "^", (_random_expr(rng, names, depth - 1),
                                        exprlang.const(float(rng.integers(2, 4)))))
    func = str(rng.choice(["sin", "cos", "exp", "tanh", "ln", "sqrt"]))
    arg = _random_expr(rng, names, depth - 1)
    if func == "exp":
        arg = ExprNode("call", "tanh", (arg,))      # bounded exponent
    if func in ("ln", "sqrt"):
        arg = ExprNode("binary", "+", (exprlang.const(1.5),
                                       ExprNode("call", "tanh", (arg,))))
    return ExprNode("call", func, (arg,))


def test_fuzzed_jet_value_channel_equals_plain_eval():
    rng = np.random.default_rng(7)
    names = ["u", "v"]
    for _ in range(1000):
        node = _random_expr(rng, names, 4)
        x = {n: float(rng.uniform(-2.0, 2.0)) for n in names}
        plain = eval_expr(node, x)
        jet_bindings = {n: jet_var(i, x[n], 2) for i, n in enumerate(names)}
        jet = eval_expr(node, jet_bindings)
        value = jet.value if isinstance(jet, Jet2) else jet
        # same operation order on the value channel: exact equality
        assert value == plain


def test_fuzzed_round_trip():
    rng = np.random.default_rng(8)
    for _ in range(300):
        node = _random_expr(rng, ["u", "v"], 3)
        assert parse(to_source(node)) == parse(to_source(parse(to_source(node))))
