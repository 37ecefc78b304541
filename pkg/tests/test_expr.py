import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinframe.dual import DomainError
from spinframe.expr import (
    ExprSyntaxError,
    NonIntegerExponentError,
    UnknownIdentifierError,
    eval_dual,
    eval_jet,
    evaluate,
    parse,
    to_source,
)

from oracles import central_difference

R2 = "1 + x1^2 + x2^2 + x3^2"


def test_parse_and_evaluate_examples():
    assert evaluate(parse(f"1/sqrt({R2})"), (0, 0, 0, 0)) == 1.0
    assert evaluate(f"1/sqrt({R2})", (0, 1, 0, 0)) == pytest.approx(0.7071067811865476, abs=2e-16)
    assert evaluate(f"2*x2/({R2})", (0, 1, 0, 0)) == 0.0
    assert evaluate("x0", (3, 0, 0, 0)) == 3.0


def test_precedence():
    assert evaluate("-x1^2", (0, 3, 0, 0)) == -9.0
    assert evaluate("2^3^2", (0, 0, 0, 0)) == 64.0
    assert evaluate("1 - 2 - 3", (0, 0, 0, 0)) == -4.0
    assert evaluate("8/4/2", (0, 0, 0, 0)) == 1.0
    assert evaluate("x1^-2", (0, 2, 0, 0)) == 0.25


def test_syntax_error_offset():
    with pytest.raises(ExprSyntaxError) as info:
        parse("x1 + * 2")
    assert info.value.offset == 5


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifierError) as info:
        parse("x1 + y")
    assert info.value.offset == 5
    with pytest.raises(UnknownIdentifierError):
        parse("log(x1)")


def test_non_integer_exponent():
    with pytest.raises(NonIntegerExponentError):
        parse("x1^0.5")
    with pytest.raises(NonIntegerExponentError):
        parse("x1^x2")


def test_domain_errors_name_subexpression():
    with pytest.raises(DomainError) as info:
        evaluate("1/(x1 - 1)", (0, 1, 0, 0))
    assert "x1 - 1" in info.value.subexpr
    with pytest.raises(DomainError) as info:
        evaluate("2 + sqrt(x1)", (0, -1, 0, 0))
    assert info.value.subexpr == "sqrt(x1)"
    with pytest.raises(DomainError):
        eval_dual("sqrt(x1)", (0, -1, 0, 0))


def test_eval_dual_examples():
    d = eval_dual("x1^2", (0, 3, 0, 0))
    assert d.value == 9.0 and list(d.grad) == [0, 6, 0, 0]
    d = eval_dual("sqrt(1 + x1^2)", (0, 1, 0, 0))
    assert d.value == pytest.approx(math.sqrt(2), abs=1e-15)
    assert np.allclose(d.grad, [0, 1 / math.sqrt(2), 0, 0], atol=1e-15)
    d = eval_dual("5", (1, 2, 3, 4))
    assert d.value == 5.0 and list(d.grad) == [0, 0, 0, 0]


def test_jet_hessian_matches_fd():
    e = parse("sin(x0*x1) + exp(x2)/(1 + x3^2) + tanh(x1 - x3)*cos(x2)")
    x = np.array([0.3, -0.4, 0.2, 0.7])
    j = eval_jet(e, x)
    grad_fd = central_difference(lambda y: eval_dual(e, y).grad, x, 1e-5)
    assert np.max(np.abs(j.hess - grad_fd)) < 1e-8
    assert np.allclose(j.hess, j.hess.T)
    assert np.allclose(j.grad, eval_dual(e, x).grad, atol=1e-15)


# --- random expressions ----------------------------------------------------

def _leaf():
    var = st.sampled_from(["x0", "x1", "x2", "x3"])
    num = st.floats(min_value=-3, max_value=3, allow_nan=False).map(lambda v: f"({v!r})")
    return st.one_of(var, num)


def _extend(children):
    binary = st.tuples(children, st.sampled_from(["+", "-", "*"]), children).map(lambda t: f"({t[0]} {t[1]} {t[2]})")
    # denominators and sqrt arguments are kept positive so the domain is the whole space
    div = st.tuples(children, children).map(lambda t: f"({t[0]})/(2 + ({t[1]})^2)")
    power = st.tuples(children, st.integers(0, 3)).map(lambda t: f"({t[0]})^{t[1]}")
    func = st.tuples(st.sampled_from(["sin", "cos", "tanh"]), children).map(lambda t: f"{t[0]}({t[1]})")
    root = children.map(lambda c: f"sqrt(1 + ({c})^2)")
    expo = children.map(lambda c: f"exp(tanh({c}))")
    neg = children.map(lambda c: f"-({c})")
    return st.one_of(binary, div, power, func, root, expo, neg)


EXPRESSIONS = st.recursive(_leaf(), _extend, max_leaves=12)
POINTS = st.lists(st.floats(min_value=-1.5, max_value=1.5, allow_nan=False), min_size=4, max_size=4)


@settings(max_examples=100, deadline=None, derandomize=True)
@given(EXPRESSIONS, POINTS)
def test_dual_gradient_matches_central_difference(src, x):
    e = parse(src)
    ad = eval_dual(e, x).grad
    fd = central_difference(lambda y: evaluate(e, y), x, 1e-6)
    assert np.all(np.abs(ad - fd) / (1 + np.abs(ad)) < 1e-5)


@settings(max_examples=100, deadline=None, derandomize=True)
@given(EXPRESSIONS)
def test_printer_round_trip_is_fixed_point(src):
    once = to_source(parse(src))
    assert to_source(parse(once)) == once
    assert parse(once) == parse(to_source(parse(once)))
