# KSymplectic project.
#
# Expression parsing, formatting and second-order jets.
#
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ksymplectic.common.errors import (BadExponent, DimensionMismatch, EvalError,
                                       ExprSyntaxError, UnknownIdentifier)
from ksymplectic.geometry.expr import (Add, Call, Div, Lit, Mul, Neg, Pow, Sub, Var, eval_jet1,
                                       eval_jet2, eval_value, format_field, is_constant,
                                       parse_scalar_field)


def test_parse_examples():
    f = parse_scalar_field("y1^2/2", 1, 1)
    assert f.ast == Div(Pow(Var("y1", 1), 2), Lit(2.0))
    g = parse_scalar_field("x1*sin(y2)", 2, 1)
    assert g.ast == Mul(Var("x1", 0), Call("sin", Var("y2", 3)))


def test_parse_precedence():
    assert parse_scalar_field("1+2*x1", 1, 1).ast == Add(Lit(1.0), Mul(Lit(2.0), Var("x1", 0)))
    assert parse_scalar_field("x1-y1-1", 1, 1).ast == Sub(Sub(Var("x1", 0), Var("y1", 1)), Lit(1.0))
    # unary minus is an atom, so it binds tighter than '^'
    assert parse_scalar_field("-y1^2", 1, 1).ast == Pow(Neg(Var("y1", 1)), 2)
    assert parse_scalar_field("-(y1^2)", 1, 1).ast == Neg(Pow(Var("y1", 1), 2))
    assert parse_scalar_field("x1*-y1", 1, 1).ast == Mul(Var("x1", 0), Neg(Var("y1", 1)))
    assert parse_scalar_field("x1^-2", 1, 1).ast == Pow(Var("x1", 0), -2)
    assert eval_value(parse_scalar_field("-y1^2", 1, 1), [0.0, 3.0]) == pytest.approx(9.0)


def test_unary_minus_round_trip():
    for source, text in (("-y1^2", "-y1^2"), ("-(y1^2)", "-(y1^2)"), ("--x1", "--x1"),
                         ("x1-(-y1)", "x1--y1"), ("(-x1)^-3", "-x1^-3")):
        f = parse_scalar_field(source, 1, 1)
        assert format_field(f) == text
        assert parse_scalar_field(text, 1, 1) == f


def test_parse_errors():
    with pytest.raises(UnknownIdentifier) as info:
        parse_scalar_field("foo + 1", 1, 1)
    assert info.value.name == "foo"
    assert info.value.position == 0

    with pytest.raises(UnknownIdentifier):
        # y2 is not a coordinate when n = 1, k = 1
        parse_scalar_field("y2", 1, 1)

    with pytest.raises(BadExponent):
        parse_scalar_field("x1^2.5", 1, 1)

    with pytest.raises(ExprSyntaxError) as info:
        parse_scalar_field("x1 +", 1, 1)
    assert info.value.position == 4

    with pytest.raises(ExprSyntaxError):
        parse_scalar_field("(x1", 1, 1)

    with pytest.raises(ExprSyntaxError):
        parse_scalar_field("", 1, 1)


def test_format_examples():
    assert format_field(parse_scalar_field("2", 1, 1)) == "2"
    assert format_field(parse_scalar_field("y1^2/2", 1, 1)) == "y1^2/2"
    assert format_field(parse_scalar_field("x1*sin(y2)", 2, 1)) == "x1*sin(y2)"
    assert format_field(parse_scalar_field("x1-(y1-1)", 1, 1)) == "x1-(y1-1)"


def test_jet_examples():
    jet = eval_jet2(parse_scalar_field("y1^2/2", 1, 1), [0.0, 3.0])
    assert jet.value == pytest.approx(4.5)
    assert np.allclose(jet.grad, [0.0, 3.0])
    assert np.allclose(jet.hess, [[0.0, 0.0], [0.0, 1.0]])

    jet = eval_jet2(parse_scalar_field("x1", 1, 1), [0.3, -0.7])
    assert np.array_equal(jet.grad, [1.0, 0.0])
    assert not np.any(jet.hess)

    jet = eval_jet2(parse_scalar_field("exp(y1)*x1", 1, 1), [2.0, 0.0])
    assert jet.value == pytest.approx(2.0)
    assert np.allclose(jet.grad, [1.0, 2.0])
    assert np.allclose(jet.hess, [[0.0, 1.0], [1.0, 2.0]])


def test_first_order_jets_have_no_hessian():
    jet = eval_jet1(parse_scalar_field("sin(x1)*y1", 1, 1), [0.5, 2.0])
    assert jet.hess is None
    assert jet.grad == pytest.approx([2.0 * np.cos(0.5), np.sin(0.5)])


def test_eval_errors():
    with pytest.raises(EvalError) as info:
        eval_value(parse_scalar_field("1/x1", 1, 1), [0.0, 1.0])
    assert "division by zero" in str(info.value)

    with pytest.raises(EvalError):
        eval_value(parse_scalar_field("log(y1)", 1, 1), [1.0, -1.0])

    with pytest.raises(EvalError):
        eval_value(parse_scalar_field("sqrt(x1)", 1, 1), [0.0, 1.0])

    with pytest.raises(EvalError):
        eval_value(parse_scalar_field("x1^-1", 1, 1), [0.0, 1.0])

    with pytest.raises(DimensionMismatch):
        eval_value(parse_scalar_field("x1", 1, 1), [0.0, 1.0, 2.0])


def test_is_constant():
    assert is_constant(parse_scalar_field("2*sin(1)^2", 1, 1))
    assert not is_constant(parse_scalar_field("2*y1", 1, 1))


#####################################################################
# Randomized jets against finite differences
#
NAMES = ["x1", "x2", "y1", "y2"]

coordinates = st.tuples(*[st.floats(-1.0, 1.0)] * 4).map(np.array)

# bounded building blocks only, so finite differences stay meaningful
smooth_sources = st.recursive(
    st.sampled_from(NAMES) | st.floats(0.5, 1.5).map(lambda c: f"{c:.3f}"),
    lambda inner: st.one_of(
        st.tuples(inner, inner).map(lambda ab: f"{ab[0]}+{ab[1]}"),
        st.tuples(inner, inner).map(lambda ab: f"({ab[0]})-({ab[1]})"),
        st.tuples(inner, inner).map(lambda ab: f"({ab[0]})*({ab[1]})"),
        st.tuples(inner, inner).map(lambda ab: f"({ab[0]})/(2+({ab[1]})^2)"),
        inner.map(lambda a: f"sin({a})"),
        inner.map(lambda a: f"cos({a})"),
        inner.map(lambda a: f"exp(sin({a}))/3"),
        inner.map(lambda a: f"-sin({a})^2"),
    ),
    max_leaves=6)

# any well-formed source, unary minus and negative exponents included
any_sources = st.recursive(
    st.sampled_from(NAMES + ["1", "2", "0.5", "3.25"]),
    lambda inner: st.one_of(
        st.tuples(inner, st.sampled_from("+-*/"), inner).map("".join),
        inner.map(lambda a: f"-{a}"),
        inner.map(lambda a: f"-({a})"),
        st.tuples(inner, st.integers(-3, 3)).map(lambda ae: f"({ae[0]})^{ae[1]}"),
        inner.map(lambda a: f"cos({a})"),
    ),
    max_leaves=10)


def _gradient(f, p):
    return eval_jet1(f, p).grad


@settings(max_examples=200, deadline=None)
@given(smooth_sources, coordinates)
def test_jets_match_finite_differences(source, p):
    f = parse_scalar_field(source, 2, 1)
    h = 1e-4
    jet = eval_jet2(f, p)
    scale = max(1.0, abs(jet.value), float(np.max(np.abs(jet.grad))),
                float(np.max(np.abs(jet.hess))))
    for l in range(4):
        step = np.zeros(4)
        step[l] = h
        grad_fd = (eval_value(f, p + step) - eval_value(f, p - step)) / (2 * h)
        hess_fd = (_gradient(f, p + step) - _gradient(f, p - step)) / (2 * h)
        assert abs(jet.grad[l] - grad_fd) < 1e-5 * scale
        assert np.max(np.abs(jet.hess[:, l] - hess_fd)) < 1e-5 * scale
    assert np.array_equal(jet.hess, jet.hess.T)


@settings(max_examples=200, deadline=None)
@given(any_sources)
def test_format_parse_round_trip(source):
    f = parse_scalar_field(source, 2, 1)
    assert parse_scalar_field(format_field(f), 2, 1) == f
