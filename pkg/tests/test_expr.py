"""Canonical form, differentiation, and evaluation of the expression core."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from opfactor.expr import (
    Const,
    DepVar,
    Div,
    Expr,
    Fun,
    FuncSym,
    IndepVar,
    JetVar,
    ONE,
    Power,
    Product,
    Sum,
    Var,
    ZERO,
    const,
    diff,
    evaluate,
    expr_variables,
    is_constant,
    is_zero,
    poly_sqrt,
    render,
    simplify,
    substitute,
    total_derivative,
    u_,
    x_,
)
from opfactor.jet import DerivIndex, canonical_slot
from opfactor.parse import parse_expr


def P(text: str) -> Expr:
    return simplify(parse_expr(text))


# ---------------------------------------------------------------------------
# canonical form


def test_simplify_collects_like_terms():
    assert P("x1 + x1") == P("2*x1")
    assert P("x1*x2 - x2*x1") == ZERO
    assert P("(x1 + 1)^2") == P("x1^2 + 2*x1 + 1")
    assert P("(x1 + x2)*(x1 - x2)") == P("x1^2 - x2^2")


def test_simplify_idempotent_on_samples():
    for text in [
        "x1^3 - 3*x1 + 2",
        "(x1 + u1)^2 / (x1 - 1)",
        "exp(x1)*sin(x2) + exp(x1)*sin(x2)",
        "2/3 * x1 * x2^2 - x2^2 * x1 / 3",
    ]:
        e = simplify(parse_expr(text))
        assert simplify(e) == e


def test_constant_arithmetic():
    assert P("2 + 3*4") == const(14)
    assert P("1/2 + 1/3") == const(Fraction(5, 6))
    assert P("(2/3)^2") == const(Fraction(4, 9))
    assert is_zero(P("5 - 5"))


def test_division_cancellation():
    assert P("x1^2/x1") == P("x1")
    assert P("(6*x1)/4") == P("(3/2)*x1")
    assert P("(x1 - 1)/(x1 - 1)") == ONE
    # quotients agree once the denominator content is normalized out
    assert P("(2*x1 + 2)/(4*x1 + 4)") == P("(x1 + 1)/(2*x1 + 2)")
    assert evaluate(P("(2*x1 + 2)/(4*x1 + 4)"), {IndepVar(1): 3.0}) == pytest.approx(0.5)


def test_division_by_zero_rejected():
    from opfactor.errors import DomainError

    with pytest.raises(DomainError):
        simplify(Div(x_(1), ZERO))


def test_sqrt_of_square_collapses():
    s = simplify(Fun("sqrt", const(5)))
    assert simplify(Product((s, s))) == const(5)
    assert simplify(Power(s, 2)) == const(5)


def test_operator_sugar():
    e = x_(1) + x_(2)
    assert simplify(e) == P("x1 + x2")
    assert simplify(x_(1) * x_(1)) == P("x1^2")
    assert simplify(-x_(1)) == P("-x1")
    assert simplify(x_(1) - x_(1)) == ZERO


def test_render_roundtrip():
    for text in ["x1^2 - 2*x1 + 1", "u1*x2", "exp(x1)", "-x1 - 1", "(1/2)*u1"]:
        e = P(text)
        assert P(render(e)) == e


# ---------------------------------------------------------------------------
# variables and constancy


def test_expr_variables():
    e = P("x1*u1 + exp(x2)")
    names = expr_variables(e)
    assert IndepVar(1) in names
    assert IndepVar(2) in names
    assert DepVar(1) in names


def test_is_constant():
    assert is_constant(const(7))
    assert is_constant(simplify(Fun("sqrt", const(2))))
    assert not is_constant(P("x1"))


def test_substitute():
    e = P("x1^2 + u1")
    out = simplify(substitute(e, {IndepVar(1): const(3)}))
    assert out == P("u1 + 9")
    out2 = simplify(substitute(e, {DepVar(1): P("x1")}))
    assert out2 == P("x1^2 + x1")


# ---------------------------------------------------------------------------
# differentiation


def test_diff_polynomial():
    assert diff(P("x1^3"), IndepVar(1)) == P("3*x1^2")
    assert diff(P("x1*x2"), IndepVar(2)) == P("x1")
    assert diff(P("u1^2"), DepVar(1)) == P("2*u1")
    assert diff(const(5), IndepVar(1)) == ZERO


def test_diff_functions():
    assert diff(P("exp(2*x1)"), IndepVar(1)) == P("2*exp(2*x1)")
    assert diff(P("sin(x1)"), IndepVar(1)) == P("cos(x1)")
    assert diff(P("cos(x1)"), IndepVar(1)) == P("-sin(x1)")
    assert diff(P("log(x1)"), IndepVar(1)) == P("1/x1")


def test_diff_quotient():
    e = P("x1 / (x1 + 1)")
    d = simplify(diff(e, IndepVar(1)))
    assert d == P("1/(x1^2 + 2*x1 + 1)")


def test_funcsym_partial_derivatives():
    f = FuncSym("Y", (), derivs=(), deps=(("x", 1),))
    e = Var(f)
    d = simplify(diff(e, IndepVar(1)))
    assert d == Var(FuncSym("Y", (), derivs=(("x", 1),), deps=(("x", 1),)))
    assert diff(e, IndepVar(2)) == ZERO


def test_funcsym_without_deps_is_constant():
    c = Var(FuncSym("c", (0,)))
    assert diff(c, IndepVar(1)) == ZERO
    assert total_derivative(c, 1, 1) == ZERO


def test_total_derivative_chain_rule():
    e = P("x1*u1")
    d = simplify(total_derivative(e, 1, 1))
    ux = JetVar(1, DerivIndex(1, 1, 1))
    assert d == simplify(u_(1) + x_(1) * Var(ux))


def canon_slots(e: Expr) -> Expr:
    """Send every jet coordinate to its canonical (sorted axis word) slot."""
    mapping = {}
    for v in expr_variables(e):
        if isinstance(v, JetVar):
            mapping[v] = Var(JetVar(v.component, canonical_slot(v.index)))
    return simplify(substitute(e, mapping))


def test_total_derivative_commutes_up_to_slot_twins():
    e = P("x1^2 * x2 + u1*x2")
    d12 = simplify(total_derivative(total_derivative(e, 1, 2), 2, 2))
    d21 = simplify(total_derivative(total_derivative(e, 2, 2), 1, 2))
    assert d12 != d21
    assert canon_slots(d12) == canon_slots(d21)


# ---------------------------------------------------------------------------
# evaluation


def test_evaluate_basic():
    e = P("x1^2 + 2*x1 + 1")
    assert evaluate(e, {IndepVar(1): 2.0}) == pytest.approx(9.0)
    assert evaluate(P("exp(x1)"), {IndepVar(1): 1.0}) == pytest.approx(math.e)
    assert evaluate(P("sqrt(2)"), {}) == pytest.approx(math.sqrt(2))


def test_evaluate_domain_errors():
    from opfactor.errors import DomainError

    with pytest.raises(DomainError):
        evaluate(P("1/x1"), {IndepVar(1): 0.0})
    with pytest.raises(DomainError):
        evaluate(P("log(x1)"), {IndepVar(1): -1.0})
    with pytest.raises(DomainError):
        evaluate(Fun("sqrt", x_(1)), {IndepVar(1): -4.0})


# ---------------------------------------------------------------------------
# polynomial square root


def test_poly_sqrt_perfect_squares():
    assert poly_sqrt(P("x1^2 + 2*x1 + 1")) in (P("x1 + 1"), P("-x1 - 1"))
    assert poly_sqrt(P("4*x1^2")) in (P("2*x1"), P("-2*x1"))
    sq = P("(x1^2 - x2 + 3)^2")
    root = poly_sqrt(sq)
    assert root is not None
    assert simplify(root * root) == sq


def test_poly_sqrt_rejects_non_squares():
    assert poly_sqrt(P("x1")) is None
    assert poly_sqrt(P("x1^2 + 1")) is None
    assert poly_sqrt(P("-x1^2")) is None


# ---------------------------------------------------------------------------
# property tests


@st.composite
def poly_exprs(draw, depth=0):
    leaf = st.one_of(
        st.integers(-4, 4).map(const),
        st.sampled_from([x_(1), x_(2), u_(1)]),
    )
    if depth >= 3:
        return draw(leaf)
    branch = draw(st.integers(0, 3))
    if branch == 0:
        return draw(leaf)
    a = draw(poly_exprs(depth=depth + 1))
    b = draw(poly_exprs(depth=depth + 1))
    if branch == 1:
        return Sum((a, b))
    if branch == 2:
        return Product((a, b))
    return Power(a, draw(st.integers(0, 2)))


BINDINGS = {IndepVar(1): 1.25, IndepVar(2): -0.5, DepVar(1): 2.0}


@settings(max_examples=150, deadline=None)
@given(poly_exprs())
def test_simplify_preserves_value(e):
    assert evaluate(simplify(e), BINDINGS) == pytest.approx(
        evaluate(e, BINDINGS), rel=1e-9, abs=1e-9
    )


@settings(max_examples=150, deadline=None)
@given(poly_exprs())
def test_simplify_idempotent(e):
    s = simplify(e)
    assert simplify(s) == s


@settings(max_examples=100, deadline=None)
@given(poly_exprs(), poly_exprs())
def test_diff_is_linear(a, b):
    v = IndepVar(1)
    lhs = simplify(diff(simplify(Sum((a, b))), v))
    rhs = simplify(Sum((diff(simplify(a), v), diff(simplify(b), v))))
    assert lhs == rhs


@settings(max_examples=100, deadline=None)
@given(poly_exprs(), poly_exprs())
def test_diff_product_rule(a, b):
    v = IndepVar(1)
    sa, sb = simplify(a), simplify(b)
    lhs = simplify(diff(simplify(Product((sa, sb))), v))
    rhs = simplify(Sum((Product((diff(sa, v), sb)), Product((sa, diff(sb, v))))))
    assert lhs == rhs


@settings(max_examples=60, deadline=None)
@given(poly_exprs())
def test_diff_matches_finite_difference(e):
    s = simplify(e)
    v = IndepVar(1)
    d = simplify(diff(s, v))
    h = 1e-6
    up = dict(BINDINGS)
    dn = dict(BINDINGS)
    up[v] = BINDINGS[v] + h
    dn[v] = BINDINGS[v] - h
    approx = (evaluate(s, up) - evaluate(s, dn)) / (2 * h)
    exact = evaluate(d, BINDINGS)
    assert approx == pytest.approx(exact, rel=1e-4, abs=1e-4)
