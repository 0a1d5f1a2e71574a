from fractions import Fraction

import numpy as np
import pytest

from lnecone.expr import (
    BinOp,
    Neg,
    ParseError,
    Polynomial,
    Pow,
    Var,
    evaluate,
    expand,
    initial_form,
    is_squarefree,
    parse,
    realify,
)

XY = ["x", "y"]
XYZ = ["x", "y", "z"]
SPHERES = "((x-t)^2+y^2+z^2-t^2)*((x+t)^2+y^2+z^2-t^2)-t^10"
FOUR_PLANES = "y^4+z^4+x^2*(y+2*z)*(y+3*z)^2+(x+y+z)^11"


def P(text, variables=XYZ):
    return Polynomial.from_string(text, variables)


# --- parsing ---------------------------------------------------------------


def test_parse_cusp_tree():
    tree = parse("y^2 - x^3", XY)
    assert tree == BinOp("-", Pow(Var("y"), 2), Pow(Var("x"), 3))


def test_parse_double_spheres_equation():
    p = expand(parse(SPHERES, ["x", "y", "z", "t"]), ["x", "y", "z", "t"])
    assert p.degree() == 10
    assert p.nvars == 4


def test_unary_minus_binds_looser_than_power():
    assert parse("-x^2", XY) == Neg(Pow(Var("x"), 2))
    assert P("-x^2", XY)((3.0, 0.0)) == -9.0


@pytest.mark.parametrize(
    "text, offset",
    [("x^-1", 2), ("x^1.5", 2), ("x+", 2), ("2 x", 2), ("x*(y", 4), ("q", 0), ("x # y", 2)],
)
def test_parse_errors_carry_offsets(text, offset):
    with pytest.raises(ParseError) as info:
        parse(text, XY)
    assert info.value.offset == offset


def test_decimals_are_exact():
    assert P("0.5*x", XY) == Polynomial(XY, {(1, 0): Fraction(1, 2)})
    assert P("1e-3", XY) == Polynomial.constant(XY, Fraction(1, 1000))


def test_division_by_literal_only():
    assert P("x/4", XY) == P("0.25*x", XY)
    with pytest.raises(ParseError):
        parse("x/y", XY)
    with pytest.raises(ParseError):
        parse("x/0", XY)


def test_abs_needs_a_single_variable():
    parse("abs(x)", XY)
    with pytest.raises(ParseError):
        parse("abs(x+y)", XY)
    with pytest.raises(ValueError):
        expand(parse("abs(x)", XY), XY)


def test_sqrt_only_on_request():
    with pytest.raises(ParseError):
        parse("sqrt(x)", XY)
    tree = parse("sqrt(1-(1-s)^2)", ["s"], allow_sqrt=True)
    assert evaluate(tree, {"s": 1.0}) == 1.0
    with pytest.raises(ValueError):
        evaluate(tree, {"s": 3.0})


# --- expansion and evaluation ------------------------------------------------


def test_like_terms_collect():
    assert P("x + x", XY) == P("2*x", XY)


def test_identity_expands_to_zero():
    assert P("(x+y)^2 - x^2 - 2*x*y - y^2", XY).is_zero()


def test_printing_is_grlex():
    assert str(P("1 + y + x + x*y + y^2 + x^2", XY)) == "x^2+x*y+y^2+x+y+1"


def test_eval_on_set_points():
    f = P("y^2-x^3", XY)
    assert f((1.0, 1.0)) == 0.0
    assert f((0.0, 0.0)) == 0.0


def test_eval_double_spheres_at_unit_t():
    f = P(SPHERES, ["x", "y", "z", "t"])
    assert f((0.0, 0.0, 0.0, 1.0)) == -1.0


def test_grad_cusp():
    np.testing.assert_array_equal(P("y^2-x^3", XY).grad((1.0, 1.0)), [-3.0, 2.0])


def test_eval_many_accepts_complex():
    f = P("x^2+1", ["x"])
    assert f.eval_many(np.array([[1j]]))[0] == 0


# --- initial forms and squarefreeness ---------------------------------------


@pytest.mark.parametrize(
    "text, form",
    [("y^2-x^3", "y^2"), ("y-x^2", "y"), (FOUR_PLANES, "y^4+z^4"), ("y*(x^2+(y-z^2)^2-z^4)", "y*(x^2+y^2)")],
)
def test_initial_form_examples(text, form):
    assert initial_form(P(text)) == P(form)


def test_factored_printing():
    assert initial_form(P("y*(x^2+(y-z^2)^2-z^4)")).factored_str() == "y*(x^2+y^2)"
    assert P("x^2+y^2").factored_str() == "x^2+y^2"


@pytest.mark.parametrize(
    "text, expected",
    [("y^2", False), ("y^4+z^4", True), ("y*(x^2+y^2)", True), ("(x+y)^2*z", False), ("x*y*z", True)],
)
def test_squarefree_examples(text, expected):
    assert is_squarefree(P(text)) is expected


def test_initial_form_of_zero_is_an_error():
    with pytest.raises(ValueError):
        initial_form(Polynomial(XY))


# --- realification ----------------------------------------------------------


def test_realify_linear():
    u, v = realify([P("y", XY)])
    assert u == Polynomial.variable(u.variables, "y_re")
    assert v == Polynomial.variable(v.variables, "y_im")
    assert u.variables == ("x_re", "x_im", "y_re", "y_im")


def test_realify_modulus_cusp():
    f = P("y^2-x^3", XY)
    u, v = realify([f])
    rng = np.random.default_rng(3)
    z = rng.normal(size=(10, 2)) + 1j * rng.normal(size=(10, 2))
    real = np.column_stack([z[:, 0].real, z[:, 0].imag, z[:, 1].real, z[:, 1].imag])
    lhs = u.eval_many(real) ** 2 + v.eval_many(real) ** 2
    rhs = np.abs(f.eval_many(z)) ** 2
    np.testing.assert_allclose(lhs, rhs, rtol=1e-9)
